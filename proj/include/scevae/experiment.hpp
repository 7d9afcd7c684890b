#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scevae/causal_eval.hpp"
#include "scevae/dataio.hpp"
#include "scevae/knockoff.hpp"
#include "scevae/scm.hpp"
#include "scevae/trainer.hpp"

namespace scevae {

enum class Scenario { kLinearTvB, kLinearFixedB, kNonlinearTvB, kNonlinearFixedB, kRealData };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);
std::vector<Scenario> synthetic_scenarios();
bool is_synthetic(Scenario s);
// "time-varying" or "fixed"; empty for real data.
std::string b_label(Scenario s);

// Coefficients of a synthetic scenario on top of `base`.
ScmConfig scenario_config(Scenario s, const ScmConfig& base = ScmConfig{});

// Training schedule sized for a single CPU core.
TrainConfig desk_profile();

struct ExperimentSpec {
  Scenario scenario = Scenario::kNonlinearTvB;
  std::vector<InterventionKind> interventions{InterventionKind::kKnockoff,
                                              InterventionKind::kGaussianNoise};
  int replications = 5;
  std::uint64_t seed = 0;
  ScmConfig scm;
  TrainConfig train = desk_profile();
  SMethod s_method = SMethod::kSdp;
  InferenceOptions inference;
  // real-data mode
  std::filesystem::path data_path;
  RoleMap roles;
  LoadOptions load;
  // sweep axes
  std::vector<int> latent_dims{1, 5, 10, 20};
  std::vector<double> d2_values{0.8, 1.0, 1.2, 1.6};
  int jobs = 1;

  void validate() const;
  KeyValues to_kv() const;
  static ExperimentSpec from_kv(const KeyValues& kv, const ExperimentSpec& base);
};

struct InterventionOutcome {
  InterventionKind kind = InterventionKind::kNone;
  ReplicationMetrics metrics;
  Branches test_branches;   // normalized
  Eigen::VectorXd y_test;   // normalized
  Eigen::VectorXd y_hat_test;  // normalized; empty in real-data mode
  Eigen::VectorXd ite_test;    // normalized; empty in real-data mode
  Eigen::VectorXd w_hat_raw;   // whole series
};

struct EvaluationSetup {
  const ModelData& raw;
  const PreparedData& prep;
  const ScmDataset* synth = nullptr;  // ground truth when present
  InterventionKind kind = InterventionKind::kKnockoff;
  SMethod s_method = SMethod::kSdp;
  InferenceOptions inference;
  int window_len = 100;
  double intervention_noise_var = 0.6;
  std::uint64_t seed = 0;
};

Eigen::VectorXd segment_of(const Eigen::VectorXd& v, const Segment& s);

// Intervened cause in raw units. Knockoffs of Q = [w, x] are fitted on
// `fit_rows` and sampled for every row.
Eigen::VectorXd cause_intervention(const ModelData& raw, const Segment& fit_rows,
                                   InterventionKind kind, SMethod method, double noise_var,
                                   std::uint64_t seed);

// Metrics on the test segment (ATE also on the training segment).
InterventionOutcome evaluate_intervention(const ScevaeParams& params, const EvaluationSetup& setup);

struct ReplicationOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainResult training;
  NormalizationStats stats;
  std::vector<InterventionOutcome> interventions;
};

Architecture architecture_for(const TrainConfig& cfg, const ModelData& data,
                              const std::vector<bool>& binary_proxy = {});

// Per-replication seeds are derived from spec.seed and the index.
std::uint64_t replication_seed(std::uint64_t base, int index);

// Generates (or loads) data, trains one model and evaluates it under every
// requested intervention. Exceptions are captured into `error`.
ReplicationOutcome run_replication(const ExperimentSpec& spec, int index);

struct CellResult {
  Scenario scenario = Scenario::kNonlinearTvB;
  int latent_dim = 0;
  double d2 = 0.0;
  std::vector<ReplicationOutcome> outcomes;
  std::vector<CausalReport> reports;  // one per intervention, successful replications only
  std::vector<std::string> failures;

  const CausalReport* report(InterventionKind kind) const;
};

CellResult aggregate_cell(const ExperimentSpec& spec, std::vector<ReplicationOutcome> outcomes);

// Runs every replication of one cell, up to spec.jobs at a time.
CellResult run_cell(const ExperimentSpec& spec);

enum class SweepAxis { kLatentDim, kD2 };
SweepAxis parse_sweep_axis(const std::string& s);

// latent_dim: every (latent_dim, d2) pair; d2: d2 values at the configured
// latent dimension. Cells fail independently.
std::vector<CellResult> run_sweep(const ExperimentSpec& spec, SweepAxis axis);

// Runs `count` independent tasks on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Knockoff-versus-Gaussian ordering and the loose target bands on the
// time-varying-b cells.
std::vector<CheckLine> check_table1(const std::vector<CellResult>& cells);
// Count of adjacent decreases in `values`.
int inversions(const std::vector<double>& values);
// Factual and counterfactual RMSE non-decreasing in d2 up to one inversion.
std::vector<CheckLine> check_d2_trend(const std::vector<CellResult>& cells);

std::string table1_text(const std::vector<CellResult>& cells);
std::string table2_text(const std::vector<CellResult>& cells, const std::string& proxy_label);
std::string sweep_csv(const std::vector<CellResult>& cells);

// Branch overlays and loss curves of the first successful replication.
void write_cell_plots(const CellResult& cell, const std::filesystem::path& dir);
void write_sweep_plot(const std::vector<CellResult>& cells, const std::filesystem::path& path);

}  // namespace scevae
