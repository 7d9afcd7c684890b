#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scevae/model.hpp"
#include "scevae/scm.hpp"
#include "scevae/series_data.hpp"

namespace scevae {

// Factual E[Y | W, Z] and counterfactual E[Y | W_hat, Z] per step.
struct Branches {
  Eigen::VectorXd factual;
  Eigen::VectorXd counterfactual;
  bool untrained = false;
};

// Mean-valued heads used by the test-time pipeline; tests may substitute
// closed-form doubles.
struct InferenceHeads {
  std::function<Eigen::VectorXd(const Eigen::MatrixXd& x)> aux_w;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd& x, const Eigen::VectorXd& w)> aux_y;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w)>
      encode_mean;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Eigen::MatrixXd& z)> decode_y;
};

InferenceHeads heads_from(const ScevaeParams& params);

struct InferenceOptions {
  // true: infer z from auxiliary predictions (w*, y*); false: from observed (w, y).
  bool use_auxiliary = true;
};

// z_bar = posterior mean of q(z | x, y*, w*) with w* = E q(w|x), y* = E q(y|x,w*);
// factual = E p(y | w, z_bar), counterfactual = E p(y | w_hat, z_bar).
Branches infer_counterfactual(const InferenceHeads& heads, const ModelData& data,
                              const Eigen::VectorXd& w_hat,
                              const InferenceOptions& options = {});
Branches infer_counterfactual(const ScevaeParams& params, const ModelData& data,
                              const Eigen::VectorXd& w_hat,
                              const InferenceOptions& options = {});

// Runs the pipeline over consecutive chunks of `window_len` steps (recurrent
// state reset per chunk, as during training) and concatenates the output.
Branches infer_windowed(const ScevaeParams& params, const ModelData& data,
                        const Eigen::VectorXd& w_hat, Eigen::Index window_len,
                        const InferenceOptions& options = {});

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// RMSE between ground-truth ITE and (counterfactual - factual). Throws
// DataError when the ground truth is empty (real-data mode).
double rmse_ite(const Eigen::VectorXd& ite_true, const Branches& branches);
double rmse_factual(const Eigen::VectorXd& y, const Branches& branches);
double rmse_counterfactual(const Eigen::VectorXd& y_hat, const Branches& branches);
// Mean over steps of (counterfactual - factual).
double ate(const Branches& branches);

struct MeanSe {
  double mean = 0.0;
  std::optional<double> se;  // absent with fewer than two finite values
};

// Mean and standard error (sample sd / sqrt(n)) over finite values.
MeanSe mean_se(const std::vector<double>& values);
std::string format_mean_se(const MeanSe& v, int precision = 2);

struct ReplicationMetrics {
  std::uint64_t seed = 0;
  double rmse_ite = 0.0;  // NaN in real-data mode
  double rmse_y = 0.0;
  double rmse_y_hat = 0.0;  // NaN in real-data mode
  double ate_train = 0.0;
  double ate_test = 0.0;
};

struct CausalReport {
  InterventionKind intervention = InterventionKind::kNone;
  std::vector<ReplicationMetrics> replications;
  MeanSe rmse_ite;
  MeanSe rmse_y;
  MeanSe rmse_y_hat;
  MeanSe ate_train;
  MeanSe ate_test;
  MeanSe abs_ate_train;
  MeanSe abs_ate_test;
  bool has_ground_truth = false;
  // Test-segment branch series of the first replication (normalized scale).
  Branches example_branches;
  Eigen::VectorXd example_y;
  Eigen::VectorXd example_y_hat;
  // Normalization of the effect in the first replication.
  double y_mean = 0.0;
  double y_std = 1.0;
};

CausalReport aggregate_report(InterventionKind kind,
                              const std::vector<ReplicationMetrics>& replications,
                              bool has_ground_truth);

std::string method_name(InterventionKind kind);

// CSV layouts: synthetic rows follow the link / b / method / RMSE columns,
// real-data rows follow method / proxy / ATE train / ATE test / RMSE_Y.
std::string synthetic_csv_header();
std::string synthetic_csv_row(const std::string& link, const std::string& b_label,
                              const CausalReport& report);
std::string real_csv_header();
std::string real_csv_row(const std::string& proxy_label, const CausalReport& report);

std::string summary_text(const CausalReport& report);

}  // namespace scevae
