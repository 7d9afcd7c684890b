#include "scevae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "scevae/error.hpp"
#include "scevae/rng.hpp"
#include "scevae/svg_plot.hpp"

namespace scevae {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kLinearTvB: return "linear_tv_b";
    case Scenario::kLinearFixedB: return "linear_fixed_b";
    case Scenario::kNonlinearTvB: return "nonlinear_tv_b";
    case Scenario::kNonlinearFixedB: return "nonlinear_fixed_b";
    case Scenario::kRealData: return "real_data";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  for (Scenario c : {Scenario::kLinearTvB, Scenario::kLinearFixedB, Scenario::kNonlinearTvB,
                     Scenario::kNonlinearFixedB, Scenario::kRealData}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("unknown scenario '" + s +
                    "' (expected linear_tv_b, linear_fixed_b, nonlinear_tv_b, "
                    "nonlinear_fixed_b or real_data)");
}

std::vector<Scenario> synthetic_scenarios() {
  return {Scenario::kLinearTvB, Scenario::kLinearFixedB, Scenario::kNonlinearTvB,
          Scenario::kNonlinearFixedB};
}

bool is_synthetic(Scenario s) { return s != Scenario::kRealData; }

std::string b_label(Scenario s) {
  switch (s) {
    case Scenario::kLinearTvB:
    case Scenario::kNonlinearTvB: return "time-varying";
    case Scenario::kLinearFixedB:
    case Scenario::kNonlinearFixedB: return "fixed";
    default: return "";
  }
}

ScmConfig scenario_config(Scenario s, const ScmConfig& base) {
  ScmConfig c = base;
  switch (s) {
    case Scenario::kLinearTvB: c.link = Link::kLinear; c.time_varying_b = true; break;
    case Scenario::kLinearFixedB: c.link = Link::kLinear; c.time_varying_b = false; break;
    case Scenario::kNonlinearTvB: c.link = Link::kNonlinear; c.time_varying_b = true; break;
    case Scenario::kNonlinearFixedB: c.link = Link::kNonlinear; c.time_varying_b = false; break;
    case Scenario::kRealData: break;
  }
  return c;
}

TrainConfig desk_profile() {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.epochs = 60;
  c.windows_per_epoch = 20;
  c.patience = 20;
  return c;
}

void ExperimentSpec::validate() const {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (interventions.empty()) throw ConfigError("at least one intervention is required");
  train.validate();
  if (is_synthetic(scenario)) {
    scenario_config(scenario, scm).validate();
  } else {
    if (data_path.empty()) throw ConfigError("real_data scenario needs a data file");
    roles.validate();
  }
  for (int k : latent_dims)
    if (k < 1) throw ConfigError("latent dimensions must be >= 1");
}

KeyValues ExperimentSpec::to_kv() const {
  KeyValues kv = train.to_kv();
  const KeyValues s = scenario_config(scenario, scm).to_kv();
  for (const auto& [k, v] : s.entries()) kv.set(k, v);
  kv.set("scenario", to_string(scenario));
  std::string iv;
  for (auto k : interventions) iv += (iv.empty() ? "" : ",") + to_string(k);
  kv.set("interventions", iv);
  kv.set("s_method", to_string(s_method));
  kv.set("use_auxiliary", inference.use_auxiliary);
  kv.set("experiment_seed", std::to_string(seed));
  kv.set("jobs", static_cast<long long>(jobs));
  if (!is_synthetic(scenario)) {
    kv.set("data", data_path.string());
    kv.set("effect", roles.effect);
    kv.set("cause", roles.cause);
    std::string p;
    for (const auto& n : roles.proxies) p += (p.empty() ? "" : ",") + n;
    kv.set("proxies", p);
    kv.set("proxy_mode", to_string(roles.mode));
    kv.set("start", static_cast<long long>(load.start));
    if (load.length) kv.set("length", static_cast<long long>(*load.length));
    kv.set("noise_seed", std::to_string(load.noise_seed));
  }
  return kv;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_kv(const KeyValues& kv, const ExperimentSpec& base) {
  ExperimentSpec e = base;
  e.train = TrainConfig::from_kv(kv, base.train);
  e.scm = ScmConfig::from_kv(kv, base.scm);
  if (kv.contains("scenario")) e.scenario = parse_scenario(kv.get("scenario"));
  if (kv.contains("interventions")) {
    e.interventions.clear();
    for (const auto& s : split_list(kv.get("interventions"))) {
      e.interventions.push_back(parse_intervention(s));
    }
  }
  e.replications = e.train.replications;
  if (kv.contains("s_method")) e.s_method = parse_s_method(kv.get("s_method"));
  e.inference.use_auxiliary = kv.get_bool("use_auxiliary", base.inference.use_auxiliary);
  if (kv.contains("experiment_seed")) e.seed = std::stoull(kv.get("experiment_seed"));
  e.jobs = static_cast<int>(kv.get_int("jobs", base.jobs));
  if (kv.contains("data")) e.data_path = kv.get("data");
  if (kv.contains("effect")) e.roles.effect = kv.get("effect");
  if (kv.contains("cause")) e.roles.cause = kv.get("cause");
  if (kv.contains("proxies")) e.roles.proxies = split_list(kv.get("proxies"));
  if (kv.contains("proxy_mode")) e.roles.mode = parse_proxy_mode(kv.get("proxy_mode"));
  e.load.start = kv.get_int("start", base.load.start);
  if (kv.contains("length")) e.load.length = kv.get_int("length");
  if (kv.contains("noise_seed")) e.load.noise_seed = std::stoull(kv.get("noise_seed"));
  return e;
}

Architecture architecture_for(const TrainConfig& cfg, const ModelData& data,
                              const std::vector<bool>& binary_proxy) {
  Architecture arch;
  arch.latent_dim = cfg.latent_dim;
  arch.hidden = cfg.hidden;
  arch.depth = cfg.depth;
  arch.proxy_dim = static_cast<int>(data.x.cols());
  arch.binary_proxy = binary_proxy;
  arch.validate();
  return arch;
}

std::uint64_t replication_seed(std::uint64_t base, int index) {
  return derive_seed(base, {0x5265706cu, static_cast<std::uint64_t>(index)});
}

namespace {

Eigen::VectorXd to_vector(const Series& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Series to_series(const Eigen::VectorXd& v) { return Series(v.data(), v.data() + v.size()); }

// Cause knockoff from Q = [w, x]; the model is fitted on the training rows.
Eigen::VectorXd knockoff_cause(const ModelData& raw, const Segment& fit_rows, SMethod method,
                               std::uint64_t fit_seed, std::uint64_t sample_seed) {
  Eigen::MatrixXd q(raw.size(), 1 + raw.x.cols());
  q.col(0) = raw.w;
  q.rightCols(raw.x.cols()) = raw.x;
  std::vector<std::string> names{"w"};
  names.insert(names.end(), raw.proxy_names.begin(), raw.proxy_names.end());
  FeatureMatrix fit(q.middleRows(fit_rows.start, fit_rows.length), names);
  KnockoffFitOptions opts;
  opts.method = method;
  opts.em.seed = fit_seed;
  const KnockoffModel model = fit_knockoff_model(fit, opts);
  return sample_knockoffs(model, q, sample_seed).col(0);
}

}  // namespace

Eigen::VectorXd segment_of(const Eigen::VectorXd& v, const Segment& s) {
  return v.segment(s.start, s.length);
}

Eigen::VectorXd cause_intervention(const ModelData& raw, const Segment& fit_rows,
                                   InterventionKind kind, SMethod method, double noise_var,
                                   std::uint64_t seed) {
  switch (kind) {
    case InterventionKind::kNone:
      return raw.w;
    case InterventionKind::kKnockoff:
      return knockoff_cause(raw, fit_rows, method, derive_seed(seed, {4}), derive_seed(seed, {5}));
    case InterventionKind::kGaussianNoise: {
      ScmConfig c;
      c.n_steps = static_cast<int>(raw.size());
      c.intervention_noise_var = noise_var;
      return to_vector(gaussian_intervention(c, derive_seed(seed, {6})));
    }
  }
  return raw.w;
}

InterventionOutcome evaluate_intervention(const ScevaeParams& params, const EvaluationSetup& e) {
  const Segments& seg = e.prep.segments;
  const auto& stats = e.prep.stats;
  InterventionOutcome io;
  io.kind = e.kind;
  const Eigen::VectorXd w_hat_raw = cause_intervention(e.raw, seg.train, e.kind, e.s_method,
                                                       e.intervention_noise_var, e.seed);
  Eigen::VectorXd w_hat = (w_hat_raw.array() - stats.w_mean) / stats.w_std;
  if (e.kind == InterventionKind::kNone) w_hat = stats.apply(e.raw).w;

  const Branches test_b =
      infer_windowed(params, e.prep.test, segment_of(w_hat, seg.test), e.window_len, e.inference);
  const Branches train_b = infer_windowed(params, e.prep.train, segment_of(w_hat, seg.train),
                                          e.window_len, e.inference);
  io.w_hat_raw = w_hat_raw;
  io.metrics.seed = e.seed;
  io.metrics.rmse_y = rmse_factual(e.prep.test.y, test_b);
  io.metrics.ate_train = ate(train_b);
  io.metrics.ate_test = ate(test_b);
  io.y_test = e.prep.test.y;
  if (e.synth) {
    const ScmDataset iv = apply_intervention(*e.synth, to_series(w_hat_raw), e.kind);
    const Eigen::VectorXd ite = to_vector(iv.ite_true) / stats.y_std;
    const Eigen::VectorXd y_hat = (to_vector(iv.y_hat).array() - stats.y_mean) / stats.y_std;
    io.y_hat_test = segment_of(y_hat, seg.test);
    io.ite_test = segment_of(ite, seg.test);
    io.metrics.rmse_ite = rmse_ite(io.ite_test, test_b);
    io.metrics.rmse_y_hat = rmse_counterfactual(io.y_hat_test, test_b);
  } else {
    io.metrics.rmse_ite = std::numeric_limits<double>::quiet_NaN();
    io.metrics.rmse_y_hat = std::numeric_limits<double>::quiet_NaN();
  }
  io.test_branches = test_b;
  return io;
}

ReplicationOutcome run_replication(const ExperimentSpec& spec, int index) {
  ReplicationOutcome out;
  out.index = index;
  out.seed = replication_seed(spec.seed, index);
  try {
    const std::uint64_t s = out.seed;
    ModelData raw;
    std::vector<bool> binary;
    ScmDataset synth;
    const bool synthetic = is_synthetic(spec.scenario);
    if (synthetic) {
      ScmConfig c = scenario_config(spec.scenario, spec.scm);
      c.seed = derive_seed(s, {1});
      synth = generate(c);
      raw = model_data(synth);
    } else {
      LoadOptions lo = spec.load;
      if (spec.roles.mode == ProxyMode::kUniformNoise) lo.noise_seed = derive_seed(s, {1}) ^ spec.load.noise_seed;
      SeriesSet set = load_csv(spec.data_path, spec.roles, lo);
      raw = set.data;
      binary = set.binary_proxy;
    }

    const PreparedData prep = split_and_normalize(raw, SplitSpec{}, binary);
    out.stats = prep.stats;

    const Architecture arch = architecture_for(spec.train, raw, binary);
    TrainConfig tc = spec.train;
    tc.seed = derive_seed(s, {3});
    const ScevaeParams init = ScevaeParams::create(arch, derive_seed(s, {2}));
    out.training = train(init, tc, prep.train, prep.val, &prep.test);
    const ScevaeParams& params = out.training.params;

    for (InterventionKind kind : spec.interventions) {
      const EvaluationSetup setup{
          raw,           prep,         synthetic ? &synth : nullptr,
          kind,          spec.s_method, spec.inference,
          tc.window_len, synthetic ? synth.config.intervention_noise_var
                                   : spec.scm.intervention_noise_var,
          s};
      out.interventions.push_back(evaluate_intervention(params, setup));
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

const CausalReport* CellResult::report(InterventionKind kind) const {
  for (const auto& r : reports)
    if (r.intervention == kind) return &r;
  return nullptr;
}

CellResult aggregate_cell(const ExperimentSpec& spec, std::vector<ReplicationOutcome> outcomes) {
  CellResult cell;
  cell.scenario = spec.scenario;
  cell.latent_dim = spec.train.latent_dim;
  cell.d2 = spec.scm.d2;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      cell.failures.push_back("replication " + std::to_string(o.index) + ": " + o.error);
    }
  }
  for (std::size_t k = 0; k < spec.interventions.size(); ++k) {
    std::vector<ReplicationMetrics> metrics;
    const ReplicationOutcome* first = nullptr;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      metrics.push_back(o.interventions[k].metrics);
      if (!first) first = &o;
    }
    CausalReport r = aggregate_report(spec.interventions[k], metrics, is_synthetic(spec.scenario));
    if (first) {
      const auto& io = first->interventions[k];
      r.example_branches = io.test_branches;
      r.example_y = io.y_test;
      r.example_y_hat = io.y_hat_test;
      r.y_mean = first->stats.y_mean;
      r.y_std = first->stats.y_std;
    }
    cell.reports.push_back(std::move(r));
  }
  cell.outcomes = std::move(outcomes);
  return cell;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  if (count <= 0) return;
  const int n_threads = std::max(1, std::min(jobs, count));
  if (n_threads == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

CellResult run_cell(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(spec.replications));
  parallel_for(spec.replications, spec.jobs,
               [&](int i) { outcomes[static_cast<std::size_t>(i)] = run_replication(spec, i); });
  return aggregate_cell(spec, std::move(outcomes));
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "latent_dim") return SweepAxis::kLatentDim;
  if (s == "d2") return SweepAxis::kD2;
  throw ConfigError("unknown sweep axis '" + s + "' (expected latent_dim or d2)");
}

std::vector<CellResult> run_sweep(const ExperimentSpec& spec, SweepAxis axis) {
  spec.validate();
  std::vector<ExperimentSpec> specs;
  const std::vector<int> dims =
      axis == SweepAxis::kLatentDim ? spec.latent_dims : std::vector<int>{spec.train.latent_dim};
  for (int k : dims) {
    for (double d2 : spec.d2_values) {
      ExperimentSpec s = spec;
      s.train.latent_dim = k;
      s.scm.d2 = d2;
      specs.push_back(s);
    }
  }
  // Flatten replications across cells so the job limit applies to the sweep.
  const int reps = spec.replications;
  const int total = static_cast<int>(specs.size()) * reps;
  std::vector<ReplicationOutcome> all(static_cast<std::size_t>(total));
  parallel_for(total, spec.jobs, [&](int i) {
    all[static_cast<std::size_t>(i)] =
        run_replication(specs[static_cast<std::size_t>(i / reps)], i % reps);
  });
  std::vector<CellResult> cells;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    std::vector<ReplicationOutcome> o(all.begin() + static_cast<std::ptrdiff_t>(c) * reps,
                                      all.begin() + static_cast<std::ptrdiff_t>(c + 1) * reps);
    cells.push_back(aggregate_cell(specs[c], std::move(o)));
  }
  return cells;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::vector<CheckLine> check_table1(const std::vector<CellResult>& cells) {
  std::vector<CheckLine> out;
  for (const auto& c : cells) {
    if (c.scenario != Scenario::kLinearTvB && c.scenario != Scenario::kNonlinearTvB) continue;
    const CausalReport* ko = c.report(InterventionKind::kKnockoff);
    const CausalReport* ga = c.report(InterventionKind::kGaussianNoise);
    const std::string tag = to_string(c.scenario);
    if (!ko || !ga || ko->replications.empty() || ga->replications.empty()) {
      out.push_back({tag + " ordering", false, "missing knockoff or gaussian results"});
      continue;
    }
    out.push_back({tag + " rmse_ite knockoff < gaussian", ko->rmse_ite.mean < ga->rmse_ite.mean,
                   fmt(ko->rmse_ite.mean) + " vs " + fmt(ga->rmse_ite.mean)});
    out.push_back({tag + " rmse_y_hat knockoff < gaussian",
                   ko->rmse_y_hat.mean < ga->rmse_y_hat.mean,
                   fmt(ko->rmse_y_hat.mean) + " vs " + fmt(ga->rmse_y_hat.mean)});
    if (c.scenario == Scenario::kLinearTvB) {
      out.push_back({tag + " knockoff rmse_ite in 0.34 +- 0.15",
                     std::abs(ko->rmse_ite.mean - 0.34) <= 0.15, fmt(ko->rmse_ite.mean)});
    } else {
      out.push_back({tag + " knockoff rmse_y_hat in 0.70 +- 0.20",
                     std::abs(ko->rmse_y_hat.mean - 0.70) <= 0.20, fmt(ko->rmse_y_hat.mean)});
    }
  }
  return out;
}

int inversions(const std::vector<double>& values) {
  int n = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[i - 1]) ++n;
  return n;
}

std::vector<CheckLine> check_d2_trend(const std::vector<CellResult>& cells) {
  std::vector<CheckLine> out;
  std::vector<int> dims;
  for (const auto& c : cells)
    if (std::find(dims.begin(), dims.end(), c.latent_dim) == dims.end()) dims.push_back(c.latent_dim);
  for (int k : dims) {
    std::vector<const CellResult*> row;
    for (const auto& c : cells)
      if (c.latent_dim == k) row.push_back(&c);
    std::sort(row.begin(), row.end(), [](auto* a, auto* b) { return a->d2 < b->d2; });
    std::vector<double> fy, cy;
    std::string fd, cd;
    for (const auto* c : row) {
      const double f = c->reports.empty() ? std::nan("") : c->reports.front().rmse_y.mean;
      const double h = c->reports.empty() ? std::nan("") : c->reports.front().rmse_y_hat.mean;
      fy.push_back(f);
      cy.push_back(h);
      fd += (fd.empty() ? "" : " ") + fmt(f);
      cd += (cd.empty() ? "" : " ") + fmt(h);
    }
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    const std::string tag = "latent_dim " + std::to_string(k);
    out.push_back({tag + " rmse_y non-decreasing in d2", finite(fy) && inversions(fy) <= 1, fd});
    out.push_back({tag + " rmse_y_hat non-decreasing in d2", finite(cy) && inversions(cy) <= 1, cd});
  }
  return out;
}

std::string table1_text(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "Causal link" << std::setw(15) << "Parameter b"
     << std::setw(17) << "Method" << std::setw(16) << "RMSE_ITE" << std::setw(16) << "RMSE_Y"
     << "RMSE_Y_hat\n";
  for (const auto& c : cells) {
    const std::string link =
        (c.scenario == Scenario::kLinearTvB || c.scenario == Scenario::kLinearFixedB) ? "Linear"
                                                                                       : "Nonlinear";
    for (const auto& r : c.reports) {
      os << std::setw(14) << link << std::setw(15) << b_label(c.scenario) << std::setw(17)
         << method_name(r.intervention) << std::setw(16) << format_mean_se(r.rmse_ite)
         << std::setw(16) << format_mean_se(r.rmse_y) << format_mean_se(r.rmse_y_hat) << '\n';
    }
    for (const auto& f : c.failures) os << "  failed " << f << '\n';
  }
  return os.str();
}

std::string table2_text(const std::vector<CellResult>& cells, const std::string& proxy_label) {
  std::ostringstream os;
  os << std::left << std::setw(17) << "Method" << std::setw(20) << "Proxy" << std::setw(16)
     << "ATE train" << std::setw(16) << "ATE test" << "RMSE_Y\n";
  for (const auto& c : cells) {
    for (const auto& r : c.reports) {
      os << std::setw(17) << method_name(r.intervention) << std::setw(20) << proxy_label
         << std::setw(16) << format_mean_se(r.ate_train) << std::setw(16)
         << format_mean_se(r.ate_test) << format_mean_se(r.rmse_y) << '\n';
    }
    for (const auto& f : c.failures) os << "  failed " << f << '\n';
  }
  return os.str();
}

std::string sweep_csv(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  os << "latent_dim,d2,method,rmse_y,rmse_y_se,rmse_y_hat,rmse_y_hat_se,rmse_ite,rmse_ite_se,"
        "succeeded,failed\n";
  for (const auto& c : cells) {
    for (const auto& r : c.reports) {
      auto se = [](const MeanSe& m) { return m.se ? format_double(*m.se) : std::string(); };
      auto mv = [](const MeanSe& m) {
        return std::isfinite(m.mean) ? format_double(m.mean) : std::string();
      };
      os << c.latent_dim << ',' << format_double(c.d2) << ',' << method_name(r.intervention)
         << ',' << mv(r.rmse_y) << ',' << se(r.rmse_y) << ',' << mv(r.rmse_y_hat) << ','
         << se(r.rmse_y_hat) << ',' << mv(r.rmse_ite) << ',' << se(r.rmse_ite) << ','
         << r.replications.size() << ',' << c.failures.size() << '\n';
    }
  }
  return os.str();
}

namespace {

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void write_cell_plots(const CellResult& cell, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string tag = to_string(cell.scenario);
  for (const auto& r : cell.reports) {
    if (r.example_y.size() == 0) continue;
    LinePlot p;
    p.title = tag + " " + method_name(r.intervention) + " (test segment)";
    p.y_label = "normalized effect";
    p.series.push_back({"observed Y", as_std(r.example_y), "#000000", false});
    p.series.push_back({"E[Y|W,Z]", as_std(r.example_branches.factual), "#1f77b4", false});
    if (r.example_y_hat.size() > 0) {
      p.series.push_back({"Y_hat", as_std(r.example_y_hat), "#7f7f7f", true});
    }
    p.series.push_back({"E[Y|W_hat,Z]", as_std(r.example_branches.counterfactual), "#d62728", false});
    save_svg(dir / (tag + "_" + to_string(r.intervention) + "_branches.svg"), render_svg(p));
  }
  for (const auto& o : cell.outcomes) {
    if (!o.ok) continue;
    LinePlot p;
    p.title = tag + " RMSE_Y per epoch";
    p.x_label = "epoch";
    p.y_label = "RMSE_Y";
    std::vector<double> tr, te;
    for (const auto& e : o.training.history) {
      tr.push_back(e.rmse_y_train);
      te.push_back(e.rmse_y_test);
    }
    p.series.push_back({"train", tr, "", false});
    p.series.push_back({"test", te, "", false});
    save_svg(dir / (tag + "_rmse_curves.svg"), render_svg(p));
    break;
  }
}

void write_sweep_plot(const std::vector<CellResult>& cells, const std::filesystem::path& path) {
  BarChart chart;
  chart.title = "RMSE by latent dimension and d2";
  chart.y_label = "RMSE";
  chart.categories = {"RMSE_Y", "RMSE_Y_hat"};
  for (const auto& c : cells) {
    if (c.reports.empty()) continue;
    const auto& r = c.reports.front();
    BarGroup g;
    std::ostringstream label;
    label << "D_Z=" << c.latent_dim << " d2=" << c.d2;
    g.label = label.str();
    g.values = {r.rmse_y.mean, r.rmse_y_hat.mean};
    g.errors = {r.rmse_y.se.value_or(std::nan("")), r.rmse_y_hat.se.value_or(std::nan(""))};
    chart.groups.push_back(g);
  }
  save_svg(path, render_svg(chart, 1200, 400));
}

}  // namespace scevae
