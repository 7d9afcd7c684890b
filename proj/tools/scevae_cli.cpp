// scevae: generate synthetic data, build knockoffs, train, evaluate and
// reproduce the experiment tables.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scevae/checkpoint.hpp"
#include "scevae/dataio.hpp"
#include "scevae/error.hpp"
#include "scevae/experiment.hpp"
#include "scevae/knockoff.hpp"
#include "scevae/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace scevae;

namespace {

// Options whose values land in a KeyValues under their config key.
class KeyOptions {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    auto* opt = app->add_option(flag, values_[key], help);
    opts_.push_back({key, opt});
  }
  // Flags explicitly given on the command line override `kv`.
  void overlay(KeyValues& kv) const {
    for (const auto& [key, opt] : opts_) {
      if (opt->count() > 0) kv.set(key, values_.at(key));
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> opts_;
};

struct Common {
  std::string config;
  std::string out;
  KeyOptions keys;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value file; explicit flags win")
      ->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory (default runs/<timestamp>)");
}

KeyValues merged(const Common& c) {
  KeyValues kv = c.config.empty() ? KeyValues{} : KeyValues::read(c.config);
  c.keys.overlay(kv);
  return kv;
}

fs::path output_dir(const Common& c) {
  fs::path dir;
  if (!c.out.empty()) {
    dir = c.out;
  } else {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y%m%d-%H%M%S");
    dir = fs::path("runs") / os.str();
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void emit_config(const KeyValues& effective, const fs::path& dir) {
  std::cout << "# effective config\n" << effective.to_string() << std::flush;
  effective.write(dir / "config");
}

void add_scm_keys(CLI::App* app, KeyOptions& k) {
  k.add(app, "--n", "n_steps", "number of time steps");
  k.add(app, "--link", "link", "linear | nonlinear");
  k.add(app, "--time-varying-b", "time_varying_b", "true: triangular b_t profile");
  k.add(app, "--b", "b", "fixed proxy strength");
  for (const char* name : {"a", "s", "tau", "c1", "c2", "d1", "d2", "g", "h", "z0", "w0", "y0"}) {
    k.add(app, std::string("--") + name, name, std::string("coefficient ") + name);
  }
  for (int j = 1; j <= 4; ++j) {
    const std::string key = "noise_var" + std::to_string(j);
    k.add(app, "--noise-var" + std::to_string(j), key, "variance of e" + std::to_string(j));
  }
  k.add(app, "--intervention-noise-var", "intervention_noise_var",
        "variance of the Gaussian intervention");
}

void add_train_keys(CLI::App* app, KeyOptions& k) {
  k.add(app, "--learning-rate", "learning_rate", "AdamW step size");
  k.add(app, "--weight-decay", "weight_decay", "decoupled weight decay");
  k.add(app, "--epochs", "epochs", "maximum epochs");
  k.add(app, "--windows-per-epoch", "windows_per_epoch", "windows per epoch");
  k.add(app, "--window-len", "window_len", "window length");
  k.add(app, "--patience", "patience", "early-stopping patience (0 disables)");
  k.add(app, "--grad-clip-norm", "grad_clip_norm", "global gradient norm limit");
  k.add(app, "--lambda", "lambda", "weight of the latent prior term");
  k.add(app, "--latent-dim", "latent_dim", "latent dimension D_Z");
  k.add(app, "--hidden", "hidden", "LSTM hidden size");
  k.add(app, "--depth", "depth", "stacked LSTM layers");
}

void add_role_keys(CLI::App* app, KeyOptions& k) {
  k.add(app, "--effect", "effect", "effect column (real data)");
  k.add(app, "--cause", "cause", "cause column (real data)");
  k.add(app, "--proxies", "proxies", "comma-separated proxy columns");
  k.add(app, "--proxy-mode", "proxy_mode", "columns | uniform_noise");
  k.add(app, "--start", "start", "first usable row");
  k.add(app, "--length", "length", "number of rows");
  k.add(app, "--noise-seed", "noise_seed", "seed of the uniform-noise proxy");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RoleMap roles_from(const KeyValues& kv) {
  RoleMap r;
  if (kv.contains("effect")) r.effect = kv.get("effect");
  if (kv.contains("cause")) r.cause = kv.get("cause");
  if (kv.contains("proxies")) r.proxies = split_list(kv.get("proxies"));
  if (kv.contains("proxy_mode")) r.mode = parse_proxy_mode(kv.get("proxy_mode"));
  return r;
}

LoadOptions load_from(const KeyValues& kv) {
  LoadOptions o;
  o.start = kv.get_int("start", 0);
  if (kv.contains("length")) o.length = kv.get_int("length");
  if (kv.contains("noise_seed")) o.noise_seed = std::stoull(kv.get("noise_seed"));
  return o;
}

void add_roles(KeyValues& kv, const RoleMap& r, const LoadOptions& o) {
  kv.set("effect", r.effect);
  kv.set("cause", r.cause);
  std::string p;
  for (const auto& n : r.proxies) p += (p.empty() ? "" : ",") + n;
  kv.set("proxies", p);
  kv.set("proxy_mode", to_string(r.mode));
  kv.set("start", static_cast<long long>(o.start));
  if (o.length) kv.set("length", static_cast<long long>(*o.length));
  kv.set("noise_seed", std::to_string(o.noise_seed));
}

// Loaded model inputs: synthetic tables map onto (x, w, y) directly.
struct Inputs {
  ModelData raw;
  std::vector<bool> binary;
  bool synthetic_table = false;
  CsvTable table;
};

Inputs load_inputs(const fs::path& path, const KeyValues& kv) {
  Inputs in;
  in.table = read_csv(path);
  in.synthetic_table = is_scm_table(in.table);
  if (in.synthetic_table) {
    const Eigen::MatrixXd m = numeric_columns(in.table, {"x", "w", "y"});
    in.raw.x = m.col(0);
    in.raw.w = m.col(1);
    in.raw.y = m.col(2);
    in.raw.proxy_names = {"x"};
  } else {
    SeriesSet s = load_series(in.table, roles_from(kv), load_from(kv));
    in.raw = s.data;
    in.binary = s.binary_proxy;
  }
  return in;
}

std::uint64_t seed_of(const KeyValues& kv, const std::string& key, std::uint64_t fallback) {
  return kv.contains(key) ? std::stoull(kv.get(key)) : fallback;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  Common c;
  std::string scenario;
  bool zero_noise = false;
  std::string intervention = "none";
  std::string output;
};

int cmd_generate(GenerateArgs& a) {
  KeyValues kv = merged(a.c);
  ScmConfig base;
  if (!a.scenario.empty()) {
    const Scenario sc = parse_scenario(a.scenario);
    if (!is_synthetic(sc)) throw ConfigError("generate needs a synthetic scenario");
    base = scenario_config(sc, base);
  } else if (kv.contains("scenario")) {
    base = scenario_config(parse_scenario(kv.get("scenario")), base);
  }
  ScmConfig cfg = ScmConfig::from_kv(kv, base);
  if (a.zero_noise) {
    cfg.noise_var1 = cfg.noise_var2 = cfg.noise_var3 = cfg.noise_var4 = 0.0;
  }
  cfg.validate();
  const InterventionKind kind =
      parse_intervention(kv.contains("intervention") ? kv.get("intervention") : a.intervention);
  const fs::path dir = output_dir(a.c);
  KeyValues eff = cfg.to_kv();
  eff.set("intervention", to_string(kind));
  emit_config(eff, dir);

  ScmDataset d = generate(cfg);
  if (kind != InterventionKind::kNone) {
    const ModelData raw = model_data(d);
    const Segments seg = compute_segments(raw.size(), SplitSpec{});
    const Eigen::VectorXd w_hat = cause_intervention(
        raw, seg.train, kind, SMethod::kSdp, cfg.intervention_noise_var, derive_seed(cfg.seed, {7}));
    d = apply_intervention(d, Series(w_hat.data(), w_hat.data() + w_hat.size()), kind);
  }
  const fs::path out = a.output.empty() ? dir / "data.csv" : fs::path(a.output);
  export_dataset(d, out);
  std::cout << "wrote " << out.string() << " (" << d.size() << " rows)\n";
  return 0;
}

// ---------------------------------------------------------------- knockoff

struct KnockoffArgs {
  Common c;
  std::string input;
  std::string columns;
  std::string method = "sdp";
  std::uint64_t seed = 0;
  int k_max = 5;
  std::string output;
};

int cmd_knockoff(KnockoffArgs& a) {
  KeyValues kv = merged(a.c);
  const std::string input = kv.get_string("input", a.input);
  if (input.empty()) throw ConfigError("knockoff needs --input");
  const std::string cols = kv.get_string("columns", a.columns);
  const SMethod method = parse_s_method(kv.get_string("s_method", a.method));
  const std::uint64_t seed = seed_of(kv, "knockoff_seed", a.seed);
  const int k_max = static_cast<int>(kv.get_int("k_max", a.k_max));
  const CsvTable table = read_csv(input);
  const std::vector<std::string> names = cols.empty() ? table.header : split_list(cols);
  const Eigen::MatrixXd q = numeric_columns(table, names);

  const fs::path dir = output_dir(a.c);
  KeyValues eff;
  eff.set("input", input);
  std::string joined;
  for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
  eff.set("columns", joined);
  eff.set("s_method", to_string(method));
  eff.set("knockoff_seed", std::to_string(seed));
  eff.set("k_max", static_cast<long long>(k_max));
  emit_config(eff, dir);

  KnockoffFitOptions opts;
  opts.method = method;
  opts.k_max = k_max;
  opts.em.seed = derive_seed(seed, {1});
  const FeatureMatrix fm(q, names);
  const KnockoffModel model = fit_knockoff_model(fm, opts);
  const Eigen::MatrixXd qk = sample_knockoffs(model, fm, derive_seed(seed, {2}));
  const ExchangeabilityReport rep = exchangeability_diagnostics(q, qk, model.s_vector);

  Eigen::MatrixXd out(q.rows(), 2 * q.cols());
  out << q, qk;
  std::vector<std::string> header = names;
  for (const auto& n : names) header.push_back(n + "_ko");
  const fs::path csv = a.output.empty() ? dir / "knockoffs.csv" : fs::path(a.output);
  write_csv(csv, header, out);
  const std::string text = format_report(model, rep);
  write_text(dir / "knockoff_report.txt", text);
  std::cout << text << "wrote " << csv.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common c;
  std::string data;
  std::uint64_t seed = 0;
  bool full_schedule = false;
};

int cmd_train(TrainArgs& a) {
  KeyValues kv = merged(a.c);
  const std::string data = kv.get_string("data", a.data);
  if (data.empty()) throw ConfigError("train needs --data");
  TrainConfig base = a.full_schedule ? TrainConfig{} : desk_profile();
  TrainConfig cfg = TrainConfig::from_kv(kv, base);
  const std::uint64_t seed = seed_of(kv, "seed", a.seed);
  cfg.seed = derive_seed(seed, {3});
  cfg.validate();
  const Inputs in = load_inputs(data, kv);

  const fs::path dir = output_dir(a.c);
  KeyValues eff = cfg.to_kv();
  eff.set("data", data);
  eff.set("seed", std::to_string(seed));
  if (!in.synthetic_table) add_roles(eff, roles_from(kv), load_from(kv));
  emit_config(eff, dir);

  const PreparedData prep = split_and_normalize(in.raw, SplitSpec{}, in.binary);
  const Architecture arch = architecture_for(cfg, in.raw, in.binary);
  const ScevaeParams init = ScevaeParams::create(arch, derive_seed(seed, {2}));
  const TrainResult r = train(init, cfg, prep.train, prep.val, &prep.test);
  save_checkpoint(dir / "checkpoint", r.params);
  write_text(dir / "history.csv", history_csv(r.history));
  fs::create_directories(dir / "plots");
  LinePlot p;
  p.title = "RMSE_Y per epoch";
  p.x_label = "epoch";
  p.y_label = "RMSE_Y";
  std::vector<double> tr, te;
  for (const auto& e : r.history) {
    tr.push_back(e.rmse_y_train);
    te.push_back(e.rmse_y_test);
  }
  p.series = {{"train", tr, "", false}, {"test", te, "", false}};
  save_svg(dir / "plots" / "rmse_curves.svg", render_svg(p));
  std::cout << "epochs run: " << r.history.size() << "\nbest epoch: " << r.best_epoch
            << "\nbest validation loss: " << format_double(r.best_val_loss) << '\n';
  if (!r.message.empty()) std::cout << r.message << '\n';
  std::cout << "wrote " << (dir / "checkpoint").string() << '\n';
  return r.diverged ? 3 : 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common c;
  std::string data;
  std::string checkpoint;
  std::string scm_config;
  std::string intervention = "knockoff";
  std::string metric = "all";
  std::string method = "sdp";
  std::uint64_t seed = 0;
  bool observed_latent = false;
  int window_len = 100;
};

int cmd_eval(EvalArgs& a) {
  KeyValues kv = merged(a.c);
  const std::string data = kv.get_string("data", a.data);
  const std::string ckpt = kv.get_string("checkpoint", a.checkpoint);
  if (data.empty() || ckpt.empty()) throw ConfigError("eval needs --data and --checkpoint");
  const InterventionKind kind = parse_intervention(kv.get_string("intervention", a.intervention));
  const std::string metric = kv.get_string("metric", a.metric);
  if (metric != "all" && metric != "rmse_ite" && metric != "rmse_y" && metric != "rmse_y_hat" &&
      metric != "ate") {
    throw ConfigError("unknown metric '" + metric + "' (expected all, rmse_ite, rmse_y, rmse_y_hat or ate)");
  }
  const SMethod method = parse_s_method(kv.get_string("s_method", a.method));
  const std::uint64_t seed = seed_of(kv, "seed", a.seed);
  const std::string scm_path = kv.get_string("scm_config", a.scm_config);

  const Inputs in = load_inputs(data, kv);
  std::optional<ScmDataset> synth;
  if (!scm_path.empty()) {
    if (!in.synthetic_table) {
      throw DataError("--scm-config needs a synthetic dataset with z, x, w, y columns");
    }
    const ScmConfig sc = ScmConfig::from_kv(KeyValues::read(scm_path));
    synth = load_scm_dataset(in.table, sc);
  }
  if (!synth && (metric == "rmse_ite" || metric == "rmse_y_hat")) {
    throw DataError(metric +
                    " needs ITE ground truth, which requires synthetic mode (a generated dataset "
                    "and --scm-config)");
  }
  const ScevaeParams params = load_checkpoint(ckpt);

  const fs::path dir = output_dir(a.c);
  KeyValues eff;
  eff.set("data", data);
  eff.set("checkpoint", ckpt);
  if (!scm_path.empty()) eff.set("scm_config", scm_path);
  eff.set("intervention", to_string(kind));
  eff.set("metric", metric);
  eff.set("s_method", to_string(method));
  eff.set("seed", std::to_string(seed));
  eff.set("use_auxiliary", !a.observed_latent);
  eff.set("window_len", static_cast<long long>(a.window_len));
  if (!in.synthetic_table) add_roles(eff, roles_from(kv), load_from(kv));
  emit_config(eff, dir);

  const PreparedData prep = split_and_normalize(in.raw, SplitSpec{}, in.binary);
  InferenceOptions inf;
  inf.use_auxiliary = !a.observed_latent;
  const EvaluationSetup setup{in.raw, prep, synth ? &*synth : nullptr, kind, method, inf,
                              a.window_len,
                              synth ? synth->config.intervention_noise_var : 0.6, seed};
  const InterventionOutcome io = evaluate_intervention(params, setup);
  if (io.test_branches.untrained) std::cerr << "warning: checkpoint has no training steps\n";
  const CausalReport report = aggregate_report(kind, {io.metrics}, synth.has_value());

  std::ostringstream csv;
  if (synth) {
    csv << synthetic_csv_header() << '\n'
        << synthetic_csv_row(to_string(synth->config.link),
                             synth->config.time_varying_b ? "time-varying" : format_double(synth->config.b),
                             report)
        << '\n';
  } else {
    csv << real_csv_header() << '\n' << real_csv_row(to_string(roles_from(kv).mode), report) << '\n';
  }
  write_text(dir / "report.csv", csv.str());

  const Eigen::Index n = io.y_test.size();
  Eigen::MatrixXd series(n, synth ? 6 : 4);
  std::vector<std::string> header{"t", "y", "factual", "counterfactual"};
  series.col(0) = Eigen::VectorXd::LinSpaced(n, static_cast<double>(prep.segments.test.start),
                                             static_cast<double>(prep.segments.test.start + n - 1));
  series.col(1) = io.y_test;
  series.col(2) = io.test_branches.factual;
  series.col(3) = io.test_branches.counterfactual;
  if (synth) {
    series.col(4) = io.y_hat_test;
    series.col(5) = io.ite_test;
    header.push_back("y_hat");
    header.push_back("ite_true");
  }
  write_csv(dir / "branches.csv", header, series);
  fs::create_directories(dir / "plots");
  CellResult cell;
  cell.scenario = synth ? (synth->config.link == Link::kLinear
                               ? (synth->config.time_varying_b ? Scenario::kLinearTvB : Scenario::kLinearFixedB)
                               : (synth->config.time_varying_b ? Scenario::kNonlinearTvB
                                                               : Scenario::kNonlinearFixedB))
                        : Scenario::kRealData;
  CausalReport with_series = report;
  with_series.example_branches = io.test_branches;
  with_series.example_y = io.y_test;
  with_series.example_y_hat = io.y_hat_test;
  cell.reports.push_back(with_series);
  write_cell_plots(cell, dir / "plots");

  if (metric == "all") {
    std::cout << summary_text(report);
  } else {
    const auto& m = io.metrics;
    const double v = metric == "rmse_ite"     ? m.rmse_ite
                     : metric == "rmse_y"     ? m.rmse_y
                     : metric == "rmse_y_hat" ? m.rmse_y_hat
                                              : m.ate_test;
    std::cout << metric << ": " << format_double(v) << '\n';
  }
  std::cout << "wrote " << (dir / "report.csv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- reproduce

struct ReproduceArgs {
  Common c;
  std::string scenario = "all";
  std::string sweep;
  bool check = false;
  bool full_schedule = false;
  std::string data;
  std::string interventions = "knockoff,gaussian";
};

void print_checks(const std::vector<CheckLine>& lines, std::ostream& os) {
  for (const auto& l : lines) {
    os << (l.pass ? "PASS " : "FAIL ") << l.name << " (" << l.detail << ")\n";
  }
}

int cmd_reproduce(ReproduceArgs& a) {
  KeyValues kv = merged(a.c);
  ExperimentSpec base;
  if (a.full_schedule) base.train = TrainConfig{};
  if (!kv.contains("interventions")) kv.set("interventions", a.interventions);
  if (!a.data.empty()) kv.set("data", a.data);
  ExperimentSpec spec = ExperimentSpec::from_kv(kv, base);
  if (kv.contains("replications")) spec.replications = static_cast<int>(kv.get_int("replications"));
  spec.train.replications = spec.replications;

  std::vector<Scenario> scenarios;
  const std::string sc = kv.get_string("scenario", a.scenario);
  if (sc == "all") {
    scenarios = synthetic_scenarios();
  } else {
    scenarios = {parse_scenario(sc)};
  }
  spec.scenario = scenarios.front();
  for (Scenario s : scenarios) {
    ExperimentSpec t = spec;
    t.scenario = s;
    t.validate();
  }

  const fs::path dir = output_dir(a.c);
  KeyValues eff = spec.to_kv();
  eff.set("scenario", sc);
  if (!a.sweep.empty()) eff.set("sweep", a.sweep);
  emit_config(eff, dir);
  fs::create_directories(dir / "plots");

  std::ostringstream table;
  std::vector<CheckLine> checks;
  if (!a.sweep.empty()) {
    const SweepAxis axis = parse_sweep_axis(a.sweep);
    if (scenarios.size() != 1) spec.scenario = Scenario::kNonlinearTvB;
    const std::vector<CellResult> cells = run_sweep(spec, axis);
    const std::string csv = sweep_csv(cells);
    write_text(dir / "report.csv", csv);
    table << csv;
    write_sweep_plot(cells, dir / "plots" / ("sweep_" + a.sweep + ".svg"));
    checks = check_d2_trend(cells);
    for (const auto& c : cells)
      for (const auto& f : c.failures) table << "failed: " << f << '\n';
  } else if (scenarios.front() == Scenario::kRealData) {
    const CellResult cell = run_cell(spec);
    const std::string label = to_string(spec.roles.mode) == "columns" ? "meteorological" : "uniform";
    table << table2_text({cell}, label);
    std::ostringstream csv;
    csv << real_csv_header() << '\n';
    for (const auto& r : cell.reports) csv << real_csv_row(label, r) << '\n';
    write_text(dir / "report.csv", csv.str());
    write_cell_plots(cell, dir / "plots");
  } else {
    std::vector<CellResult> cells;
    for (Scenario s : scenarios) {
      ExperimentSpec t = spec;
      t.scenario = s;
      cells.push_back(run_cell(t));
      write_cell_plots(cells.back(), dir / "plots");
      for (const auto& o : cells.back().outcomes) {
        if (!o.ok) continue;
        write_text(dir / (to_string(s) + "_history.csv"), history_csv(o.training.history));
        break;
      }
    }
    table << table1_text(cells);
    std::ostringstream csv;
    csv << synthetic_csv_header() << '\n';
    for (const auto& c : cells) {
      const std::string link =
          (c.scenario == Scenario::kLinearTvB || c.scenario == Scenario::kLinearFixedB) ? "linear"
                                                                                         : "nonlinear";
      const std::string b = b_label(c.scenario) == "fixed" ? format_double(spec.scm.b) : "time-varying";
      for (const auto& r : c.reports) csv << synthetic_csv_row(link, b, r) << '\n';
    }
    write_text(dir / "report.csv", csv.str());
    checks = check_table1(cells);
  }
  write_text(dir / "table.txt", table.str());
  std::cout << table.str();
  if (a.check) {
    std::ostringstream os;
    print_checks(checks, os);
    write_text(dir / "check.txt", os.str());
    std::cout << os.str();
  }
  std::cout << "wrote " << (dir / "report.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential causal effect VAE with knockoff interventions"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "simulate the synthetic structural causal model");
  add_common(g, gen.c);
  add_scm_keys(g, gen.c.keys);
  gen.c.keys.add(g, "--seed", "seed", "simulation seed");
  g->add_option("--scenario", gen.scenario, "linear_tv_b | linear_fixed_b | nonlinear_tv_b | nonlinear_fixed_b");
  g->add_flag("--zero-noise", gen.zero_noise, "set all structural noise variances to 0");
  g->add_option("--intervention", gen.intervention, "none | knockoff | gaussian");
  g->add_option("--output", gen.output, "CSV path (default <out>/data.csv)");

  KnockoffArgs ko;
  auto* k = app.add_subcommand("knockoff", "fit a knockoff model and sample knockoff columns");
  add_common(k, ko.c);
  k->add_option("--input", ko.input, "input CSV");
  k->add_option("--columns", ko.columns, "comma-separated columns (default: all)");
  k->add_option("--method", ko.method, "sdp | equicorrelated");
  k->add_option("--seed", ko.seed, "fit and sampling seed");
  k->add_option("--k-max", ko.k_max, "largest mixture size tried");
  k->add_option("--output", ko.output, "CSV path (default <out>/knockoffs.csv)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the model on a dataset");
  add_common(t, tr.c);
  add_train_keys(t, tr.c.keys);
  add_role_keys(t, tr.c.keys);
  t->add_option("--data", tr.data, "dataset CSV");
  t->add_option("--seed", tr.seed, "initialization and training seed");
  t->add_flag("--full-schedule", tr.full_schedule,
              "start from the full schedule (learning rate 1e-5, 100 x 100 windows)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint under an intervention");
  add_common(e, ev.c);
  add_role_keys(e, ev.c.keys);
  e->add_option("--data", ev.data, "dataset CSV");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file");
  e->add_option("--scm-config", ev.scm_config, "config of a generated dataset (enables ground truth)");
  e->add_option("--intervention", ev.intervention, "knockoff | gaussian | none");
  e->add_option("--metric", ev.metric, "all | rmse_ite | rmse_y | rmse_y_hat | ate");
  e->add_option("--method", ev.method, "sdp | equicorrelated");
  e->add_option("--seed", ev.seed, "intervention seed");
  e->add_option("--window-len", ev.window_len, "evaluation chunk length");
  e->add_flag("--observed-latent", ev.observed_latent, "infer z from observed (w, y)");

  ReproduceArgs rp;
  auto* r = app.add_subcommand("reproduce", "run replications and aggregate the result tables");
  add_common(r, rp.c);
  add_scm_keys(r, rp.c.keys);
  add_train_keys(r, rp.c.keys);
  add_role_keys(r, rp.c.keys);
  rp.c.keys.add(r, "--replications", "replications", "replications per cell");
  rp.c.keys.add(r, "--jobs", "jobs", "parallel replications");
  rp.c.keys.add(r, "--seed", "experiment_seed", "experiment seed");
  rp.c.keys.add(r, "--s-method", "s_method", "sdp | equicorrelated");
  r->add_option("--scenario", rp.scenario, "scenario or 'all' for the four synthetic cells");
  r->add_option("--sweep", rp.sweep, "latent_dim | d2");
  r->add_option("--interventions", rp.interventions, "comma-separated interventions");
  r->add_option("--data", rp.data, "real-data CSV");
  r->add_flag("--check", rp.check, "print pass/fail lines against the target bands");
  r->add_flag("--full-schedule", rp.full_schedule, "use the full training schedule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*k) return cmd_knockoff(ko);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*r) return cmd_reproduce(rp);
  } catch (const ConfigError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return 1;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return 2;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: bad value: " << err.what() << '\n';
    return 1;
  } catch (const std::out_of_range& err) {
    std::cerr << "usage error: value out of range: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
