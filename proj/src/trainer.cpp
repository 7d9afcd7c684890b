#include "scevae/trainer.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "scevae/causal_eval.hpp"
#include "scevae/error.hpp"

namespace scevae {

Segments compute_segments(Eigen::Index n, const SplitSpec& spec) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0) ||
      !(spec.val_fraction >= 0.0 && spec.val_fraction < 1.0)) {
    throw ConfigError("split fractions must lie in [0, 1)");
  }
  const auto test = static_cast<Eigen::Index>(std::llround(spec.test_fraction * n));
  const Eigen::Index train_full = n - test;
  const auto val = static_cast<Eigen::Index>(std::llround(spec.val_fraction * train_full));
  Segments s;
  s.train = {0, train_full - val};
  s.val = {train_full - val, val};
  s.test = {train_full, test};
  if (s.train.length < 2) throw DataError("training segment too short after splitting");
  return s;
}

ModelData NormalizationStats::apply(const ModelData& raw) const {
  ModelData out = raw;
  for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
    out.x.col(j) = (out.x.col(j).array() - x_mean(j)) / x_std(j);
  }
  out.w = (raw.w.array() - w_mean) / w_std;
  out.y = (raw.y.array() - y_mean) / y_std;
  return out;
}

ModelData NormalizationStats::invert(const ModelData& normalized) const {
  ModelData out = normalized;
  for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
    out.x.col(j) = normalized.x.col(j).array() * x_std(j) + x_mean(j);
  }
  out.w = normalized.w.array() * w_std + w_mean;
  out.y = normalized.y.array() * y_std + y_mean;
  return out;
}

namespace {

std::pair<double, double> mean_std(const Eigen::VectorXd& v, const std::string& name) {
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw DataError("variable '" + name + "' has zero variance on the training segment");
  }
  return {mean, sd};
}

}  // namespace

PreparedData split_and_normalize(const ModelData& raw, const SplitSpec& spec,
                                 const std::vector<bool>& binary_proxy) {
  const Eigen::Index n = raw.size();
  if (raw.y.size() != n || raw.x.rows() != n) {
    throw DataError("split_and_normalize: series lengths differ");
  }
  PreparedData p;
  p.segments = compute_segments(n, spec);
  const ModelData train_raw = raw.slice(p.segments.train.start, p.segments.train.length);

  NormalizationStats& st = p.stats;
  st.x_mean.resize(raw.x.cols());
  st.x_std.resize(raw.x.cols());
  for (Eigen::Index j = 0; j < raw.x.cols(); ++j) {
    const bool binary = j < static_cast<Eigen::Index>(binary_proxy.size()) && binary_proxy[j];
    if (binary) {
      st.x_mean(j) = 0.0;
      st.x_std(j) = 1.0;
      continue;
    }
    const std::string name = j < static_cast<Eigen::Index>(raw.proxy_names.size())
                                 ? raw.proxy_names[j]
                                 : "x" + std::to_string(j);
    std::tie(st.x_mean(j), st.x_std(j)) = mean_std(train_raw.x.col(j), name);
  }
  std::tie(st.w_mean, st.w_std) = mean_std(train_raw.w, "w");
  std::tie(st.y_mean, st.y_std) = mean_std(train_raw.y, "y");

  const ModelData all = st.apply(raw);
  p.train = all.slice(p.segments.train.start, p.segments.train.length);
  p.val = all.slice(p.segments.val.start, p.segments.val.length);
  p.test = all.slice(p.segments.test.start, p.segments.test.length);
  return p;
}

Window sample_window(const ModelData& segment, Eigen::Index window_len, Rng& rng) {
  if (window_len < 1) throw ConfigError("window length must be >= 1");
  if (segment.size() < window_len) {
    throw DataError("segment of length " + std::to_string(segment.size()) +
                    " is shorter than the window length " + std::to_string(window_len));
  }
  std::uniform_int_distribution<Eigen::Index> start(0, segment.size() - window_len);
  Window w;
  w.start = start(rng);
  w.data = segment.slice(w.start, window_len);
  return w;
}

void TrainConfig::validate() const {
  if (window_len < 1) throw ConfigError("window_len must be >= 1");
  if (windows_per_epoch < 1) throw ConfigError("windows_per_epoch must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  elbo.validate();
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv.set("window_len", static_cast<long long>(window_len));
  kv.set("windows_per_epoch", static_cast<long long>(windows_per_epoch));
  kv.set("epochs", static_cast<long long>(epochs));
  kv.set("learning_rate", learning_rate);
  kv.set("weight_decay", weight_decay);
  kv.set("beta1", beta1);
  kv.set("beta2", beta2);
  kv.set("epsilon", epsilon);
  kv.set("grad_clip_norm", grad_clip_norm);
  kv.set("patience", static_cast<long long>(patience));
  kv.set("train_seed", std::to_string(seed));
  kv.set("lambda", elbo.lambda);
  kv.set("mc_samples", static_cast<long long>(elbo.mc_samples));
  kv.set("variance_floor", elbo.variance_floor);
  kv.set("replications", static_cast<long long>(replications));
  kv.set("latent_dim", static_cast<long long>(latent_dim));
  kv.set("hidden", static_cast<long long>(hidden));
  kv.set("depth", static_cast<long long>(depth));
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv, const TrainConfig& base) {
  TrainConfig c = base;
  c.window_len = static_cast<int>(kv.get_int("window_len", c.window_len));
  c.windows_per_epoch = static_cast<int>(kv.get_int("windows_per_epoch", c.windows_per_epoch));
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.weight_decay = kv.get_double("weight_decay", c.weight_decay);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.epsilon = kv.get_double("epsilon", c.epsilon);
  c.grad_clip_norm = kv.get_double("grad_clip_norm", c.grad_clip_norm);
  c.patience = static_cast<int>(kv.get_int("patience", c.patience));
  if (kv.contains("train_seed")) c.seed = std::stoull(kv.get("train_seed"));
  c.elbo.lambda = kv.get_double("lambda", c.elbo.lambda);
  c.elbo.mc_samples = static_cast<int>(kv.get_int("mc_samples", c.elbo.mc_samples));
  c.elbo.variance_floor = kv.get_double("variance_floor", c.elbo.variance_floor);
  c.replications = static_cast<int>(kv.get_int("replications", c.replications));
  c.latent_dim = static_cast<int>(kv.get_int("latent_dim", c.latent_dim));
  c.hidden = static_cast<int>(kv.get_int("hidden", c.hidden));
  c.depth = static_cast<int>(kv.get_int("depth", c.depth));
  return c;
}

AdamW::AdamW(const ScevaeParams& shape, const TrainConfig& cfg)
    : m_(shape.zeros_like()),
      v_(shape.zeros_like()),
      lr_(cfg.learning_rate),
      wd_(cfg.weight_decay),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.epsilon) {}

void AdamW::step(ScevaeParams& params, const ScevaeParams& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::vector<Eigen::MatrixXd*> ps, ms, vs;
  std::vector<const Eigen::MatrixXd*> gs;
  params.for_each_tensor([&](const std::string&, Eigen::MatrixXd& m) { ps.push_back(&m); });
  m_.for_each_tensor([&](const std::string&, Eigen::MatrixXd& m) { ms.push_back(&m); });
  v_.for_each_tensor([&](const std::string&, Eigen::MatrixXd& m) { vs.push_back(&m); });
  grad.for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) { gs.push_back(&m); });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i];
    auto& m = *ms[i];
    auto& v = *vs[i];
    const auto& g = *gs[i];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p *= (1.0 - lr_ * wd_);
    p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
  ++params.training_steps;
}

double clip_global_norm(ScevaeParams& grad, double max_norm) {
  double sq = 0.0;
  grad.for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) { sq += m.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grad.for_each_tensor([&](const std::string&, Eigen::MatrixXd& m) { m *= scale; });
  }
  return norm;
}

double validation_loss(const ScevaeParams& params, const ElboConfig& cfg, const ModelData& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  ElboConfig one = cfg;
  one.mc_samples = 1;
  const std::vector<Eigen::MatrixXd> zero_noise{
      Eigen::MatrixXd::Zero(data.size(), params.arch.latent_dim)};
  const ElboTerms t = elbo_with_noise(params, one, data.x, data.w, data.y, zero_noise);
  return t.loss / static_cast<double>(data.size());
}

namespace {

double factual_rmse(const ScevaeParams& params, const ModelData& data, Eigen::Index window_len) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Branches b = infer_windowed(params, data, data.w, window_len);
  return rmse_factual(data.y, b);
}

}  // namespace

TrainResult train(const ScevaeParams& init, const TrainConfig& cfg, const ModelData& train_data,
                  const ModelData& val, const ModelData* test) {
  cfg.validate();
  if (train_data.size() < cfg.window_len) {
    throw DataError("training segment (" + std::to_string(train_data.size()) +
                    " steps) is shorter than window_len " + std::to_string(cfg.window_len));
  }
  Rng rng(cfg.seed);
  ScevaeParams params = init;
  AdamW opt(params, cfg);

  TrainResult result;
  result.params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  const bool has_val = val.size() > 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    double sum = 0.0;
    for (int k = 0; k < cfg.windows_per_epoch; ++k) {
      const Window win = sample_window(train_data, cfg.window_len, rng);
      ScevaeParams grad = params.zeros_like();
      ElboTerms terms;
      try {
        terms = elbo(params, cfg.elbo, win.data.x, win.data.w, win.data.y, rng, &grad);
      } catch (const NumericalError& e) {
        result.diverged = true;
        result.message = std::string("training diverged at epoch ") + std::to_string(epoch) +
                         ": " + e.what();
        if (result.history.empty()) result.params = params;
        return result;
      }
      bool finite = true;
      grad.for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) {
        finite = finite && m.allFinite();
      });
      if (!finite) {
        result.diverged = true;
        result.message = "non-finite gradient at epoch " + std::to_string(epoch);
        if (result.history.empty()) result.params = params;
        return result;
      }
      const double norm = clip_global_norm(grad, cfg.grad_clip_norm);
      if (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm) ++rec.clip_events;
      opt.step(params, grad);
      sum += terms.loss / static_cast<double>(cfg.window_len);
    }
    rec.train_loss = sum / cfg.windows_per_epoch;
    rec.val_loss = has_val ? validation_loss(params, cfg.elbo, val) : rec.train_loss;
    rec.rmse_y_train = factual_rmse(params, train_data, cfg.window_len);
    rec.rmse_y_test = test ? factual_rmse(params, *test, cfg.window_len)
                           : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);

    if (!std::isfinite(rec.val_loss)) {
      result.diverged = true;
      result.message = "non-finite validation loss at epoch " + std::to_string(epoch);
      return result;
    }
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  if (result.history.empty()) {
    result.params = params;
    result.best_val_loss = has_val ? validation_loss(params, cfg.elbo, val)
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,rmse_y_train,rmse_y_test\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
       << ',' << format_double(r.rmse_y_train) << ',' << format_double(r.rmse_y_test) << '\n';
  }
  return os.str();
}

}  // namespace scevae

namespace scevae {
TrainConfig TrainConfig::from_kv(const KeyValues& kv) { return from_kv(kv, TrainConfig{}); }
}  // namespace scevae
