#include "scevae/scm.hpp"

#include <cmath>
#include <random>

#include "scevae/error.hpp"
#include "scevae/rng.hpp"

namespace scevae {

std::string to_string(Link link) {
  return link == Link::kLinear ? "linear" : "nonlinear";
}

std::string to_string(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::kNone:
      return "none";
    case InterventionKind::kKnockoff:
      return "knockoff";
    case InterventionKind::kGaussianNoise:
      return "gaussian";
  }
  return "none";
}

Link parse_link(const std::string& s) {
  if (s == "linear") return Link::kLinear;
  if (s == "nonlinear") return Link::kNonlinear;
  throw ConfigError("unknown link '" + s + "' (expected linear|nonlinear)");
}

InterventionKind parse_intervention(const std::string& s) {
  if (s == "none") return InterventionKind::kNone;
  if (s == "knockoff") return InterventionKind::kKnockoff;
  if (s == "gaussian" || s == "gaussian_noise") return InterventionKind::kGaussianNoise;
  throw ConfigError("unknown intervention '" + s +
                    "' (expected none|knockoff|gaussian)");
}

void ScmConfig::validate() const {
  for (double v : {noise_var1, noise_var2, noise_var3, noise_var4,
                   intervention_noise_var}) {
    if (!(v >= 0.0)) throw ConfigError("noise variances must be >= 0");
  }
  if (n_steps < 2) throw ConfigError("n_steps must be >= 2");
  if (tau < 0) throw ConfigError("tau must be >= 0");
  if (time_varying_b && (n_steps % 2 != 0 || n_steps < 4)) {
    throw ConfigError("time-varying b requires an even n_steps >= 4, got " +
                      std::to_string(n_steps));
  }
}

KeyValues ScmConfig::to_kv() const {
  KeyValues kv;
  kv.set("a", a);
  kv.set("time_varying_b", time_varying_b);
  kv.set("b", b);
  kv.set("s", s);
  kv.set("tau", static_cast<long long>(tau));
  kv.set("c1", c1);
  kv.set("c2", c2);
  kv.set("d1", d1);
  kv.set("d2", d2);
  kv.set("g", g);
  kv.set("h", h);
  kv.set("link", to_string(link));
  kv.set("noise_var1", noise_var1);
  kv.set("noise_var2", noise_var2);
  kv.set("noise_var3", noise_var3);
  kv.set("noise_var4", noise_var4);
  kv.set("intervention_noise_var", intervention_noise_var);
  kv.set("n_steps", static_cast<long long>(n_steps));
  kv.set("z0", z0);
  kv.set("w0", w0);
  kv.set("y0", y0);
  kv.set("seed", std::to_string(seed));
  return kv;
}

ScmConfig ScmConfig::from_kv(const KeyValues& kv, const ScmConfig& base) {
  ScmConfig c = base;
  c.a = kv.get_double("a", c.a);
  c.time_varying_b = kv.get_bool("time_varying_b", c.time_varying_b);
  c.b = kv.get_double("b", c.b);
  c.s = kv.get_double("s", c.s);
  c.tau = static_cast<int>(kv.get_int("tau", c.tau));
  c.c1 = kv.get_double("c1", c.c1);
  c.c2 = kv.get_double("c2", c.c2);
  c.d1 = kv.get_double("d1", c.d1);
  c.d2 = kv.get_double("d2", c.d2);
  c.g = kv.get_double("g", c.g);
  c.h = kv.get_double("h", c.h);
  if (kv.contains("link")) c.link = parse_link(kv.get("link"));
  c.noise_var1 = kv.get_double("noise_var1", c.noise_var1);
  c.noise_var2 = kv.get_double("noise_var2", c.noise_var2);
  c.noise_var3 = kv.get_double("noise_var3", c.noise_var3);
  c.noise_var4 = kv.get_double("noise_var4", c.noise_var4);
  c.intervention_noise_var =
      kv.get_double("intervention_noise_var", c.intervention_noise_var);
  c.n_steps = static_cast<int>(kv.get_int("n_steps", c.n_steps));
  c.z0 = kv.get_double("z0", c.z0);
  c.w0 = kv.get_double("w0", c.w0);
  c.y0 = kv.get_double("y0", c.y0);
  if (kv.contains("seed")) c.seed = std::stoull(kv.get("seed"));
  return c;
}

Series time_varying_b(int n_steps) {
  if (n_steps < 4 || n_steps % 2 != 0) {
    throw ConfigError("time-varying b requires an even length >= 4, got " +
                      std::to_string(n_steps));
  }
  Series b(static_cast<std::size_t>(n_steps), 0.0);
  const int half = n_steps / 2;
  const double slope = 2.0 / static_cast<double>(n_steps - 2);
  for (int t = 1; t <= half - 1; ++t) b[t] = slope * t;
  for (int t = half; t < n_steps; ++t) b[t] = b[n_steps - 1 - t];
  return b;
}

namespace {

double cause_term(const ScmConfig& c, double w) {
  return c.link == Link::kLinear ? c.g * w : c.g * std::exp(c.h * w);
}

}  // namespace

Series effect_recursion(const ScmConfig& config, const Series& z,
                        const Series& cause, const Series& effect_noise) {
  const std::size_t n = z.size();
  if (cause.size() != n || effect_noise.size() != n) {
    throw DataError("effect recursion: series length mismatch");
  }
  Series y(n);
  double prev = config.y0;
  for (std::size_t t = 0; t < n; ++t) {
    prev = config.d1 * prev + config.d2 * z[t] + cause_term(config, cause[t]) +
           effect_noise[t];
    y[t] = prev;
  }
  return y;
}

Series recover_effect_noise(const ScmConfig& config, const Series& z,
                            const Series& w, const Series& y) {
  const std::size_t n = z.size();
  if (w.size() != n || y.size() != n) {
    throw DataError("recover_effect_noise: series length mismatch");
  }
  Series e(n);
  double prev = config.y0;
  for (std::size_t t = 0; t < n; ++t) {
    e[t] = y[t] - config.d1 * prev - config.d2 * z[t] - cause_term(config, w[t]);
    prev = y[t];
  }
  return e;
}

ScmDataset generate(const ScmConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.n_steps);

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ScmDataset d;
  d.config = config;
  d.b = config.time_varying_b ? time_varying_b(config.n_steps)
                              : Series(n, config.b);
  d.z.resize(n);
  d.x.resize(n);
  d.w.resize(n);
  d.effect_noise.resize(n);

  const double sd1 = std::sqrt(config.noise_var1);
  const double sd2 = std::sqrt(config.noise_var2);
  const double sd3 = std::sqrt(config.noise_var3);
  const double sd4 = std::sqrt(config.noise_var4);

  // Draw order per step: e1, e2, e3, e4.
  double z_prev = config.z0;
  double w_prev = config.w0;
  for (std::size_t t = 0; t < n; ++t) {
    const double e1 = sd1 * normal(rng);
    const double e2 = sd2 * normal(rng);
    const double e3 = sd3 * normal(rng);
    const double e4 = sd4 * normal(rng);

    d.z[t] = config.a * z_prev + e1;
    const auto lag = static_cast<std::ptrdiff_t>(t) - config.tau;
    const double z_lag = lag >= 0 ? d.z[static_cast<std::size_t>(lag)] : config.z0;
    d.x[t] = d.b[t] * std::tanh(z_lag) + config.s * e2;
    d.w[t] = config.c1 * w_prev + config.c2 * d.z[t] + e3;
    d.effect_noise[t] = e4;

    z_prev = d.z[t];
    w_prev = d.w[t];
  }
  d.y = effect_recursion(config, d.z, d.w, d.effect_noise);
  d.w_hat = d.w;
  d.y_hat = d.y;
  d.ite_true.assign(n, 0.0);
  d.intervention_kind = InterventionKind::kNone;
  return d;
}

ScmDataset apply_intervention(const ScmDataset& data, const Series& w_hat,
                              InterventionKind kind) {
  if (w_hat.size() != data.size()) {
    throw DataError("intervention length " + std::to_string(w_hat.size()) +
                    " does not match dataset length " +
                    std::to_string(data.size()));
  }
  ScmDataset out = data;
  out.w_hat = w_hat;
  out.y_hat = effect_recursion(data.config, data.z, w_hat, data.effect_noise);
  out.ite_true.resize(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    out.ite_true[t] = out.y_hat[t] - out.y[t];
  }
  out.intervention_kind = kind;
  return out;
}

Series gaussian_intervention(const ScmConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(config.intervention_noise_var));
  Series out(static_cast<std::size_t>(config.n_steps));
  for (auto& v : out) v = normal(rng);
  return out;
}

}  // namespace scevae

namespace scevae {
ScmConfig ScmConfig::from_kv(const KeyValues& kv) { return from_kv(kv, ScmConfig{}); }
}  // namespace scevae
