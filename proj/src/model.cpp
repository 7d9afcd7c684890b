#include "scevae/model.hpp"

#include <cmath>
#include <random>

#include "scevae/error.hpp"

namespace scevae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw DataError(std::string("non-finite values in ") + what);
  }
}

void require_steps(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DataError(std::string("length mismatch for ") + what + ": expected " +
                    std::to_string(expected) + " steps, got " + std::to_string(got));
  }
}

void require_cols(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DataError(std::string("dimension mismatch for ") + what + ": expected " +
                    std::to_string(expected) + ", got " + std::to_string(got));
  }
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& c) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols() + c.cols());
  out << a, b, c;
  return out;
}

// Splits a T x 2d head output into (mean, variance = softplus(pre) + floor).
GaussianSequence gaussian_from_head(const Eigen::MatrixXd& out, Eigen::Index offset,
                                    Eigen::Index d, double floor) {
  GaussianSequence g;
  g.mean = out.middleCols(offset, d);
  g.variance = out.middleCols(offset + d, d).unaryExpr(
      [floor](double u) { return softplus(u) + floor; });
  return g;
}

// Accumulates log N(target; mean, var) and writes dLL/d(head output) into the
// mean / pre-variance blocks of `d_out`, scaled by `weight`. Returns the
// log-likelihood and optionally dLL/d(target).
double gaussian_term(const Eigen::MatrixXd& target, const Eigen::MatrixXd& out,
                     Eigen::Index offset, Eigen::Index d, double floor, double weight,
                     Eigen::MatrixXd* d_out, Eigen::MatrixXd* d_target) {
  double ll = 0.0;
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double mu = out(t, offset + j);
      const double pre = out(t, offset + d + j);
      const double var = softplus(pre) + floor;
      const double r = target(t, j) - mu;
      ll += -0.5 * (kLog2Pi + std::log(var) + r * r / var);
      if (d_out) {
        (*d_out)(t, offset + j) += weight * r / var;
        const double d_var = -0.5 / var + 0.5 * r * r / (var * var);
        (*d_out)(t, offset + d + j) += weight * d_var * sigmoid(pre);
      }
      if (d_target) (*d_target)(t, j) += -weight * r / var;
    }
  }
  return ll;
}

double bernoulli_term(const Eigen::MatrixXd& target, const Eigen::MatrixXd& out,
                      Eigen::Index offset, double weight, Eigen::MatrixXd* d_out) {
  double ll = 0.0;
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    for (Eigen::Index j = 0; j < target.cols(); ++j) {
      const double logit = out(t, offset + j);
      const double v = target(t, j);
      ll += v * logit - softplus(logit);
      if (d_out) (*d_out)(t, offset + j) += weight * (v - sigmoid(logit));
    }
  }
  return ll;
}

struct ProxySplit {
  Eigen::MatrixXd continuous;
  Eigen::MatrixXd binary;
};

ProxySplit split_proxy(const Architecture& arch, const Eigen::MatrixXd& x) {
  ProxySplit s;
  s.continuous.resize(x.rows(), arch.continuous_count());
  s.binary.resize(x.rows(), arch.binary_count());
  Eigen::Index c = 0;
  Eigen::Index b = 0;
  for (int j = 0; j < arch.proxy_dim; ++j) {
    if (arch.is_binary(j)) {
      s.binary.col(b++) = x.col(j);
    } else {
      s.continuous.col(c++) = x.col(j);
    }
  }
  return s;
}

void check_proxy(const ScevaeParams& p, const Eigen::MatrixXd& x) {
  require_cols(p.arch.proxy_dim, x.cols(), "proxy x");
  require_finite(x, "proxy x");
}

}  // namespace

double softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double gaussian_log_density(double value, double mean, double variance) {
  const double r = value - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

int Architecture::binary_count() const {
  int n = 0;
  for (int j = 0; j < proxy_dim; ++j) n += is_binary(j) ? 1 : 0;
  return n;
}

void Architecture::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (hidden < 1) throw ConfigError("hidden size must be >= 1");
  if (depth < 1) throw ConfigError("recurrent depth must be >= 1");
  if (proxy_dim < 1) throw ConfigError("proxy_dim must be >= 1");
  if (static_cast<int>(binary_proxy.size()) > proxy_dim) {
    throw ConfigError("binary proxy mask longer than proxy_dim");
  }
}

void ElboConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (!(variance_floor >= 0.0)) throw ConfigError("variance_floor must be >= 0");
}

ScevaeParams ScevaeParams::create(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  const int d = arch.latent_dim;
  const int px = arch.proxy_dim;
  const int h = arch.hidden;
  const int l = arch.depth;
  ScevaeParams p;
  p.arch = arch;
  p.dec_w = SequenceNet::create(d, h, l, 2, rng);
  p.dec_x = SequenceNet::create(d, h, l, 2 * arch.continuous_count() + arch.binary_count(), rng);
  p.dec_y = SequenceNet::create(1 + d, h, l, 2, rng);
  p.enc_z = SequenceNet::create(px + 2, h, l, 2 * d, rng);
  p.aux_w = SequenceNet::create(px, h, l, 2, rng);
  p.aux_y = SequenceNet::create(px + 1, h, l, 2, rng);
  return p;
}

ScevaeParams ScevaeParams::zeros_like() const {
  ScevaeParams z = *this;
  z.for_each_tensor([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

void ScevaeParams::for_each_tensor(
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  dec_w.for_each_tensor("dec_w.", fn);
  dec_x.for_each_tensor("dec_x.", fn);
  dec_y.for_each_tensor("dec_y.", fn);
  enc_z.for_each_tensor("enc_z.", fn);
  aux_w.for_each_tensor("aux_w.", fn);
  aux_y.for_each_tensor("aux_y.", fn);
}

void ScevaeParams::for_each_tensor(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  const_cast<ScevaeParams*>(this)->for_each_tensor(
      [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, m); });
}

std::size_t ScevaeParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

Eigen::VectorXd ScevaeParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for_each_tensor([&](const std::string&, const Eigen::MatrixXd& m) {
    flat.segment(at, m.size()) = m.reshaped();
    at += m.size();
  });
  return flat;
}

void ScevaeParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw ConfigError("unflatten: parameter count mismatch");
  }
  Eigen::Index at = 0;
  for_each_tensor([&](const std::string&, Eigen::MatrixXd& m) {
    m.reshaped() = flat.segment(at, m.size());
    at += m.size();
  });
}

void ScevaeParams::zero_output_heads() {
  for (SequenceNet* net : {&dec_w, &dec_x, &dec_y, &enc_z, &aux_w, &aux_y}) {
    net->w_out.setZero();
    net->b_out.setZero();
  }
}

GaussianSequence encode(const ScevaeParams& p, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        double variance_floor) {
  check_proxy(p, x);
  require_steps(x.rows(), y.size(), "effect y");
  require_steps(x.rows(), w.size(), "cause w");
  require_finite(y, "effect y");
  require_finite(w, "cause w");
  const Eigen::MatrixXd out = forward(p.enc_z, hcat(x, y, w));
  return gaussian_from_head(out, 0, p.arch.latent_dim, variance_floor);
}

GaussianSequence decode_w(const ScevaeParams& p, const Eigen::MatrixXd& z,
                          double variance_floor) {
  require_cols(p.arch.latent_dim, z.cols(), "latent z");
  require_finite(z, "latent z");
  return gaussian_from_head(forward(p.dec_w, z), 0, 1, variance_floor);
}

ProxyDecoding decode_x(const ScevaeParams& p, const Eigen::MatrixXd& z,
                       double variance_floor) {
  require_cols(p.arch.latent_dim, z.cols(), "latent z");
  require_finite(z, "latent z");
  const Eigen::MatrixXd out = forward(p.dec_x, z);
  const Eigen::Index nc = p.arch.continuous_count();
  ProxyDecoding d;
  d.gaussian = gaussian_from_head(out, 0, nc, variance_floor);
  d.bernoulli = out.middleCols(2 * nc, p.arch.binary_count()).unaryExpr(
      [](double v) { return sigmoid(v); });
  return d;
}

GaussianSequence decode_y(const ScevaeParams& p, const Eigen::VectorXd& w,
                          const Eigen::MatrixXd& z, double variance_floor) {
  require_cols(p.arch.latent_dim, z.cols(), "latent z");
  require_steps(z.rows(), w.size(), "cause w");
  require_finite(z, "latent z");
  require_finite(w, "cause w");
  return gaussian_from_head(forward(p.dec_y, hcat(w, z)), 0, 1, variance_floor);
}

GaussianSequence aux_w(const ScevaeParams& p, const Eigen::MatrixXd& x,
                       double variance_floor) {
  check_proxy(p, x);
  return gaussian_from_head(forward(p.aux_w, x), 0, 1, variance_floor);
}

GaussianSequence aux_y(const ScevaeParams& p, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& w, double variance_floor) {
  check_proxy(p, x);
  require_steps(x.rows(), w.size(), "cause w");
  require_finite(w, "cause w");
  return gaussian_from_head(forward(p.aux_y, hcat(x, w)), 0, 1, variance_floor);
}

ElboTerms elbo(const ScevaeParams& p, const ElboConfig& cfg, const Eigen::MatrixXd& x,
               const Eigen::VectorXd& w, const Eigen::VectorXd& y, Rng& rng,
               ScevaeParams* grad) {
  cfg.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> noise(static_cast<std::size_t>(cfg.mc_samples));
  for (auto& e : noise) {
    e.resize(x.rows(), p.arch.latent_dim);
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      for (Eigen::Index t = 0; t < e.rows(); ++t) e(t, j) = normal(rng);
  }
  return elbo_with_noise(p, cfg, x, w, y, noise, grad);
}

ElboTerms elbo_with_noise(const ScevaeParams& p, const ElboConfig& cfg,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                          const Eigen::VectorXd& y, const std::vector<Eigen::MatrixXd>& noise,
                          ScevaeParams* grad) {
  cfg.validate();
  check_proxy(p, x);
  const Eigen::Index steps = x.rows();
  require_steps(steps, w.size(), "cause w");
  require_steps(steps, y.size(), "effect y");
  require_finite(w, "cause w");
  require_finite(y, "effect y");
  if (noise.empty()) throw ConfigError("elbo: at least one noise sample required");
  const int d = p.arch.latent_dim;
  const double floor = cfg.variance_floor;
  const double lambda = cfg.lambda;
  const double inv_m = 1.0 / static_cast<double>(noise.size());
  const ProxySplit xs = split_proxy(p.arch, x);
  const Eigen::Index nc = p.arch.continuous_count();

  ElboTerms terms;
  SequenceCache enc_cache;
  const Eigen::MatrixXd enc_out = forward(p.enc_z, hcat(x, y, w), grad ? &enc_cache : nullptr);
  const GaussianSequence q = gaussian_from_head(enc_out, 0, d, floor);
  const Eigen::MatrixXd sd = q.variance.cwiseSqrt();

  Eigen::MatrixXd d_mu = Eigen::MatrixXd::Zero(steps, d);
  Eigen::MatrixXd d_var = Eigen::MatrixXd::Zero(steps, d);

  for (const Eigen::MatrixXd& eps : noise) {
    require_steps(steps, eps.rows(), "noise sample");
    require_cols(d, eps.cols(), "noise sample");
    const Eigen::MatrixXd z = q.mean + sd.cwiseProduct(eps);

    // lambda (log p(z) - log q(z | .)); with z = mu + sd * eps the q-density
    // reduces to -0.5 (log 2 pi + log var + eps^2).
    double kl = 0.0;
    for (Eigen::Index t = 0; t < steps; ++t)
      for (int j = 0; j < d; ++j) {
        kl += -0.5 * z(t, j) * z(t, j) + 0.5 * std::log(q.variance(t, j)) +
              0.5 * eps(t, j) * eps(t, j);
      }
    terms.kl_term += lambda * kl * inv_m;

    Eigen::MatrixXd d_z = Eigen::MatrixXd::Zero(steps, d);  // dELBO/dz

    // p(w | z)
    SequenceCache cw;
    const Eigen::MatrixXd ow = forward(p.dec_w, z, grad ? &cw : nullptr);
    Eigen::MatrixXd g_ow = Eigen::MatrixXd::Zero(ow.rows(), ow.cols());
    terms.recon_w += inv_m * gaussian_term(w, ow, 0, 1, floor, -inv_m, grad ? &g_ow : nullptr, nullptr);

    // p(x | z)
    SequenceCache cx;
    const Eigen::MatrixXd ox = forward(p.dec_x, z, grad ? &cx : nullptr);
    Eigen::MatrixXd g_ox = Eigen::MatrixXd::Zero(ox.rows(), ox.cols());
    terms.recon_x += inv_m * gaussian_term(xs.continuous, ox, 0, nc, floor, -inv_m,
                                           grad ? &g_ox : nullptr, nullptr);
    terms.recon_x += inv_m * bernoulli_term(xs.binary, ox, 2 * nc, -inv_m, grad ? &g_ox : nullptr);

    // p(y | w, z)
    SequenceCache cy;
    const Eigen::MatrixXd oy = forward(p.dec_y, hcat(w, z), grad ? &cy : nullptr);
    Eigen::MatrixXd g_oy = Eigen::MatrixXd::Zero(oy.rows(), oy.cols());
    terms.recon_y += inv_m * gaussian_term(y, oy, 0, 1, floor, -inv_m, grad ? &g_oy : nullptr, nullptr);

    if (grad) {
      // g_* hold d(loss)/d(out); backward returns d(loss)/d(input).
      d_z -= backward(p.dec_w, cw, g_ow, grad->dec_w);
      d_z -= backward(p.dec_x, cx, g_ox, grad->dec_x);
      d_z -= backward(p.dec_y, cy, g_oy, grad->dec_y).rightCols(d);
      d_z += (-lambda * inv_m) * z;
      // reparameterization: dz/dmu = 1, dz/dvar = eps / (2 sd)
      d_mu += d_z;
      d_var += d_z.cwiseProduct(eps).cwiseQuotient(2.0 * sd);
      d_var += (lambda * inv_m * 0.5) * q.variance.cwiseInverse();
    }
  }

  // auxiliary heads on observed values
  SequenceCache caw;
  const Eigen::MatrixXd oaw = forward(p.aux_w, x, grad ? &caw : nullptr);
  Eigen::MatrixXd g_oaw = Eigen::MatrixXd::Zero(oaw.rows(), oaw.cols());
  terms.aux_w = gaussian_term(w, oaw, 0, 1, floor, -1.0, grad ? &g_oaw : nullptr, nullptr);

  SequenceCache cay;
  const Eigen::MatrixXd oay = forward(p.aux_y, hcat(x, w), grad ? &cay : nullptr);
  Eigen::MatrixXd g_oay = Eigen::MatrixXd::Zero(oay.rows(), oay.cols());
  terms.aux_y = gaussian_term(y, oay, 0, 1, floor, -1.0, grad ? &g_oay : nullptr, nullptr);

  terms.loss = -(terms.kl_term + terms.recon_x + terms.recon_w + terms.recon_y +
                 terms.aux_w + terms.aux_y);

  const std::pair<const char*, double> named[] = {
      {"kl_term", terms.kl_term}, {"recon_x", terms.recon_x}, {"recon_w", terms.recon_w},
      {"recon_y", terms.recon_y}, {"aux_w", terms.aux_w},     {"aux_y", terms.aux_y}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) {
      throw NumericalError(std::string("non-finite ELBO term '") + name + "'");
    }
  }

  if (grad) {
    backward(p.aux_w, caw, g_oaw, grad->aux_w);
    backward(p.aux_y, cay, g_oay, grad->aux_y);
    // encoder head: loss gradient = -(dELBO/dmu, dELBO/dvar * softplus')
    Eigen::MatrixXd g_enc(steps, 2 * d);
    for (Eigen::Index t = 0; t < steps; ++t)
      for (int j = 0; j < d; ++j) {
        g_enc(t, j) = -d_mu(t, j);
        g_enc(t, d + j) = -d_var(t, j) * sigmoid(enc_out(t, d + j));
      }
    backward(p.enc_z, enc_cache, g_enc, grad->enc_z);
  }
  return terms;
}

}  // namespace scevae
