#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scevae/error.hpp"
#include "scevae/model.hpp"

using namespace scevae;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double inv_softplus(double v) { return std::log(std::expm1(v)); }

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

Architecture tiny_arch(int proxy_dim = 1) {
  Architecture a;
  a.latent_dim = 2;
  a.hidden = 4;
  a.depth = 2;
  a.proxy_dim = proxy_dim;
  return a;
}

// Gaussian head emitting constant (mean, variance) through the read-out bias.
void set_constant_head(SequenceNet& net, int d, double mean, double variance, double floor) {
  net.w_out.setZero();
  net.b_out.setZero();
  for (int j = 0; j < d; ++j) {
    net.b_out(j, 0) = mean;
    net.b_out(d + j, 0) = inv_softplus(variance - floor);
  }
}

}  // namespace

TEST(Softplus, Values) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(50.0), 50.0, 1e-12);
  EXPECT_NEAR(softplus(-50.0), std::exp(-50.0), 1e-30);
  EXPECT_NEAR(gaussian_log_density(0.0, 0.0, 1.0), -kHalfLog2Pi, 1e-15);
}

TEST(Heads, ShapesAndPositivity) {
  const ScevaeParams p = ScevaeParams::create(Architecture{}, 1);
  EXPECT_EQ(p.arch.latent_dim, 5);
  EXPECT_EQ(p.arch.hidden, 32);
  EXPECT_EQ(p.arch.depth, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 0.3);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, -0.2), y = Eigen::VectorXd::Constant(1, 1.0);
  const GaussianSequence q = encode(p, x, y, w);
  EXPECT_EQ(q.mean.rows(), 1);
  EXPECT_EQ(q.mean.cols(), 5);
  EXPECT_EQ(q.variance.rows(), 1);
  EXPECT_EQ(q.variance.cols(), 5);
  EXPECT_GT(q.variance.minCoeff(), 0.0);
  const Eigen::MatrixXd z = random_matrix(30, 5, 2) * 50.0;
  const Eigen::VectorXd wz = random_matrix(30, 1, 3).col(0);
  for (const auto& g : {decode_w(p, z), decode_y(p, wz, z), decode_x(p, z).gaussian}) {
    EXPECT_GE(g.variance.minCoeff(), kDefaultVarianceFloor);
  }
}

TEST(Heads, ZeroOutputHeads) {
  Architecture a = tiny_arch(3);
  a.binary_proxy = {false, true, false};
  ScevaeParams p = ScevaeParams::create(a, 4);
  p.zero_output_heads();
  const Eigen::MatrixXd x = random_matrix(7, 3, 5);
  const Eigen::VectorXd w = random_matrix(7, 1, 6).col(0), y = random_matrix(7, 1, 7).col(0);
  const double ln2 = std::log(2.0) + kDefaultVarianceFloor;
  for (const GaussianSequence& g : {encode(p, x, y, w), aux_w(p, x), aux_y(p, x, w)}) {
    EXPECT_EQ(g.mean.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR((g.variance.array() - ln2).abs().maxCoeff(), 0.0, 1e-15);
  }
  const ProxyDecoding dx = decode_x(p, random_matrix(7, 2, 8));
  EXPECT_EQ(dx.gaussian.dim(), 2);
  ASSERT_EQ(dx.bernoulli.cols(), 1);
  EXPECT_NEAR((dx.bernoulli.array() - 0.5).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Heads, EmptySequence) {
  const ScevaeParams p = ScevaeParams::create(tiny_arch(), 9);
  const Eigen::MatrixXd x(0, 1);
  const Eigen::VectorXd w(0);
  EXPECT_EQ(aux_w(p, x).steps(), 0);
  EXPECT_EQ(aux_y(p, x, w).steps(), 0);
  EXPECT_EQ(encode(p, x, w, w).steps(), 0);
}

TEST(Heads, RejectsBadInput) {
  const ScevaeParams p = ScevaeParams::create(tiny_arch(), 9);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  x(2, 0) = std::nan("");
  EXPECT_THROW(encode(p, x, w, w), DataError);
  EXPECT_THROW(encode(p, Eigen::MatrixXd::Zero(4, 2), w, w), DataError);
  EXPECT_THROW(decode_y(p, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(4, 2)), DataError);
  EXPECT_THROW(decode_w(p, Eigen::MatrixXd::Zero(4, 3)), DataError);
}

// Perturbing inputs at t0 must leave every output at t < t0 bit-identical.
TEST(Heads, Causality) {
  const int t_len = 12, t0 = 6, d = 2;
  const ScevaeParams p = ScevaeParams::create(tiny_arch(2), 10);
  const Eigen::MatrixXd x = random_matrix(t_len, 2, 11), z = random_matrix(t_len, d, 12);
  const Eigen::VectorXd w = random_matrix(t_len, 1, 13).col(0), y = random_matrix(t_len, 1, 14).col(0);
  Eigen::MatrixXd x2 = x, z2 = z;
  Eigen::VectorXd w2 = w, y2 = y;
  x2(t0, 1) += 1.0;
  z2(t0, 0) -= 2.0;
  w2(t0) += 0.5;
  y2(t0) += 3.0;
  auto same_prefix = [&](const GaussianSequence& a, const GaussianSequence& b, bool changed) {
    EXPECT_TRUE(a.mean.topRows(t0) == b.mean.topRows(t0));
    EXPECT_TRUE(a.variance.topRows(t0) == b.variance.topRows(t0));
    if (changed) EXPECT_FALSE(a.mean.row(t0) == b.mean.row(t0));
  };
  same_prefix(encode(p, x, y, w), encode(p, x2, y, w), true);
  same_prefix(encode(p, x, y, w), encode(p, x, y2, w), true);
  same_prefix(encode(p, x, y, w), encode(p, x, y, w2), true);
  same_prefix(decode_w(p, z), decode_w(p, z2), true);
  same_prefix(decode_x(p, z).gaussian, decode_x(p, z2).gaussian, true);
  same_prefix(decode_y(p, w, z), decode_y(p, w2, z), true);
  same_prefix(decode_y(p, w, z), decode_y(p, w, z2), true);
  same_prefix(aux_w(p, x), aux_w(p, x2), true);
  same_prefix(aux_y(p, x, w), aux_y(p, x2, w), true);
  same_prefix(aux_y(p, x, w), aux_y(p, x, w2), true);
}

TEST(Elbo, ConstantStandardNormalHeads) {
  ScevaeParams p = ScevaeParams::create(tiny_arch(), 20);
  ElboConfig cfg;
  const double fl = cfg.variance_floor;
  for (SequenceNet* h : {&p.enc_z}) set_constant_head(*h, 2, 0.0, 1.0, fl);
  for (SequenceNet* h : {&p.dec_w, &p.dec_x, &p.dec_y, &p.aux_w, &p.aux_y})
    set_constant_head(*h, 1, 0.0, 1.0, fl);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(1), y = Eigen::VectorXd::Zero(1);
  const ElboTerms t = elbo_with_noise(p, cfg, x, w, y, {Eigen::MatrixXd::Zero(1, 2)});
  EXPECT_NEAR(t.kl_term, 0.0, 1e-12);
  for (double v : {t.recon_x, t.recon_w, t.recon_y, t.aux_w, t.aux_y}) EXPECT_NEAR(v, -kHalfLog2Pi, 1e-10);
  EXPECT_NEAR(t.loss, 5.0 * kHalfLog2Pi, 1e-10);
}

// Constant heads with arbitrary moments over a T-step window: every term is a
// hand-computable sum of Gaussian log-densities.
TEST(Elbo, ConstantHeadsHandSum) {
  const int t_len = 6, d = 2;
  ScevaeParams p = ScevaeParams::create(tiny_arch(), 21);
  ElboConfig cfg;
  cfg.lambda = 0.37;
  const double fl = cfg.variance_floor;
  const double mz = 0.4, vz = 0.3, mw = -0.2, vw = 1.7, mx = 1.1, vx = 0.6, my = 0.5, vy = 2.2;
  const double maw = 0.1, vaw = 0.9, may = -0.7, vay = 1.3;
  set_constant_head(p.enc_z, d, mz, vz, fl);
  set_constant_head(p.dec_w, 1, mw, vw, fl);
  set_constant_head(p.dec_x, 1, mx, vx, fl);
  set_constant_head(p.dec_y, 1, my, vy, fl);
  set_constant_head(p.aux_w, 1, maw, vaw, fl);
  set_constant_head(p.aux_y, 1, may, vay, fl);
  const Eigen::MatrixXd x = random_matrix(t_len, 1, 22), eps = random_matrix(t_len, d, 23);
  const Eigen::VectorXd w = random_matrix(t_len, 1, 24).col(0), y = random_matrix(t_len, 1, 25).col(0);
  auto lg = [](double v, double m, double s2) {
    return -0.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5 * (v - m) * (v - m) / s2;
  };
  double kl = 0, rx = 0, rw = 0, ry = 0, aw = 0, ay = 0;
  for (int t = 0; t < t_len; ++t) {
    for (int j = 0; j < d; ++j) {
      const double z = mz + std::sqrt(vz) * eps(t, j);
      kl += lg(z, 0.0, 1.0) - lg(z, mz, vz);
    }
    rx += lg(x(t, 0), mx, vx);
    rw += lg(w(t), mw, vw);
    ry += lg(y(t), my, vy);
    aw += lg(w(t), maw, vaw);
    ay += lg(y(t), may, vay);
  }
  const ElboTerms t = elbo_with_noise(p, cfg, x, w, y, {eps});
  EXPECT_NEAR(t.kl_term, cfg.lambda * kl, 1e-10);
  EXPECT_NEAR(t.recon_x, rx, 1e-10);
  EXPECT_NEAR(t.recon_w, rw, 1e-10);
  EXPECT_NEAR(t.recon_y, ry, 1e-10);
  EXPECT_NEAR(t.aux_w, aw, 1e-10);
  EXPECT_NEAR(t.aux_y, ay, 1e-10);
  EXPECT_NEAR(t.loss, -(cfg.lambda * kl + rx + rw + ry + aw + ay), 1e-10);
}

TEST(Elbo, BernoulliProxyTerm) {
  Architecture a = tiny_arch(2);
  a.binary_proxy = {false, true};
  ScevaeParams p = ScevaeParams::create(a, 26);
  const double fl = kDefaultVarianceFloor;
  set_constant_head(p.enc_z, 2, 0.0, 1.0, fl);
  for (SequenceNet* h : {&p.dec_w, &p.dec_y, &p.aux_w, &p.aux_y}) set_constant_head(*h, 1, 0.0, 1.0, fl);
  // dec_x: one Gaussian (mean, pre-var) then one logit
  p.dec_x.w_out.setZero();
  p.dec_x.b_out.setZero();
  p.dec_x.b_out(1, 0) = inv_softplus(1.0 - fl);
  const double logit = 0.8;
  p.dec_x.b_out(2, 0) = logit;
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 1, -0.5, 0, 0.0, 1;
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(3), y = Eigen::VectorXd::Zero(3);
  const double pr = 1.0 / (1.0 + std::exp(-logit));
  double expected = 0.0;
  for (int t = 0; t < 3; ++t) {
    expected += -kHalfLog2Pi - 0.5 * x(t, 0) * x(t, 0);
    expected += x(t, 1) > 0.5 ? std::log(pr) : std::log(1.0 - pr);
  }
  const ElboTerms t = elbo_with_noise(p, ElboConfig{}, x, w, y, {Eigen::MatrixXd::Zero(3, 2)});
  EXPECT_NEAR(t.recon_x, expected, 1e-10);
}

TEST(Elbo, ZeroLambdaKillsKlTerm) {
  const ScevaeParams p = ScevaeParams::create(tiny_arch(), 30);
  ElboConfig cfg;
  cfg.lambda = 0.0;
  const Eigen::MatrixXd x = random_matrix(8, 1, 31);
  const Eigen::VectorXd w = random_matrix(8, 1, 32).col(0), y = random_matrix(8, 1, 33).col(0);
  Rng rng(34);
  const ElboTerms t = elbo(p, cfg, x, w, y, rng);
  EXPECT_EQ(t.kl_term, 0.0);
  EXPECT_NEAR(t.loss, -(t.recon_x + t.recon_w + t.recon_y + t.aux_w + t.aux_y), 1e-12);
}

TEST(Elbo, StandardNormalEncoderKlIsZero) {
  ScevaeParams p = ScevaeParams::create(tiny_arch(), 35);
  set_constant_head(p.enc_z, 2, 0.0, 1.0, kDefaultVarianceFloor);
  const Eigen::MatrixXd x = random_matrix(10, 1, 36);
  const Eigen::VectorXd w = random_matrix(10, 1, 37).col(0), y = random_matrix(10, 1, 38).col(0);
  Rng rng(39);
  for (int r = 0; r < 20; ++r) EXPECT_NEAR(elbo(p, ElboConfig{}, x, w, y, rng).kl_term, 0.0, 1e-9);
}

TEST(Elbo, McSampleCountsAgree) {
  const ScevaeParams p = ScevaeParams::create(tiny_arch(), 40);
  const Eigen::MatrixXd x = random_matrix(10, 1, 41);
  const Eigen::VectorXd w = random_matrix(10, 1, 42).col(0), y = random_matrix(10, 1, 43).col(0);
  ElboConfig one, many;
  many.mc_samples = 64;
  Rng rng(44);
  const int draws = 400;
  double s = 0, s2 = 0;
  for (int r = 0; r < draws; ++r) {
    const double l = elbo(p, one, x, w, y, rng).loss;
    s += l;
    s2 += l * l;
  }
  const double mean1 = s / draws;
  const double var1 = (s2 - draws * mean1 * mean1) / (draws - 1);
  const double l64 = elbo(p, many, x, w, y, rng).loss;
  const double se = std::sqrt(var1 / draws + var1 / 64.0);
  EXPECT_LT(std::abs(l64 - mean1), 4.0 * se + 1e-9);
}

TEST(Elbo, ConfigValidation) {
  ElboConfig c;
  c.lambda = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lambda = 0.1;
  c.mc_samples = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

namespace {

void gradient_check(const Architecture& arch, const Eigen::MatrixXd& x, std::uint64_t seed) {
  const int t_len = static_cast<int>(x.rows());
  ScevaeParams p = ScevaeParams::create(arch, seed);
  // larger read-out weights so every group carries a visible gradient
  for (SequenceNet* h : {&p.dec_w, &p.dec_x, &p.dec_y, &p.enc_z, &p.aux_w, &p.aux_y}) {
    h->w_out = random_matrix(h->w_out.rows(), h->w_out.cols(), seed + 1) * 0.5;
    h->b_out = random_matrix(h->b_out.rows(), 1, seed + 2) * 0.3;
  }
  ElboConfig cfg;
  cfg.lambda = 0.1;
  const Eigen::VectorXd w = random_matrix(t_len, 1, seed + 3).col(0);
  const Eigen::VectorXd y = random_matrix(t_len, 1, seed + 4).col(0);
  const std::vector<Eigen::MatrixXd> noise{random_matrix(t_len, arch.latent_dim, seed + 5),
                                           random_matrix(t_len, arch.latent_dim, seed + 6)};
  ScevaeParams g = p.zeros_like();
  elbo_with_noise(p, cfg, x, w, y, noise, &g);

  const double h = 1e-4;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> analytic;
  g.for_each_tensor([&](const std::string& name, const Eigen::MatrixXd& m) { analytic.emplace_back(name, m); });
  std::size_t idx = 0;
  p.for_each_tensor([&](const std::string& name, Eigen::MatrixXd& m) {
    ASSERT_EQ(name, analytic[idx].first);
    Eigen::MatrixXd fd(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + h;
      const double lp = elbo_with_noise(p, cfg, x, w, y, noise).loss;
      m.data()[i] = orig - h;
      const double lm = elbo_with_noise(p, cfg, x, w, y, noise).loss;
      m.data()[i] = orig;
      fd.data()[i] = (lp - lm) / (2.0 * h);
    }
    const Eigen::MatrixXd& an = analytic[idx].second;
    const double denom = std::max({an.norm(), fd.norm(), 1e-8});
    EXPECT_LT((an - fd).norm() / denom, 1e-3) << name;
    ++idx;
  });
  EXPECT_EQ(idx, analytic.size());
}

}  // namespace

TEST(Elbo, GradientMatchesFiniteDifferences) {
  gradient_check(tiny_arch(), random_matrix(5, 1, 50), 51);
}

TEST(Elbo, GradientWithBinaryProxy) {
  Architecture a = tiny_arch(2);
  a.binary_proxy = {true, false};
  Eigen::MatrixXd x = random_matrix(5, 2, 60);
  for (int t = 0; t < 5; ++t) x(t, 0) = t % 2;
  gradient_check(a, x, 61);
}

TEST(Params, FlattenRoundTrip) {
  ScevaeParams p = ScevaeParams::create(tiny_arch(), 70);
  const Eigen::VectorXd f = p.flatten();
  EXPECT_EQ(static_cast<std::size_t>(f.size()), p.parameter_count());
  ScevaeParams q = p.zeros_like();
  EXPECT_EQ(q.flatten().cwiseAbs().maxCoeff(), 0.0);
  q.unflatten(f);
  EXPECT_TRUE(q.flatten() == f);
  EXPECT_THROW(q.unflatten(Eigen::VectorXd::Zero(3)), Error);
}

TEST(Params, SeedDeterminism) {
  const Eigen::VectorXd a = ScevaeParams::create(tiny_arch(), 5).flatten();
  const Eigen::VectorXd b = ScevaeParams::create(tiny_arch(), 5).flatten();
  const Eigen::VectorXd c = ScevaeParams::create(tiny_arch(), 6).flatten();
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(Architecture, Validation) {
  Architecture a;
  a.latent_dim = 0;
  EXPECT_THROW(a.validate(), ConfigError);
  a = Architecture{};
  a.binary_proxy = {true, false};
  EXPECT_THROW(a.validate(), ConfigError);
}
