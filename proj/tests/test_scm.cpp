#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scevae/error.hpp"
#include "scevae/scm.hpp"

using namespace scevae;

namespace {

// Plain-loop reference simulator with its own RNG stream (e1..e4 per step).
struct Reference {
  std::vector<double> z, x, w, y, e4;
};

Reference reference(const ScmConfig& c) {
  const int n = c.n_steps;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> b(n);
  if (c.time_varying_b) {
    for (int t = 0; t < n / 2; ++t) b[t] = 2.0 * t / (n - 2.0);
    for (int t = n / 2; t < n; ++t) b[t] = b[n - 1 - t];
  } else {
    for (auto& v : b) v = c.b;
  }
  Reference r;
  r.z.resize(n);
  r.x.resize(n);
  r.w.resize(n);
  r.y.resize(n);
  r.e4.resize(n);
  double zp = c.z0, wp = c.w0, yp = c.y0;
  for (int t = 0; t < n; ++t) {
    double e1 = std::sqrt(c.noise_var1) * nd(rng);
    double e2 = std::sqrt(c.noise_var2) * nd(rng);
    double e3 = std::sqrt(c.noise_var3) * nd(rng);
    double e4 = std::sqrt(c.noise_var4) * nd(rng);
    r.z[t] = c.a * zp + e1;
    double zl = t - c.tau >= 0 ? r.z[t - c.tau] : c.z0;
    r.x[t] = b[t] * std::tanh(zl) + c.s * e2;
    r.w[t] = c.c1 * wp + c.c2 * r.z[t] + e3;
    double cause = c.link == Link::kLinear ? c.g * r.w[t] : c.g * std::exp(c.h * r.w[t]);
    r.y[t] = c.d1 * yp + c.d2 * r.z[t] + cause + e4;
    r.e4[t] = e4;
    zp = r.z[t];
    wp = r.w[t];
    yp = r.y[t];
  }
  return r;
}

ScmConfig zero_noise(ScmConfig c) {
  c.noise_var1 = c.noise_var2 = c.noise_var3 = c.noise_var4 = 0.0;
  return c;
}

}  // namespace

TEST(TimeVaryingB, FourStepsIsTriangle) {
  const Series b = time_varying_b(4);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_DOUBLE_EQ(b[0], 0.0);
  EXPECT_DOUBLE_EQ(b[1], 1.0);
  EXPECT_DOUBLE_EQ(b[2], 1.0);
  EXPECT_DOUBLE_EQ(b[3], 0.0);
}

TEST(TimeVaryingB, SymmetricTriangleOfLength1000) {
  const int n = 1000;
  const Series b = time_varying_b(n);
  double peak = 0.0;
  for (int t = 0; t < n; ++t) {
    EXPECT_EQ(b[t], b[n - 1 - t]) << t;
    EXPECT_GE(b[t], 0.0);
    peak = std::max(peak, b[t]);
  }
  EXPECT_NEAR(b[1], 0.0020040, 1e-7);
  EXPECT_DOUBLE_EQ(b[499], 1.0);
  EXPECT_DOUBLE_EQ(peak, 1.0);
  for (int t = 1; t < 499; ++t) EXPECT_LT(b[t], b[t + 1]);
}

TEST(TimeVaryingB, OddLengthRejected) {
  EXPECT_THROW(time_varying_b(5), ConfigError);
  ScmConfig c;
  c.n_steps = 999;
  EXPECT_THROW(generate(c), ConfigError);
}

TEST(ScmGenerate, MatchesReferenceOracleBothLinks) {
  for (Link link : {Link::kLinear, Link::kNonlinear}) {
    for (bool tv : {true, false}) {
      ScmConfig c;
      c.link = link;
      c.time_varying_b = tv;
      c.seed = 42;
      const ScmDataset d = generate(c);
      const Reference r = reference(c);
      ASSERT_EQ(d.size(), 1000u);
      for (std::size_t t = 0; t < d.size(); ++t) {
        ASSERT_NEAR(d.z[t], r.z[t], 1e-12);
        ASSERT_NEAR(d.x[t], r.x[t], 1e-12);
        ASSERT_NEAR(d.w[t], r.w[t], 1e-12);
        ASSERT_NEAR(d.y[t], r.y[t], 1e-12);
        ASSERT_NEAR(d.effect_noise[t], r.e4[t], 1e-12);
      }
    }
  }
}

TEST(ScmGenerate, ZeroNoiseFourStepsMatchesHandRecursion) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.n_steps = 4;
  c.link = Link::kLinear;
  const ScmDataset d = generate(c);
  double z = 0.1, w = 0.1, y = 0.0;
  const double b[4] = {0.0, 1.0, 1.0, 0.0};
  for (int t = 0; t < 4; ++t) {
    z = 0.88 * z;
    w = 0.6 * w + 0.2 * z;
    y = 0.4 * y + 0.8 * z + 0.5 * w;
    EXPECT_NEAR(d.z[t], z, 1e-15);
    EXPECT_NEAR(d.w[t], w, 1e-15);
    EXPECT_NEAR(d.y[t], y, 1e-15);
    // tau = 100 exceeds the series, so every proxy reads the initial value.
    EXPECT_NEAR(d.x[t], b[t] * std::tanh(0.1), 1e-15);
  }
}

TEST(ScmGenerate, DeterministicAndSeedSensitive) {
  ScmConfig c;
  c.seed = 3;
  const ScmDataset a = generate(c), b = generate(c);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.x, b.x);
  c.seed = 4;
  EXPECT_NE(generate(c).y, a.y);
}

TEST(ScmGenerate, ProxyUsesLaggedConfounder) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.noise_var1 = 0.5;
  c.time_varying_b = false;
  c.tau = 3;
  c.n_steps = 20;
  c.seed = 9;
  const ScmDataset d = generate(c);
  for (int t = 0; t < 20; ++t) {
    const double zl = t >= 3 ? d.z[t - 3] : c.z0;
    EXPECT_NEAR(d.x[t], 0.95 * std::tanh(zl), 1e-15);
  }
}

TEST(ScmIntervention, IdentityInterventionHasZeroIte) {
  ScmConfig c;
  c.seed = 5;
  const ScmDataset d = generate(c);
  const ScmDataset i = apply_intervention(d, d.w, InterventionKind::kKnockoff);
  for (std::size_t t = 0; t < d.size(); ++t) {
    EXPECT_EQ(i.y_hat[t], d.y[t]);
    EXPECT_EQ(i.ite_true[t], 0.0);
  }
}

TEST(ScmIntervention, LinearNoiseFreeD1ZeroClosedForm) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.link = Link::kLinear;
  c.d1 = 0.0;
  c.n_steps = 50;
  const ScmDataset d = generate(c);
  Series w_hat(d.size());
  for (std::size_t t = 0; t < w_hat.size(); ++t) w_hat[t] = std::sin(0.3 * t) * 2.0;
  const ScmDataset i = apply_intervention(d, w_hat, InterventionKind::kGaussianNoise);
  for (std::size_t t = 0; t < d.size(); ++t) {
    EXPECT_EQ(i.ite_true[t], i.y_hat[t] - i.y[t]);
    EXPECT_NEAR(i.ite_true[t], c.g * (w_hat[t] - d.w[t]), 1e-14);
  }
}

TEST(ScmIntervention, NonlinearNoiseFreeD1ZeroClosedForm) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.link = Link::kNonlinear;
  c.d1 = 0.0;
  c.n_steps = 50;
  const ScmDataset d = generate(c);
  Series w_hat(d.size());
  for (std::size_t t = 0; t < w_hat.size(); ++t) w_hat[t] = 0.05 * t - 1.0;
  const ScmDataset i = apply_intervention(d, w_hat, InterventionKind::kKnockoff);
  for (std::size_t t = 0; t < d.size(); ++t) {
    const double expect = c.g * (std::exp(c.h * w_hat[t]) - std::exp(c.h * d.w[t]));
    EXPECT_NEAR(i.ite_true[t], expect, 1e-14);
  }
}

TEST(ScmIntervention, SharedNoiseWithD1Propagates) {
  // Linear link: ite_t = g * sum_k d1^k (w_hat - w)_{t-k}.
  ScmConfig c;
  c.link = Link::kLinear;
  c.seed = 11;
  c.n_steps = 200;
  const ScmDataset d = generate(c);
  Series w_hat(d.size());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& v : w_hat) v = nd(rng);
  const ScmDataset i = apply_intervention(d, w_hat, InterventionKind::kGaussianNoise);
  double acc = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) {
    acc = c.d1 * acc + c.g * (w_hat[t] - d.w[t]);
    EXPECT_NEAR(i.ite_true[t], acc, 1e-12);
  }
}

TEST(ScmIntervention, LengthMismatchRejected) {
  ScmConfig c;
  c.n_steps = 10;
  const ScmDataset d = generate(c);
  EXPECT_THROW(apply_intervention(d, Series(9, 0.0), InterventionKind::kKnockoff), DataError);
}

TEST(ScmIntervention, GaussianDrawsHaveConfiguredVariance) {
  ScmConfig c;
  c.n_steps = 20000;
  const Series g = gaussian_intervention(c, 17);
  double m = 0.0, v = 0.0;
  for (double x : g) m += x;
  m /= g.size();
  for (double x : g) v += (x - m) * (x - m);
  v /= g.size() - 1;
  EXPECT_NEAR(m, 0.0, 4.0 * std::sqrt(0.6 / 20000));
  EXPECT_NEAR(v, 0.6, 4.0 * 0.6 * std::sqrt(2.0 / 20000));
  EXPECT_EQ(g, gaussian_intervention(c, 17));
}

TEST(ScmEffectNoise, RecoveredFromObservedSeries) {
  ScmConfig c;
  c.seed = 21;
  const ScmDataset d = generate(c);
  const Series e = recover_effect_noise(c, d.z, d.w, d.y);
  for (std::size_t t = 0; t < d.size(); ++t) EXPECT_NEAR(e[t], d.effect_noise[t], 1e-12);
}

TEST(ScmConfigTest, KeyValueRoundTrip) {
  ScmConfig c;
  c.d2 = 1.2;
  c.link = Link::kLinear;
  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  c.time_varying_b = false;
  const ScmConfig back = ScmConfig::from_kv(KeyValues::parse(c.to_kv().to_string()));
  EXPECT_EQ(back.d2, 1.2);
  EXPECT_EQ(back.link, Link::kLinear);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_FALSE(back.time_varying_b);
  EXPECT_EQ(back.to_kv().to_string(), c.to_kv().to_string());
}

TEST(ScmConfigTest, NegativeVarianceRejected) {
  ScmConfig c;
  c.noise_var3 = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ScmConfigTest, DefaultsMatchPublishedCoefficients) {
  const ScmConfig c = ScmConfig::defaults();
  EXPECT_EQ(c.a, 0.88);
  EXPECT_EQ(c.s, 0.5);
  EXPECT_EQ(c.tau, 100);
  EXPECT_EQ(c.c1, 0.6);
  EXPECT_EQ(c.c2, 0.2);
  EXPECT_EQ(c.d1, 0.4);
  EXPECT_EQ(c.d2, 0.8);
  EXPECT_EQ(c.g, 0.5);
  EXPECT_EQ(c.h, 0.5);
  EXPECT_EQ(c.intervention_noise_var, 0.6);
  EXPECT_EQ(c.noise_var1, 0.5);
  EXPECT_EQ(c.noise_var2, 0.8);
  EXPECT_EQ(c.noise_var3, 0.7);
  EXPECT_EQ(c.noise_var4, 0.5);
  EXPECT_EQ(c.z0, 0.1);
  EXPECT_EQ(c.w0, 0.1);
  EXPECT_EQ(c.y0, 0.0);
  EXPECT_EQ(c.n_steps, 1000);
}

TEST(ScmGenerate, ZeroDynamics) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.a = 0.0;
  c.time_varying_b = false;
  c.b = 0.0;
  c.c1 = c.c2 = c.d1 = c.d2 = c.g = 0.0;
  c.n_steps = 10;
  const ScmDataset d = generate(c);
  for (std::size_t t = 1; t < d.size(); ++t) {
    EXPECT_EQ(d.z[t], 0.0);
    EXPECT_EQ(d.x[t], 0.0);
    EXPECT_EQ(d.w[t], 0.0);
    EXPECT_EQ(d.y[t], 0.0);
  }
}

TEST(ScmGenerate, FixedPoint) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.link = Link::kLinear;
  c.a = 1.0;
  c.z0 = 1.0;
  c.c2 = 1.0;
  c.c1 = 0.0;
  c.d1 = c.d2 = 0.0;
  c.g = 1.0;
  c.time_varying_b = false;
  c.b = 0.0;
  c.n_steps = 12;
  const ScmDataset d = generate(c);
  for (std::size_t t = 1; t < d.size(); ++t) {
    EXPECT_EQ(d.z[t], 1.0);
    EXPECT_EQ(d.w[t], 1.0);
    EXPECT_EQ(d.y[t], 1.0);
  }
}

TEST(ScmIntervention, ContrastIndependentOfEffectNoiseWhenD1Zero) {
  for (Link link : {Link::kLinear, Link::kNonlinear}) {
    ScmConfig c;
    c.link = link;
    c.d1 = 0.0;
    c.seed = 2;
    c.n_steps = 100;
    const ScmDataset d = generate(c);
    Series w_hat = gaussian_intervention(c, 3);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd(0.0, 1.0);
    Series other(d.size());
    for (auto& v : other) v = nd(rng);
    const Series y1 = effect_recursion(c, d.z, w_hat, d.effect_noise);
    const Series y0 = effect_recursion(c, d.z, d.w, d.effect_noise);
    const Series y1b = effect_recursion(c, d.z, w_hat, other);
    const Series y0b = effect_recursion(c, d.z, d.w, other);
    for (std::size_t t = 0; t < d.size(); ++t) {
      EXPECT_NEAR(y1[t] - y0[t], y1b[t] - y0b[t], 1e-12);
    }
  }
}

TEST(ScmGenerate, ProxyDelayShiftsWithConfounder) {
  ScmConfig c = zero_noise(ScmConfig{});
  c.noise_var1 = 0.5;
  c.s = 0.0;
  c.time_varying_b = false;
  c.tau = 5;
  c.n_steps = 60;
  c.seed = 4;
  const ScmDataset d = generate(c);
  c.tau = 6;
  const ScmDataset e = generate(c);
  for (std::size_t t = 7; t < d.size(); ++t) EXPECT_NEAR(e.x[t], d.x[t - 1], 1e-15);
}

TEST(ScmIntervention, NonlinearApproachesLinearForSmallH) {
  ScmConfig lin;
  lin.link = Link::kLinear;
  lin.seed = 8;
  lin.n_steps = 200;
  ScmConfig nl = lin;
  nl.link = Link::kNonlinear;
  nl.h = 1e-5;
  nl.g = lin.g / nl.h;
  const ScmDataset dl = generate(lin);
  const ScmDataset dn = generate(nl);
  ASSERT_EQ(dl.w, dn.w);
  const Series w_hat = gaussian_intervention(lin, 5);
  const ScmDataset il = apply_intervention(dl, w_hat, InterventionKind::kGaussianNoise);
  const ScmDataset in = apply_intervention(dn, w_hat, InterventionKind::kGaussianNoise);
  for (std::size_t t = 0; t < dl.size(); ++t) EXPECT_NEAR(in.ite_true[t], il.ite_true[t], 1e-3);
}
