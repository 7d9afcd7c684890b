#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scevae/error.hpp"
#include "scevae/knockoff.hpp"
#include "scevae/rng.hpp"

using namespace scevae;

namespace {

Eigen::MatrixXd equicorrelated(int p, double rho) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(p, p, rho);
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd ar1(int p, double rho) {
  Eigen::MatrixXd s(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  return s;
}

Eigen::MatrixXd gaussian_rows(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed) {
  const Eigen::MatrixXd l = sigma.llt().matrixL();
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(n, sigma.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < sigma.rows(); ++j) z(i, j) = nd(rng);
  return z * l.transpose();
}

std::vector<std::string> names(int p) {
  std::vector<std::string> out;
  for (int j = 0; j < p; ++j) out.push_back("q" + std::to_string(j));
  return out;
}

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
  return c.transpose() * c / static_cast<double>(m.rows() - 1);
}

Eigen::MatrixXd joint_target(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& s) {
  const Eigen::Index p = sigma.rows();
  Eigen::MatrixXd g(2 * p, 2 * p);
  const Eigen::MatrixXd cross = sigma - Eigen::MatrixXd(s.asDiagonal());
  g << sigma, cross, cross, sigma;
  return g;
}

// Expected Frobenius spread of an n-row sample covariance around a Gaussian
// population covariance G: E|C_hat - G|_F^2 = sum_ij (G_ij^2 + G_ii G_jj) / n.
double frobenius_noise_floor(const Eigen::MatrixXd& g, int n) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) acc += g(i, j) * g(i, j) + g(i, i) * g(j, j);
  return std::sqrt(acc / n);
}

struct Draw {
  Eigen::MatrixXd q, k;
  KnockoffModel model;
};

Draw draw(const Eigen::MatrixXd& sigma, int n, std::uint64_t seed,
          SMethod method = SMethod::kSdp) {
  Draw d;
  d.q = gaussian_rows(sigma, n, seed);
  const FeatureMatrix fm(d.q, names(static_cast<int>(sigma.rows())));
  KnockoffFitOptions o;
  o.method = method;
  o.k_max = 1;
  d.model = fit_knockoff_model(fm, o);
  d.k = sample_knockoffs(d.model, fm, seed + 1000);
  return d;
}

}  // namespace

TEST(SelectS, IdentityGivesOnes) {
  const Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
  for (auto m : {SMethod::kEquicorrelated, SMethod::kSdp}) {
    const Eigen::VectorXd s = select_s(i3, m);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(s(j), 1.0, 1e-9);
  }
}

TEST(SelectS, EquicorrelatedClosedForm) {
  for (double rho : {0.5, 0.9, -0.3, 0.75}) {
    const Eigen::MatrixXd s2 = equicorrelated(2, rho);
    const double lmin = 1.0 - std::abs(rho);
    const Eigen::VectorXd s = select_s(s2, SMethod::kEquicorrelated);
    EXPECT_NEAR(s(0), std::min(1.0, 2.0 * lmin), 1e-12) << rho;
    EXPECT_NEAR(s(1), s(0), 0.0);
  }
  EXPECT_NEAR(select_s(equicorrelated(2, 0.5), SMethod::kEquicorrelated)(0), 1.0, 1e-12);
  EXPECT_NEAR(select_s(equicorrelated(2, 0.9), SMethod::kEquicorrelated)(0), 0.2, 1e-12);
}

TEST(SelectS, SdpDominatesAndStaysFeasible) {
  std::vector<Eigen::MatrixXd> panel{equicorrelated(4, 0.5), ar1(4, 0.9), ar1(5, 0.5),
                                     equicorrelated(3, 0.9)};
  // random correlation matrices
  Rng rng(11);
  std::normal_distribution<double> nd;
  for (int r = 0; r < 6; ++r) {
    Eigen::MatrixXd a(4, 6);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 6; ++j) a(i, j) = nd(rng);
    Eigen::MatrixXd c = a * a.transpose();
    const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
    panel.push_back(d.asDiagonal() * c * d.asDiagonal());
  }
  for (const auto& sigma : panel) {
    const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    const Eigen::VectorXd eq = select_s(sym, SMethod::kEquicorrelated);
    const Eigen::VectorXd sdp = select_s(sym, SMethod::kSdp);
    EXPECT_GE(sdp.sum(), eq.sum() - 1e-8);
    EXPECT_GE(sdp.minCoeff(), 0.0);
    EXPECT_LE(sdp.maxCoeff(), 1.0 + 1e-12);
    const Eigen::MatrixXd slack = 2.0 * sym - Eigen::MatrixXd(sdp.asDiagonal());
    EXPECT_GE(min_eigenvalue(slack), -1e-7);
    EXPECT_GE(min_eigenvalue(joint_target(sym, sdp)), -1e-7);
  }
}

TEST(SelectS, RejectsNonPsd) {
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  EXPECT_THROW(select_s(bad, SMethod::kSdp), NumericalError);
  EXPECT_THROW(select_s(bad, SMethod::kEquicorrelated), NumericalError);
  Eigen::MatrixXd not_unit = Eigen::MatrixXd::Identity(2, 2) * 2.0;
  EXPECT_THROW(select_s(not_unit, SMethod::kSdp), NumericalError);
}

TEST(SMethodNames, RoundTrip) {
  for (auto m : {SMethod::kSdp, SMethod::kEquicorrelated}) {
    EXPECT_EQ(parse_s_method(to_string(m)), m);
  }
}

TEST(FeatureMatrix, ConstantColumnIsDegenerate) {
  Eigen::MatrixXd q(10, 2);
  for (int i = 0; i < 10; ++i) {
    q(i, 0) = i;
    q(i, 1) = 3.0;
  }
  EXPECT_THROW(FeatureMatrix(q, names(2)), NumericalError);
  try {
    FeatureMatrix fm(q, names(2));
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
  }
}

TEST(FeatureMatrix, GramHasUnitDiagonal) {
  const Eigen::MatrixXd q = gaussian_rows(ar1(3, 0.6), 400, 2) * 3.0;
  const FeatureMatrix fm(q.array() + 5.0, names(3));
  const Eigen::MatrixXd g = fm.gram();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(g(j, j), 1.0, 1e-12);
  EXPECT_NEAR(g(0, 1), sample_cov(q)(0, 1) / std::sqrt(sample_cov(q)(0, 0) * sample_cov(q)(1, 1)),
              1e-12);
}

TEST(Sampler, ZeroSCouplesPerfectly) {
  Draw d = draw(ar1(3, 0.4), 2000, 3);
  d.model.s_vector.setZero();
  const Eigen::MatrixXd k = sample_knockoffs(d.model, d.q, 5);
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd pair = (Eigen::MatrixXd(d.q.rows(), 2) << d.q.col(j), k.col(j)).finished();
    const Eigen::MatrixXd c = sample_cov(pair);
    EXPECT_NEAR(c(0, 1) / std::sqrt(c(0, 0) * c(1, 1)), 1.0, 1e-9);
  }
}

TEST(Sampler, IdentityGivesIndependentKnockoffs) {
  const Draw d = draw(Eigen::MatrixXd::Identity(4, 4), 5000, 7);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(d.model.s_vector(j), 1.0, 0.05);
  const Eigen::MatrixXd both = (Eigen::MatrixXd(5000, 8) << d.q, d.k).finished();
  const Eigen::MatrixXd c = sample_cov(both);
  for (int j = 0; j < 4; ++j) {
    EXPECT_LT(std::abs(c(j, j + 4) / std::sqrt(c(j, j) * c(j + 4, j + 4))), 0.05);
  }
}

TEST(Sampler, DeterministicGivenSeed) {
  const Draw d = draw(ar1(3, 0.5), 500, 21);
  const Eigen::MatrixXd a = sample_knockoffs(d.model, d.q, 99);
  const Eigen::MatrixXd b = sample_knockoffs(d.model, d.q, 99);
  const Eigen::MatrixXd c = sample_knockoffs(d.model, d.q, 100);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((a - c).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sampler, WrongColumnCount) {
  const Draw d = draw(ar1(3, 0.5), 300, 1);
  EXPECT_THROW(sample_knockoffs(d.model, Eigen::MatrixXd::Zero(4, 2), 1), DataError);
}

// At n = 5000 the deviation of a correct sampler is dominated by the sampling
// spread of the sample covariance; compare against that predicted spread.
TEST(Sampler, JointCovarianceWithinSamplingSpread) {
  for (const auto& sigma : {ar1(4, 0.9), equicorrelated(4, 0.5), Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4))}) {
    const int n = 5000;
    const Draw d = draw(sigma, n, 31);
    const Eigen::MatrixXd g = joint_target(sigma, d.model.s_vector);
    const Eigen::MatrixXd both = (Eigen::MatrixXd(n, 8) << d.q, d.k).finished();
    const double dev = (sample_cov(both) - g).norm();
    EXPECT_LT(dev, 2.0 * frobenius_noise_floor(g, n));
  }
}

// Consistency: with enough rows the deviation falls below 0.05 for every Sigma.
TEST(Sampler, JointCovarianceConvergesAtLargeN) {
  for (const auto& sigma : {ar1(4, 0.9), equicorrelated(4, 0.5), Eigen::MatrixXd(Eigen::MatrixXd::Identity(4, 4))}) {
    const int n = 200000;
    const Draw d = draw(sigma, n, 41);
    const Eigen::MatrixXd g = joint_target(sigma, d.model.s_vector);
    const Eigen::MatrixXd both = (Eigen::MatrixXd(n, 8) << d.q, d.k).finished();
    EXPECT_LT((sample_cov(both) - g).norm(), 0.05);
  }
}

TEST(Sampler, SwapSymmetry) {
  const int n = 20000;
  const Draw d = draw(ar1(4, 0.7), n, 51);
  Eigen::MatrixXd both = (Eigen::MatrixXd(n, 8) << d.q, d.k).finished();
  const Eigen::MatrixXd c = sample_cov(both);
  for (int j = 0; j < 4; ++j) {
    Eigen::MatrixXd swapped = both;
    swapped.col(j).swap(swapped.col(j + 4));
    const Eigen::MatrixXd cs = sample_cov(swapped);
    const Eigen::MatrixXd g = joint_target(ar1(4, 0.7), d.model.s_vector);
    EXPECT_LT((cs - c).norm(), 2.0 * 1.5 * frobenius_noise_floor(g, n));
  }
}

TEST(Sampler, PreservesMarginals) {
  Eigen::MatrixXd sigma = ar1(3, 0.6);
  const int n = 20000;
  Draw d;
  d.q = gaussian_rows(sigma, n, 61);
  d.q.col(0) = d.q.col(0) * 4.0 + Eigen::VectorXd::Constant(n, 10.0);
  const FeatureMatrix fm(d.q, names(3));
  KnockoffFitOptions o;
  o.k_max = 1;
  const KnockoffModel m = fit_knockoff_model(fm, o);
  const Eigen::MatrixXd k = sample_knockoffs(m, fm, 62);
  const Eigen::VectorXd mq = d.q.colwise().mean(), mk = k.colwise().mean();
  const Eigen::MatrixXd cq = sample_cov(d.q), ck = sample_cov(k);
  for (int j = 0; j < 3; ++j) {
    const double sd = std::sqrt(cq(j, j));
    EXPECT_NEAR(mk(j), mq(j), 5.0 * sd * std::sqrt(2.0 / n));
    EXPECT_NEAR(ck(j, j) / cq(j, j), 1.0, 0.05);
  }
}

TEST(Sampler, CouplingDecreasesWithS) {
  Draw d = draw(Eigen::MatrixXd::Identity(3, 3), 20000, 71);
  double prev = 2.0;
  for (double sv : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    d.model.s_vector.setConstant(sv);
    const Eigen::MatrixXd k = sample_knockoffs(d.model, d.q, 72);
    const Eigen::MatrixXd pair = (Eigen::MatrixXd(d.q.rows(), 2) << d.q.col(0), k.col(0)).finished();
    const Eigen::MatrixXd c = sample_cov(pair);
    const double corr = c(0, 1) / std::sqrt(c(0, 0) * c(1, 1));
    // population correlation is 1 - s
    EXPECT_NEAR(corr, 1.0 - sv, 0.03);
    EXPECT_LT(corr, prev);
    prev = corr;
  }
}

TEST(Diagnostics, KnockoffEqualToOriginal) {
  const Eigen::MatrixXd q = gaussian_rows(ar1(3, 0.5), 200, 81);
  const ExchangeabilityReport r = exchangeability_diagnostics(q, q, Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(r.knockoff_gram_deviation, 0.0, 1e-12);
  EXPECT_NEAR(r.cross_offdiag_deviation, 0.0, 1e-12);
  EXPECT_NEAR(r.achieved_s.cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(r.s_deviation, 0.0, 1e-12);
}

TEST(Diagnostics, NegatedKnockoff) {
  const Eigen::MatrixXd q = gaussian_rows(ar1(3, 0.5), 300, 82);
  const ExchangeabilityReport r = exchangeability_diagnostics(q, -q);
  // centering flips the mean too, so -q normalized with q's record is -(q_n) - 2 mean/scale
  const FeatureMatrix fm(q, names(3));
  const Eigen::MatrixXd g = fm.gram();
  Eigen::MatrixXd off = g.cwiseAbs();
  off.diagonal().setZero();
  const Eigen::VectorXd shift =
      (2.0 * fm.normalization().mean.array() / fm.normalization().scale.array()).matrix();
  const double n = static_cast<double>(q.rows());
  Eigen::MatrixXd kk = g + n * shift * shift.transpose();
  EXPECT_NEAR(r.knockoff_gram_deviation, (kk - g).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(r.cross_offdiag_deviation, 2.0 * off.maxCoeff(), 1e-9);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.achieved_s(j), 2.0, 1e-9);
}

TEST(Diagnostics, GaussianSamplerAtN5000) {
  const Draw d = draw(ar1(4, 0.5), 5000, 83);
  const ExchangeabilityReport r = exchangeability_diagnostics(d.q, d.k, d.model.s_vector);
  EXPECT_LT(r.knockoff_gram_deviation, 0.05);
  EXPECT_LT(r.cross_offdiag_deviation, 0.05);
  EXPECT_LT(r.s_deviation, 0.05);
  EXPECT_NE(format_report(d.model, r).find("selected_k"), std::string::npos);
}

TEST(Diagnostics, ShapeMismatch) {
  EXPECT_THROW(exchangeability_diagnostics(Eigen::MatrixXd::Ones(5, 2), Eigen::MatrixXd::Ones(4, 2)),
               DataError);
}

TEST(FitKnockoff, RejectsTooFewRows) {
  const Eigen::MatrixXd q = gaussian_rows(Eigen::MatrixXd::Identity(3, 3), 3, 1);
  EXPECT_THROW(fit_knockoff_model(FeatureMatrix(q, names(3)), {}), DataError);
}

TEST(FitKnockoff, NormalizationRoundTrip) {
  const Eigen::MatrixXd q = gaussian_rows(ar1(3, 0.3), 100, 5).array() * 2.0 + 1.0;
  const FeatureMatrix fm(q, names(3));
  const Eigen::MatrixXd back = unstandardize(standardize(q, fm.normalization()), fm.normalization());
  EXPECT_LT((back - q).cwiseAbs().maxCoeff(), 1e-12);
}
