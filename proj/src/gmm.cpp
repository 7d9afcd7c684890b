#include "scevae/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "scevae/rng.hpp"

namespace scevae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Row-wise log-sum-exp of an n x K matrix.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    out(i) = mx + std::log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

}  // namespace

Eigen::MatrixXd GaussianMixture::log_joint(const Eigen::MatrixXd& rows) const {
  const Eigen::Index n = rows.rows();
  const int k_count = components();
  const double p = static_cast<double>(rows.cols());
  Eigen::MatrixXd out(n, k_count);
  for (int k = 0; k < k_count; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[k]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(
          "degenerate mixture covariance (not positive definite); consider a "
          "larger ridge regularization");
    }
    const Eigen::MatrixXd& l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    Eigen::MatrixXd centered = (rows.rowwise() - means[k].transpose()).transpose();
    llt.matrixL().solveInPlace(centered);
    const Eigen::VectorXd maha = centered.colwise().squaredNorm().transpose();
    out.col(k) = (-0.5 * (maha.array() + log_det + p * kLog2Pi)).matrix();
    out.col(k).array() += std::log(weights(k));
  }
  return out;
}

Eigen::MatrixXd GaussianMixture::responsibilities(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd lj = log_joint(rows);
  const Eigen::VectorXd norm = log_sum_exp_rows(lj);
  lj.colwise() -= norm;
  return lj.array().exp().matrix();
}

double GaussianMixture::log_likelihood(const Eigen::MatrixXd& rows) const {
  return log_sum_exp_rows(log_joint(rows)).sum();
}

int GaussianMixture::parameter_count() const {
  const int k = components();
  const int p = dimension();
  return (k - 1) + k * p + k * p * (p + 1) / 2;
}

double bic(double log_likelihood, int parameter_count, std::size_t n_rows) {
  return -2.0 * log_likelihood +
         static_cast<double>(parameter_count) * std::log(static_cast<double>(n_rows));
}

namespace {

struct RestartResult {
  GaussianMixture mixture;
  std::vector<double> trace;
  bool converged = false;
  bool failed = false;
};

GaussianMixture initialize(const Eigen::MatrixXd& rows, int k_count,
                           const EmOptions& options, Rng& rng) {
  const Eigen::Index n = rows.rows();
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  cov.diagonal().array() += options.ridge;

  // k-means++ style seeding of the component means.
  GaussianMixture g;
  g.weights = Eigen::VectorXd::Constant(k_count, 1.0 / k_count);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  g.means.push_back(rows.row(pick(rng)).transpose());
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(g.means.size()) < k_count) {
    const Eigen::VectorXd& last = g.means.back();
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (rows.row(i).transpose() - last).squaredNorm());
    }
    std::discrete_distribution<Eigen::Index> choose(d2.data(), d2.data() + n);
    g.means.push_back(rows.row(choose(rng)).transpose());
  }
  g.covariances.assign(static_cast<std::size_t>(k_count), cov);
  return g;
}

RestartResult run_em(const Eigen::MatrixXd& rows, int k_count,
                     const EmOptions& options, Rng& rng) {
  RestartResult r;
  r.mixture = initialize(rows, k_count, options, rng);
  const Eigen::Index n = rows.rows();
  double prev = -std::numeric_limits<double>::infinity();
  try {
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      // E-step
      Eigen::MatrixXd lj = r.mixture.log_joint(rows);
      const Eigen::VectorXd norm = log_sum_exp_rows(lj);
      const double ll = norm.sum();
      r.trace.push_back(ll);
      if (!std::isfinite(ll)) {
        r.failed = true;
        return r;
      }
      if (std::abs(ll - prev) <= options.tolerance * static_cast<double>(n)) {
        r.converged = true;
        return r;
      }
      prev = ll;
      lj.colwise() -= norm;
      const Eigen::MatrixXd resp = lj.array().exp().matrix();

      // M-step
      const Eigen::VectorXd nk = resp.colwise().sum().transpose();
      for (int k = 0; k < k_count; ++k) {
        if (nk(k) < 1e-10) {
          r.failed = true;
          return r;
        }
        r.mixture.weights(k) = nk(k) / static_cast<double>(n);
        const Eigen::VectorXd mu = rows.transpose() * resp.col(k) / nk(k);
        const Eigen::MatrixXd centered = rows.rowwise() - mu.transpose();
        Eigen::MatrixXd cov = centered.transpose() *
                              (centered.array().colwise() * resp.col(k).array()).matrix() /
                              nk(k);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += options.ridge;
        r.mixture.means[k] = mu;
        r.mixture.covariances[k] = cov;
      }
    }
    // Likelihood of the final M-step, to decide convergence of the last update.
    const double ll = r.mixture.log_likelihood(rows);
    r.trace.push_back(ll);
    r.converged = std::abs(ll - prev) <= options.tolerance * static_cast<double>(n);
  } catch (const NumericalError&) {
    r.failed = true;
  }
  return r;
}

}  // namespace

EmFit fit_gmm(const Eigen::MatrixXd& rows, int components, const EmOptions& options) {
  if (components < 1) throw ConfigError("mixture needs at least one component");
  if (rows.rows() <= components) {
    throw DataError("too few rows for a " + std::to_string(components) +
                    "-component mixture");
  }
  Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(components)}));

  const int restarts = components == 1 ? 1 : std::max(1, options.restarts);
  std::optional<RestartResult> best;
  std::vector<double> best_unconverged_trace;
  double best_unconverged_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RestartResult res = run_em(rows, components, options, rng);
    if (res.failed || res.trace.empty()) continue;
    const double ll = res.trace.back();
    if (!res.converged) {
      if (ll > best_unconverged_ll) {
        best_unconverged_ll = ll;
        best_unconverged_trace = res.trace;
      }
      continue;
    }
    if (!best || ll > best->trace.back()) best = std::move(res);
  }
  if (!best) {
    throw EmNonConvergence("EM did not converge for K=" + std::to_string(components) +
                               " within " + std::to_string(options.max_iterations) +
                               " iterations",
                           best_unconverged_trace);
  }
  EmFit fit;
  fit.mixture = std::move(best->mixture);
  fit.log_likelihood_trace = std::move(best->trace);
  fit.log_likelihood = fit.log_likelihood_trace.back();
  fit.bic = bic(fit.log_likelihood, fit.mixture.parameter_count(),
                static_cast<std::size_t>(rows.rows()));
  return fit;
}

}  // namespace scevae
