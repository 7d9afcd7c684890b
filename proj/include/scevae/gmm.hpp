#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "scevae/error.hpp"

namespace scevae {

// Full-covariance Gaussian mixture over the rows of a data matrix.
struct GaussianMixture {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dimension() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  // log pi_k + log N(row; mu_k, Sigma_k) for every row (n x K).
  Eigen::MatrixXd log_joint(const Eigen::MatrixXd& rows) const;
  // p(k | row), n x K.
  Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& rows) const;
  double log_likelihood(const Eigen::MatrixXd& rows) const;
  // Free parameters: (K-1) weights + K p means + K p(p+1)/2 covariances.
  int parameter_count() const;
};

struct EmOptions {
  int max_iterations = 100;
  int restarts = 5;
  double ridge = 1e-6;
  // Convergence: mean per-row log-likelihood change below this value.
  double tolerance = 1e-3;
  std::uint64_t seed = 0;
};

struct EmFit {
  GaussianMixture mixture;
  std::vector<double> log_likelihood_trace;
  double log_likelihood = 0.0;
  double bic = 0.0;
};

class EmNonConvergence : public NumericalError {
 public:
  EmNonConvergence(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

// Fits a K-component mixture by expectation-maximization, keeping the best
// converged restart. Throws EmNonConvergence (carrying the likelihood trace of
// the best restart) when no restart converges within max_iterations.
EmFit fit_gmm(const Eigen::MatrixXd& rows, int components, const EmOptions& options);

double bic(double log_likelihood, int parameter_count, std::size_t n_rows);

}  // namespace scevae
