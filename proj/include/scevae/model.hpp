#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scevae/lstm.hpp"
#include "scevae/rng.hpp"

namespace scevae {

struct Architecture {
  int latent_dim = 5;
  int hidden = 32;
  int depth = 2;
  int proxy_dim = 1;
  // Proxy components modelled as Bernoulli instead of Gaussian; empty means
  // all continuous.
  std::vector<bool> binary_proxy;

  bool is_binary(int j) const {
    return j < static_cast<int>(binary_proxy.size()) && binary_proxy[j];
  }
  int binary_count() const;
  int continuous_count() const { return proxy_dim - binary_count(); }
  void validate() const;
};

// Per-step diagonal Gaussian: mean and variance are T x d.
struct GaussianSequence {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;

  Eigen::Index steps() const { return mean.rows(); }
  Eigen::Index dim() const { return mean.cols(); }
};

struct ProxyDecoding {
  GaussianSequence gaussian;  // continuous components, in proxy order
  Eigen::MatrixXd bernoulli;  // T x binary_count, success probabilities
};

// Weights of the six conditional distributions:
//   dec_w  p(w_t | z_t)         dec_x  p(x_t | z_t)
//   dec_y  p(y_t | w_t, z_t)    enc_z  q(z_t | x_t, y_t, w_t)
//   aux_w  q(w_t | x_t)         aux_y  q(y_t | x_t, w_t)
struct ScevaeParams {
  Architecture arch;
  SequenceNet dec_w;
  SequenceNet dec_x;
  SequenceNet dec_y;
  SequenceNet enc_z;
  SequenceNet aux_w;
  SequenceNet aux_y;
  // Optimizer steps applied so far; 0 marks untrained parameters.
  long long training_steps = 0;

  static ScevaeParams create(const Architecture& arch, std::uint64_t seed);
  ScevaeParams zeros_like() const;

  // Visits every weight tensor with a stable dotted name ("dec_w.lstm0.bias").
  void for_each_tensor(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

  std::size_t parameter_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);

  // Zeroes the read-out layer of every head: each Gaussian head then emits
  // mean 0 and variance softplus(0) + floor, each Bernoulli head 0.5.
  void zero_output_heads();
};

inline constexpr double kDefaultVarianceFloor = 1e-6;

double softplus(double u);

// Inputs are time-major: x is T x proxy_dim, w and y are length T, z is T x D.
GaussianSequence encode(const ScevaeParams& p, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        double variance_floor = kDefaultVarianceFloor);
GaussianSequence decode_w(const ScevaeParams& p, const Eigen::MatrixXd& z,
                          double variance_floor = kDefaultVarianceFloor);
ProxyDecoding decode_x(const ScevaeParams& p, const Eigen::MatrixXd& z,
                       double variance_floor = kDefaultVarianceFloor);
GaussianSequence decode_y(const ScevaeParams& p, const Eigen::VectorXd& w,
                          const Eigen::MatrixXd& z,
                          double variance_floor = kDefaultVarianceFloor);
GaussianSequence aux_w(const ScevaeParams& p, const Eigen::MatrixXd& x,
                       double variance_floor = kDefaultVarianceFloor);
GaussianSequence aux_y(const ScevaeParams& p, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& w,
                       double variance_floor = kDefaultVarianceFloor);

struct ElboConfig {
  double lambda = 0.1;
  int mc_samples = 1;
  double variance_floor = kDefaultVarianceFloor;

  void validate() const;
};

// Sums over the window. `kl_term` is the lambda-weighted
// sum_t E_q[log p(z_t) - log q(z_t | .)]; reconstruction and auxiliary terms
// are log-likelihoods. loss = -(sum of all six).
struct ElboTerms {
  double kl_term = 0.0;
  double recon_x = 0.0;
  double recon_w = 0.0;
  double recon_y = 0.0;
  double aux_w = 0.0;
  double aux_y = 0.0;
  double loss = 0.0;
};

// Negative lower bound with reparameterized z samples drawn from `rng`.
// When `grad` is non-null the gradient of `loss` is added into it.
ElboTerms elbo(const ScevaeParams& p, const ElboConfig& cfg, const Eigen::MatrixXd& x,
               const Eigen::VectorXd& w, const Eigen::VectorXd& y, Rng& rng,
               ScevaeParams* grad = nullptr);

// Same, with explicit standard-normal draws: one T x D matrix per MC sample.
ElboTerms elbo_with_noise(const ScevaeParams& p, const ElboConfig& cfg,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                          const Eigen::VectorXd& y, const std::vector<Eigen::MatrixXd>& noise,
                          ScevaeParams* grad = nullptr);

// Gaussian log-density log N(value; mean, variance).
double gaussian_log_density(double value, double mean, double variance);

}  // namespace scevae
