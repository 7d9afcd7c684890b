#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scevae/kvconfig.hpp"

namespace scevae {

using Series = std::vector<double>;

enum class Link { kLinear, kNonlinear };
enum class InterventionKind { kNone, kKnockoff, kGaussianNoise };

std::string to_string(Link link);
std::string to_string(InterventionKind kind);
Link parse_link(const std::string& s);
InterventionKind parse_intervention(const std::string& s);

// Coefficients of the confounded four-variable structural causal model
//   z_t = a z_{t-1} + e1
//   x_t = b_t tanh(z_{t-tau}) + s e2
//   w_t = c1 w_{t-1} + c2 z_t + e3
//   y_t = d1 y_{t-1} + d2 z_t + g exp(h w_t) + e4     (nonlinear link)
//   y_t = d1 y_{t-1} + d2 z_t + g w_t + e4            (linear link)
// with e_j ~ N(0, var_j).
struct ScmConfig {
  double a = 0.88;
  bool time_varying_b = true;
  double b = 0.95;  // used when time_varying_b is false
  double s = 0.5;
  int tau = 100;
  double c1 = 0.6;
  double c2 = 0.2;
  double d1 = 0.4;
  double d2 = 0.8;
  double g = 0.5;
  double h = 0.5;
  Link link = Link::kNonlinear;
  double noise_var1 = 0.5;
  double noise_var2 = 0.8;
  double noise_var3 = 0.7;
  double noise_var4 = 0.5;
  double intervention_noise_var = 0.6;
  int n_steps = 1000;
  double z0 = 0.1;
  double w0 = 0.1;
  double y0 = 0.0;
  std::uint64_t seed = 0;

  // The coefficient set used for the synthetic experiments.
  static ScmConfig defaults() { return ScmConfig{}; }

  // Throws ConfigError on an inadmissible configuration.
  void validate() const;

  KeyValues to_kv() const;
  // Keys absent from `kv` keep the values of `base`.
  static ScmConfig from_kv(const KeyValues& kv, const ScmConfig& base);
  static ScmConfig from_kv(const KeyValues& kv);
};

// Triangular proxy-strength profile indexed 0..N-1: b[t] = 2t/(N-2) for
// t = 1..N/2-1, b[0] = 0, and b[t] = b[N-1-t] on the second half.
Series time_varying_b(int n_steps);

struct ScmDataset {
  Series z;
  Series x;
  Series w;
  Series y;
  Series w_hat;
  Series y_hat;
  Series ite_true;
  Series b;             // proxy strength per step
  Series effect_noise;  // e4 draws, reused for counterfactual regeneration
  ScmConfig config;
  InterventionKind intervention_kind = InterventionKind::kNone;

  std::size_t size() const { return z.size(); }
};

// Simulates the factual system; w_hat = w, y_hat = y and ite_true = 0.
ScmDataset generate(const ScmConfig& config);

// Returns a copy of `data` with the cause replaced by `w_hat` and the effect
// regenerated under the same e4 draws; ite_true = y_hat - y.
ScmDataset apply_intervention(const ScmDataset& data, const Series& w_hat,
                              InterventionKind kind);

// Draws w_hat_t ~ N(0, intervention_noise_var) for every step.
Series gaussian_intervention(const ScmConfig& config, std::uint64_t seed);

// Runs the effect equation over `cause` with the given noise draws.
Series effect_recursion(const ScmConfig& config, const Series& z,
                        const Series& cause, const Series& effect_noise);

// Recovers the e4 draws implied by observed (z, w, y) under `config`.
Series recover_effect_noise(const ScmConfig& config, const Series& z,
                            const Series& w, const Series& y);

}  // namespace scevae
