#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scevae/kvconfig.hpp"
#include "scevae/model.hpp"
#include "scevae/rng.hpp"
#include "scevae/series_data.hpp"

namespace scevae {

struct SplitSpec {
  double test_fraction = 0.10;  // taken from the end of the series
  double val_fraction = 0.10;   // of the remaining training part, from its end
};

struct Segment {
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

struct Segments {
  Segment train;
  Segment val;
  Segment test;
};

Segments compute_segments(Eigen::Index n, const SplitSpec& spec);

// Per-variable affine normalization fitted on the training segment.
struct NormalizationStats {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_std;
  double w_mean = 0.0;
  double w_std = 1.0;
  double y_mean = 0.0;
  double y_std = 1.0;

  ModelData apply(const ModelData& raw) const;
  ModelData invert(const ModelData& normalized) const;
  double normalize_w(double v) const { return (v - w_mean) / w_std; }
  double normalize_y(double v) const { return (v - y_mean) / y_std; }
};

struct PreparedData {
  ModelData train;
  ModelData val;
  ModelData test;
  Segments segments;
  NormalizationStats stats;
};

// Contiguous, unshuffled split; statistics come from the training segment
// only. Binary proxy components (per `binary_proxy`) are left unscaled.
// Throws DataError on a zero-variance variable.
PreparedData split_and_normalize(const ModelData& raw, const SplitSpec& spec,
                                 const std::vector<bool>& binary_proxy = {});

struct Window {
  Eigen::Index start = 0;
  ModelData data;
};

// Uniformly random contiguous slice. Throws DataError when the segment is
// shorter than `window_len`.
Window sample_window(const ModelData& segment, Eigen::Index window_len, Rng& rng);

struct TrainConfig {
  int window_len = 100;
  int windows_per_epoch = 100;
  int epochs = 100;
  double learning_rate = 1e-5;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip_norm = 5.0;
  int patience = 20;  // epochs without validation improvement; 0 disables
  std::uint64_t seed = 0;
  ElboConfig elbo;
  int replications = 5;
  // architecture
  int latent_dim = 5;
  int hidden = 32;
  int depth = 2;

  void validate() const;
  KeyValues to_kv() const;
  static TrainConfig from_kv(const KeyValues& kv, const TrainConfig& base);
  static TrainConfig from_kv(const KeyValues& kv);
};

// Adam moments with decoupled weight decay.
class AdamW {
 public:
  AdamW(const ScevaeParams& shape, const TrainConfig& cfg);
  void step(ScevaeParams& params, const ScevaeParams& grad);

 private:
  ScevaeParams m_;
  ScevaeParams v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  long long t_ = 0;
};

// Scales `grad` to a global L2 norm of at most `max_norm`; returns the norm
// before clipping.
double clip_global_norm(ScevaeParams& grad, double max_norm);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // per time step, averaged over the epoch's windows
  double val_loss = 0.0;    // per time step, posterior-mean latent
  double rmse_y_train = 0.0;
  double rmse_y_test = 0.0;  // NaN when no test segment is supplied
  int clip_events = 0;
};

struct TrainResult {
  ScevaeParams params;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool diverged = false;
  std::string message;
};

// Validation loss per step with z fixed at the posterior mean.
double validation_loss(const ScevaeParams& params, const ElboConfig& cfg, const ModelData& data);

// `test` is used for the reporting column rmse_y_test only.
TrainResult train(const ScevaeParams& init, const TrainConfig& cfg, const ModelData& train,
                  const ModelData& val, const ModelData* test = nullptr);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace scevae
