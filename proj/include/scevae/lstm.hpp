#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scevae/rng.hpp"

namespace scevae {

// One LSTM cell layer. Gate blocks are stacked as (input, forget, cell, output)
// along the rows of the weight matrices.
struct LstmLayer {
  Eigen::MatrixXd w_input;      // 4H x in
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::MatrixXd bias;         // 4H x 1
};

// Stacked unidirectional LSTM followed by an affine read-out applied at every
// step. The output at step t depends on inputs at steps <= t only.
struct SequenceNet {
  int input_dim = 0;
  int hidden = 0;
  int output_dim = 0;
  std::vector<LstmLayer> layers;
  Eigen::MatrixXd w_out;  // out x H
  Eigen::MatrixXd b_out;  // out x 1

  // Orthogonal recurrent blocks, small-uniform input and read-out weights,
  // forget-gate bias 1.
  static SequenceNet create(int input_dim, int hidden, int depth, int output_dim, Rng& rng);
  // Same shapes, every entry zero.
  SequenceNet zeros_like() const;

  void for_each_tensor(const std::string& prefix,
                       const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each_tensor(
      const std::string& prefix,
      const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
};

// Activations retained by the forward pass for back-propagation.
struct SequenceCache {
  struct Layer {
    Eigen::MatrixXd input;   // in x T
    Eigen::MatrixXd gates;   // 4H x T, post-activation
    Eigen::MatrixXd cell;    // H x T
    Eigen::MatrixXd tanh_cell;
    Eigen::MatrixXd hidden;  // H x T
  };
  std::vector<Layer> layers;
};

// input: T x input_dim. Returns T x output_dim. `cache` may be null.
Eigen::MatrixXd forward(const SequenceNet& net, const Eigen::MatrixXd& input,
                        SequenceCache* cache = nullptr);

// Accumulates parameter gradients into `grad` and returns dL/d(input), T x in.
Eigen::MatrixXd backward(const SequenceNet& net, const SequenceCache& cache,
                         const Eigen::MatrixXd& d_output, SequenceNet& grad);

}  // namespace scevae
