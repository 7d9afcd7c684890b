#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scevae/gmm.hpp"

namespace scevae {

enum class SMethod { kSdp, kEquicorrelated };

std::string to_string(SMethod method);
SMethod parse_s_method(const std::string& s);

// Per-column affine map. `scale` is the column norm after centering, so the
// normalized columns have unit Euclidean norm and Gram matrix = correlation.
struct ColumnNormalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::size_t n_rows = 0;

  // Unit-variance standard deviation implied by `scale`.
  Eigen::VectorXd std_dev() const;
};

// Observed columns (rows = time steps) and the record used to normalize them.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  // Throws NumericalError when a column has zero variance.
  FeatureMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names);

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const ColumnNormalization& normalization() const { return normalization_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  // Centered, unit-norm columns.
  Eigen::MatrixXd normalized() const;
  // Gram matrix of the normalized columns (unit diagonal).
  Eigen::MatrixXd gram() const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> column_names_;
  ColumnNormalization normalization_;
};

// Maps raw rows into the unit-variance space of `norm` and back.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw, const ColumnNormalization& norm);
Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& std_rows,
                              const ColumnNormalization& norm);

struct KnockoffFitDiagnostics {
  std::vector<int> tried_k;
  std::vector<double> bic;             // aligned with tried_k; NaN when EM failed
  std::vector<std::string> failures;   // one message per failed K
  std::vector<double> log_likelihood_trace;  // of the selected K
  int selected_k = 0;
};

struct KnockoffModel {
  SMethod method = SMethod::kSdp;
  Eigen::VectorXd s_vector;     // correlation units
  Eigen::MatrixXd correlation;  // Gram matrix of the fitting rows
  GaussianMixture gmm;          // over standardized rows
  ColumnNormalization normalization;
  std::vector<std::string> column_names;
  KnockoffFitDiagnostics diagnostics;
};

struct KnockoffFitOptions {
  SMethod method = SMethod::kSdp;
  int k_min = 1;
  int k_max = 5;
  EmOptions em;
};

KnockoffModel fit_knockoff_model(const FeatureMatrix& q, const KnockoffFitOptions& options);

// Decorrelation vector s for a unit-diagonal PSD matrix. Throws
// NumericalError when `sigma` is not symmetric, unit-diagonal and PSD.
Eigen::VectorXd select_s(const Eigen::MatrixXd& sigma, SMethod method);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

// Samples one knockoff copy for every row of `raw_rows` (raw units in, raw
// units out). Rows are mapped through the model's normalization.
Eigen::MatrixXd sample_knockoffs(const KnockoffModel& model,
                                 const Eigen::MatrixXd& raw_rows, std::uint64_t seed);
Eigen::MatrixXd sample_knockoffs(const KnockoffModel& model, const FeatureMatrix& q,
                                 std::uint64_t seed);

struct ExchangeabilityReport {
  double knockoff_gram_deviation = 0.0;  // max |Q~'Q~ - Sigma|
  double cross_offdiag_deviation = 0.0;  // max_{j!=k} |Q'Q~ - Sigma|
  Eigen::VectorXd achieved_s;            // diag(Sigma - Q'Q~)
  double s_deviation = 0.0;              // max |achieved_s - s_vector| when given
};

// Both matrices are normalized with q's column record before comparison.
ExchangeabilityReport exchangeability_diagnostics(
    const Eigen::MatrixXd& q_raw, const Eigen::MatrixXd& q_knockoff_raw,
    const Eigen::VectorXd& s_vector = Eigen::VectorXd());

// Structured `key: value` text rendering.
std::string format_report(const KnockoffModel& model, const ExchangeabilityReport& report);

}  // namespace scevae
