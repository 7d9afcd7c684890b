#include "scevae/knockoff.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "scevae/kvconfig.hpp"
#include "scevae/rng.hpp"

namespace scevae {

std::string to_string(SMethod method) {
  return method == SMethod::kSdp ? "sdp" : "equicorrelated";
}

SMethod parse_s_method(const std::string& s) {
  if (s == "sdp") return SMethod::kSdp;
  if (s == "equicorrelated" || s == "equi") return SMethod::kEquicorrelated;
  throw ConfigError("unknown knockoff method '" + s + "' (expected sdp|equicorrelated)");
}

Eigen::VectorXd ColumnNormalization::std_dev() const {
  return scale / std::sqrt(static_cast<double>(n_rows));
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names)
    : values_(std::move(values)), column_names_(std::move(column_names)) {
  if (static_cast<Eigen::Index>(column_names_.size()) != values_.cols()) {
    throw DataError("feature matrix: column name count does not match column count");
  }
  normalization_.n_rows = static_cast<std::size_t>(values_.rows());
  normalization_.mean = values_.colwise().mean().transpose();
  normalization_.scale.resize(values_.cols());
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    const double norm = (values_.col(j).array() - normalization_.mean(j)).matrix().norm();
    if (!(norm > 1e-12 * std::max(1.0, std::abs(normalization_.mean(j))))) {
      throw NumericalError("degenerate covariance: column '" + column_names_[j] +
                           "' has zero variance; drop it or add ridge regularization");
    }
    normalization_.scale(j) = norm;
  }
}

Eigen::MatrixXd FeatureMatrix::normalized() const {
  return ((values_.rowwise() - normalization_.mean.transpose()).array().rowwise() /
          normalization_.scale.transpose().array())
      .matrix();
}

Eigen::MatrixXd FeatureMatrix::gram() const {
  const Eigen::MatrixXd n = normalized();
  Eigen::MatrixXd g = n.transpose() * n;
  return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw, const ColumnNormalization& norm) {
  const Eigen::VectorXd sd = norm.std_dev();
  return ((raw.rowwise() - norm.mean.transpose()).array().rowwise() / sd.transpose().array())
      .matrix();
}

Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& std_rows,
                              const ColumnNormalization& norm) {
  const Eigen::VectorXd sd = norm.std_dev();
  return ((std_rows.array().rowwise() * sd.transpose().array()).matrix().rowwise() +
          norm.mean.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

constexpr double kPsdTolerance = 1e-10;

bool psd(const Eigen::MatrixXd& two_sigma, const Eigen::VectorXd& s) {
  Eigen::MatrixXd m = two_sigma;
  m.diagonal() -= s;
  return min_eigenvalue(m) >= -kPsdTolerance;
}

// Greedy per-coordinate increase of s under 2 Sigma - diag(s) >= 0. Each
// coordinate is pushed to its largest feasible value by bisection.
Eigen::VectorXd coordinate_ascent(const Eigen::MatrixXd& sigma, Eigen::VectorXd s) {
  const Eigen::MatrixXd two_sigma = 2.0 * sigma;
  const Eigen::Index p = sigma.rows();
  for (int sweep = 0; sweep < 50; ++sweep) {
    double gained = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double lo = s(j);
      double hi = 1.0;
      Eigen::VectorXd trial = s;
      trial(j) = hi;
      if (psd(two_sigma, trial)) {
        gained += hi - s(j);
        s(j) = hi;
        continue;
      }
      for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        trial(j) = mid;
        if (psd(two_sigma, trial)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      gained += lo - s(j);
      s(j) = lo;
    }
    if (gained < 1e-12) break;
  }
  return s;
}

}  // namespace

Eigen::VectorXd select_s(const Eigen::MatrixXd& sigma, SMethod method) {
  const Eigen::Index p = sigma.rows();
  if (sigma.cols() != p || p == 0) throw NumericalError("select_s: Sigma must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw NumericalError("select_s: Sigma is not symmetric");
  }
  if ((sigma.diagonal().array() - 1.0).abs().maxCoeff() > 1e-8) {
    throw NumericalError("select_s: Sigma must have unit diagonal");
  }
  const double lambda_min = min_eigenvalue(sigma);
  if (lambda_min < -kPsdTolerance) {
    throw NumericalError("select_s: Sigma is not positive semidefinite (lambda_min = " +
                         format_double(lambda_min) + ")");
  }
  const double equi = std::min(1.0, 2.0 * std::max(0.0, lambda_min));
  Eigen::VectorXd s_eq = Eigen::VectorXd::Constant(p, equi);
  if (method == SMethod::kEquicorrelated) return s_eq;

  // The equicorrelated point usually sits on the PSD boundary, where a single
  // coordinate cannot move; ascend from both it and the origin, keep the best.
  Eigen::VectorXd from_eq = coordinate_ascent(sigma, s_eq);
  Eigen::VectorXd from_zero = coordinate_ascent(sigma, Eigen::VectorXd::Zero(p));
  return from_zero.sum() > from_eq.sum() ? from_zero : from_eq;
}

KnockoffModel fit_knockoff_model(const FeatureMatrix& q, const KnockoffFitOptions& options) {
  if (q.rows() <= q.cols()) {
    throw DataError("knockoff fit needs more rows than columns");
  }
  if (!q.values().allFinite()) throw DataError("knockoff fit: non-finite values in Q");
  if (options.k_min < 1 || options.k_max < options.k_min) {
    throw ConfigError("knockoff fit: invalid K range");
  }

  KnockoffModel model;
  model.method = options.method;
  model.column_names = q.column_names();
  model.normalization = q.normalization();
  model.correlation = q.gram();
  model.s_vector = select_s(model.correlation, options.method);

  const Eigen::MatrixXd rows = standardize(q.values(), model.normalization);
  std::optional<EmFit> best;
  for (int k = options.k_min; k <= options.k_max; ++k) {
    model.diagnostics.tried_k.push_back(k);
    try {
      EmFit fit = fit_gmm(rows, k, options.em);
      model.diagnostics.bic.push_back(fit.bic);
      if (!best || fit.bic < best->bic) best = std::move(fit);
    } catch (const EmNonConvergence& e) {
      model.diagnostics.bic.push_back(std::numeric_limits<double>::quiet_NaN());
      model.diagnostics.failures.push_back(e.what());
      if (k == options.k_max && !best) {
        throw EmNonConvergence(std::string("knockoff fit: ") + e.what(), e.trace());
      }
    } catch (const DataError& e) {
      model.diagnostics.bic.push_back(std::numeric_limits<double>::quiet_NaN());
      model.diagnostics.failures.push_back(e.what());
    }
  }
  if (!best) throw NumericalError("knockoff fit: no mixture size could be fitted");
  model.gmm = std::move(best->mixture);
  model.diagnostics.selected_k = model.gmm.components();
  model.diagnostics.log_likelihood_trace = std::move(best->log_likelihood_trace);
  return model;
}

namespace {

// Second-order knockoff conditional for one mixture component.
struct ComponentSampler {
  Eigen::MatrixXd shrink;  // D Sigma^{-1}
  Eigen::MatrixXd root;    // V^{1/2}
};

ComponentSampler prepare_component(const Eigen::MatrixXd& cov, const Eigen::VectorXd& s) {
  // s is in correlation units; scale to the component's variances, then shrink
  // uniformly until 2 Sigma_k - diag(s_k) is PSD.
  Eigen::VectorXd sk = s.cwiseProduct(cov.diagonal());
  const Eigen::MatrixXd two_cov = 2.0 * cov;
  if (!psd(two_cov, sk)) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (psd(two_cov, mid * sk)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    sk *= lo;
  }
  const Eigen::MatrixXd cov_inv = cov.llt().solve(
      Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  ComponentSampler c;
  c.shrink = sk.asDiagonal() * cov_inv;
  Eigen::MatrixXd v = Eigen::MatrixXd(sk.asDiagonal()) * 2.0 - c.shrink * sk.asDiagonal();
  v = 0.5 * (v + v.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-8) {
    std::cerr << "warning: knockoff conditional covariance not PSD (min eigenvalue "
              << ev.minCoeff() << "); clipping at 0\n";
  }
  ev = ev.cwiseMax(0.0);
  c.root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return c;
}

}  // namespace

Eigen::MatrixXd sample_knockoffs(const KnockoffModel& model, const Eigen::MatrixXd& raw_rows,
                                 std::uint64_t seed) {
  const Eigen::Index p = static_cast<Eigen::Index>(model.column_names.size());
  if (raw_rows.cols() != p) {
    throw DataError("sample_knockoffs: expected " + std::to_string(p) + " columns, got " +
                    std::to_string(raw_rows.cols()));
  }
  const Eigen::MatrixXd rows = standardize(raw_rows, model.normalization);
  const int k_count = model.gmm.components();
  std::vector<ComponentSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    samplers.push_back(prepare_component(model.gmm.covariances[k], model.s_vector));
  }
  const Eigen::MatrixXd resp = model.gmm.responsibilities(rows);

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows.rows(), p);
  Eigen::VectorXd eps(p);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    // mixture assignment from the posterior p(k | row)
    const double u = unif(rng);
    int k = k_count - 1;
    double acc = 0.0;
    for (int j = 0; j < k_count; ++j) {
      acc += resp(i, j);
      if (u < acc) {
        k = j;
        break;
      }
    }
    for (Eigen::Index j = 0; j < p; ++j) eps(j) = normal(rng);
    const Eigen::VectorXd q = rows.row(i).transpose();
    const Eigen::VectorXd mean = q - samplers[k].shrink * (q - model.gmm.means[k]);
    out.row(i) = (mean + samplers[k].root * eps).transpose();
  }
  return unstandardize(out, model.normalization);
}

Eigen::MatrixXd sample_knockoffs(const KnockoffModel& model, const FeatureMatrix& q,
                                 std::uint64_t seed) {
  return sample_knockoffs(model, q.values(), seed);
}

ExchangeabilityReport exchangeability_diagnostics(const Eigen::MatrixXd& q_raw,
                                                  const Eigen::MatrixXd& q_knockoff_raw,
                                                  const Eigen::VectorXd& s_vector) {
  if (q_raw.rows() != q_knockoff_raw.rows() || q_raw.cols() != q_knockoff_raw.cols()) {
    throw DataError("exchangeability diagnostics: shape mismatch");
  }
  std::vector<std::string> names(static_cast<std::size_t>(q_raw.cols()));
  for (std::size_t j = 0; j < names.size(); ++j) names[j] = "q" + std::to_string(j);
  const FeatureMatrix q(q_raw, names);
  const auto& norm = q.normalization();
  const Eigen::MatrixXd qn = q.normalized();
  const Eigen::MatrixXd kn =
      ((q_knockoff_raw.rowwise() - norm.mean.transpose()).array().rowwise() /
       norm.scale.transpose().array())
          .matrix();
  const Eigen::MatrixXd sigma = qn.transpose() * qn;
  const Eigen::MatrixXd kk = kn.transpose() * kn;
  const Eigen::MatrixXd qk = qn.transpose() * kn;

  ExchangeabilityReport r;
  r.knockoff_gram_deviation = (kk - sigma).cwiseAbs().maxCoeff();
  Eigen::MatrixXd off = (qk - sigma).cwiseAbs();
  off.diagonal().setZero();
  r.cross_offdiag_deviation = off.maxCoeff();
  r.achieved_s = (sigma - qk).diagonal();
  if (s_vector.size() == r.achieved_s.size()) {
    r.s_deviation = (r.achieved_s - s_vector).cwiseAbs().maxCoeff();
  }
  return r;
}

std::string format_report(const KnockoffModel& model, const ExchangeabilityReport& report) {
  std::ostringstream os;
  auto vec = [&](const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += format_double(v(i));
    }
    return out;
  };
  std::string cols;
  for (std::size_t j = 0; j < model.column_names.size(); ++j) {
    if (j) cols += ",";
    cols += model.column_names[j];
  }
  os << "columns: " << cols << '\n';
  os << "method: " << to_string(model.method) << '\n';
  os << "s_vector: " << vec(model.s_vector) << '\n';
  os << "s_sum: " << format_double(model.s_vector.sum()) << '\n';
  os << "selected_k: " << model.diagnostics.selected_k << '\n';
  for (std::size_t i = 0; i < model.diagnostics.tried_k.size(); ++i) {
    os << "bic_k" << model.diagnostics.tried_k[i] << ": "
       << format_double(model.diagnostics.bic[i]) << '\n';
  }
  for (const auto& f : model.diagnostics.failures) os << "em_failure: " << f << '\n';
  os << "knockoff_gram_deviation: " << format_double(report.knockoff_gram_deviation) << '\n';
  os << "cross_offdiag_deviation: " << format_double(report.cross_offdiag_deviation) << '\n';
  os << "achieved_s: " << vec(report.achieved_s) << '\n';
  os << "s_deviation: " << format_double(report.s_deviation) << '\n';
  return os.str();
}

}  // namespace scevae
