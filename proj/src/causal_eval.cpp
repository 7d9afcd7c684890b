#include "scevae/causal_eval.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "scevae/error.hpp"
#include "scevae/kvconfig.hpp"

namespace scevae {

InferenceHeads heads_from(const ScevaeParams& params) {
  InferenceHeads h;
  h.aux_w = [&params](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return aux_w(params, x).mean.col(0);
  };
  h.aux_y = [&params](const Eigen::MatrixXd& x, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return aux_y(params, x, w).mean.col(0);
  };
  h.encode_mean = [&params](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w) -> Eigen::MatrixXd {
    return encode(params, x, y, w).mean;
  };
  h.decode_y = [&params](const Eigen::VectorXd& w, const Eigen::MatrixXd& z) -> Eigen::VectorXd {
    return decode_y(params, w, z).mean.col(0);
  };
  return h;
}

Branches infer_counterfactual(const InferenceHeads& heads, const ModelData& data,
                              const Eigen::VectorXd& w_hat, const InferenceOptions& options) {
  const Eigen::Index n = data.size();
  if (data.y.size() != n || data.x.rows() != n || w_hat.size() != n) {
    throw DataError("infer_counterfactual: series length mismatch");
  }
  Eigen::MatrixXd z_bar;
  if (options.use_auxiliary) {
    const Eigen::VectorXd w_star = heads.aux_w(data.x);
    const Eigen::VectorXd y_star = heads.aux_y(data.x, w_star);
    z_bar = heads.encode_mean(data.x, y_star, w_star);
  } else {
    z_bar = heads.encode_mean(data.x, data.y, data.w);
  }
  Branches b;
  b.factual = heads.decode_y(data.w, z_bar);
  b.counterfactual = heads.decode_y(w_hat, z_bar);
  return b;
}

Branches infer_counterfactual(const ScevaeParams& params, const ModelData& data,
                              const Eigen::VectorXd& w_hat, const InferenceOptions& options) {
  Branches b = infer_counterfactual(heads_from(params), data, w_hat, options);
  b.untrained = params.training_steps == 0;
  return b;
}

Branches infer_windowed(const ScevaeParams& params, const ModelData& data,
                        const Eigen::VectorXd& w_hat, Eigen::Index window_len,
                        const InferenceOptions& options) {
  const Eigen::Index n = data.size();
  if (w_hat.size() != n) throw DataError("infer_windowed: series length mismatch");
  if (window_len < 1) throw ConfigError("infer_windowed: window length must be >= 1");
  Branches out;
  out.factual.resize(n);
  out.counterfactual.resize(n);
  out.untrained = params.training_steps == 0;
  const InferenceHeads heads = heads_from(params);
  for (Eigen::Index start = 0; start < n; start += window_len) {
    const Eigen::Index len = std::min(window_len, n - start);
    const Branches part =
        infer_counterfactual(heads, data.slice(start, len), w_hat.segment(start, len), options);
    out.factual.segment(start, len) = part.factual;
    out.counterfactual.segment(start, len) = part.counterfactual;
  }
  return out;
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DataError("rmse: length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double rmse_ite(const Eigen::VectorXd& ite_true, const Branches& branches) {
  if (ite_true.size() == 0) {
    throw DataError("RMSE_ITE needs ground-truth ITE, which is only available in synthetic mode");
  }
  return rmse(ite_true, branches.counterfactual - branches.factual);
}

double rmse_factual(const Eigen::VectorXd& y, const Branches& branches) {
  return rmse(y, branches.factual);
}

double rmse_counterfactual(const Eigen::VectorXd& y_hat, const Branches& branches) {
  return rmse(y_hat, branches.counterfactual);
}

double ate(const Branches& branches) {
  if (branches.factual.size() != branches.counterfactual.size()) {
    throw DataError("ate: branch length mismatch");
  }
  if (branches.factual.size() == 0) return 0.0;
  return (branches.counterfactual - branches.factual).mean();
}

MeanSe mean_se(const std::vector<double>& values) {
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  MeanSe out;
  if (finite.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sum = 0.0;
  for (double v : finite) sum += v;
  out.mean = sum / static_cast<double>(finite.size());
  if (finite.size() >= 2) {
    double ss = 0.0;
    for (double v : finite) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(finite.size() - 1));
    out.se = sd / std::sqrt(static_cast<double>(finite.size()));
  }
  return out;
}

std::string format_mean_se(const MeanSe& v, int precision) {
  if (!std::isfinite(v.mean)) return "/";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v.mean;
  if (v.se) os << " ± " << *v.se;
  return os.str();
}

CausalReport aggregate_report(InterventionKind kind,
                              const std::vector<ReplicationMetrics>& replications,
                              bool has_ground_truth) {
  CausalReport r;
  r.intervention = kind;
  r.replications = replications;
  r.has_ground_truth = has_ground_truth;
  std::vector<double> ite, y, yh, atr, ate_t, abs_tr, abs_te;
  for (const auto& m : replications) {
    ite.push_back(m.rmse_ite);
    y.push_back(m.rmse_y);
    yh.push_back(m.rmse_y_hat);
    atr.push_back(m.ate_train);
    ate_t.push_back(m.ate_test);
    abs_tr.push_back(std::abs(m.ate_train));
    abs_te.push_back(std::abs(m.ate_test));
  }
  r.rmse_ite = mean_se(ite);
  r.rmse_y = mean_se(y);
  r.rmse_y_hat = mean_se(yh);
  r.ate_train = mean_se(atr);
  r.ate_test = mean_se(ate_t);
  r.abs_ate_train = mean_se(abs_tr);
  r.abs_ate_test = mean_se(abs_te);
  return r;
}

std::string method_name(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::kKnockoff:
      return "SCEVAE-Knockoff";
    case InterventionKind::kGaussianNoise:
      return "SCEVAE";
    case InterventionKind::kNone:
      return "SCEVAE-null";
  }
  return "SCEVAE";
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  return format_double(v);
}

std::string se(const MeanSe& v) { return v.se ? format_double(*v.se) : ""; }

}  // namespace

std::string synthetic_csv_header() {
  return "causal_link,parameter_b,method,rmse_ite,rmse_ite_se,rmse_y,rmse_y_se,rmse_y_hat,"
         "rmse_y_hat_se,replications";
}

std::string synthetic_csv_row(const std::string& link, const std::string& b_label,
                              const CausalReport& r) {
  std::ostringstream os;
  os << link << ',' << b_label << ',' << method_name(r.intervention) << ','
     << num(r.rmse_ite.mean) << ',' << se(r.rmse_ite) << ',' << num(r.rmse_y.mean) << ','
     << se(r.rmse_y) << ',' << num(r.rmse_y_hat.mean) << ',' << se(r.rmse_y_hat) << ','
     << r.replications.size();
  return os.str();
}

std::string real_csv_header() {
  return "method,proxy,ate_train,ate_train_se,ate_test,ate_test_se,abs_ate_train,"
         "abs_ate_test,rmse_y,rmse_y_se,replications";
}

std::string real_csv_row(const std::string& proxy_label, const CausalReport& r) {
  std::ostringstream os;
  os << method_name(r.intervention) << ',' << proxy_label << ',' << num(r.ate_train.mean) << ','
     << se(r.ate_train) << ',' << num(r.ate_test.mean) << ',' << se(r.ate_test) << ','
     << num(r.abs_ate_train.mean) << ',' << num(r.abs_ate_test.mean) << ','
     << num(r.rmse_y.mean) << ',' << se(r.rmse_y) << ',' << r.replications.size();
  return os.str();
}

std::string summary_text(const CausalReport& r) {
  std::ostringstream os;
  os << "method: " << method_name(r.intervention) << '\n';
  os << "intervention: " << to_string(r.intervention) << '\n';
  os << "replications: " << r.replications.size() << '\n';
  if (r.has_ground_truth) {
    os << "rmse_ite: " << format_mean_se(r.rmse_ite, 4) << '\n';
    os << "rmse_y_hat: " << format_mean_se(r.rmse_y_hat, 4) << '\n';
  }
  os << "rmse_y: " << format_mean_se(r.rmse_y, 4) << '\n';
  os << "ate_train: " << format_mean_se(r.ate_train, 4) << '\n';
  os << "ate_test: " << format_mean_se(r.ate_test, 4) << '\n';
  os << "abs_ate_test: " << format_mean_se(r.abs_ate_test, 4) << '\n';
  os << "seeds:";
  for (const auto& m : r.replications) os << ' ' << m.seed;
  os << '\n';
  return os.str();
}

}  // namespace scevae
