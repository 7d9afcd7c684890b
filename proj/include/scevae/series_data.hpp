#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scevae {

// Model-ready aligned series: proxy block x (T x p), cause w and effect y.
struct ModelData {
  Eigen::MatrixXd x;
  Eigen::VectorXd w;
  Eigen::VectorXd y;
  std::vector<std::string> proxy_names;

  Eigen::Index size() const { return w.size(); }
  ModelData slice(Eigen::Index start, Eigen::Index length) const {
    ModelData out;
    out.x = x.middleRows(start, length);
    out.w = w.segment(start, length);
    out.y = y.segment(start, length);
    out.proxy_names = proxy_names;
    return out;
  }
};

}  // namespace scevae
