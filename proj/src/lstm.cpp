#include "scevae/lstm.hpp"

#include <cmath>
#include <random>

namespace scevae {

namespace {

Eigen::MatrixXd orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

Eigen::MatrixXd uniform(int rows, int cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

SequenceNet SequenceNet::create(int input_dim, int hidden, int depth, int output_dim,
                                Rng& rng) {
  SequenceNet net;
  net.input_dim = input_dim;
  net.hidden = hidden;
  net.output_dim = output_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int l = 0; l < depth; ++l) {
    const int in = l == 0 ? input_dim : hidden;
    LstmLayer layer;
    layer.w_input = uniform(4 * hidden, in, bound, rng);
    layer.w_recurrent.resize(4 * hidden, hidden);
    for (int g = 0; g < 4; ++g) layer.w_recurrent.middleRows(g * hidden, hidden) = orthogonal(hidden, rng);
    layer.bias = Eigen::MatrixXd::Zero(4 * hidden, 1);
    layer.bias.middleRows(hidden, hidden).setOnes();
    net.layers.push_back(std::move(layer));
  }
  net.w_out = uniform(output_dim, hidden, 0.1 * bound, rng);
  net.b_out = Eigen::MatrixXd::Zero(output_dim, 1);
  return net;
}

SequenceNet SequenceNet::zeros_like() const {
  SequenceNet z = *this;
  z.for_each_tensor("", [](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

void SequenceNet::for_each_tensor(
    const std::string& prefix,
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string base = prefix + "lstm" + std::to_string(l) + ".";
    fn(base + "w_input", layers[l].w_input);
    fn(base + "w_recurrent", layers[l].w_recurrent);
    fn(base + "bias", layers[l].bias);
  }
  fn(prefix + "w_out", w_out);
  fn(prefix + "b_out", b_out);
}

void SequenceNet::for_each_tensor(
    const std::string& prefix,
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  const_cast<SequenceNet*>(this)->for_each_tensor(
      prefix, [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, m); });
}

Eigen::MatrixXd forward(const SequenceNet& net, const Eigen::MatrixXd& input,
                        SequenceCache* cache) {
  const Eigen::Index steps = input.rows();
  const int h = net.hidden;
  if (cache) cache->layers.assign(net.layers.size(), {});
  if (steps == 0) return Eigen::MatrixXd(0, net.output_dim);

  Eigen::MatrixXd x = input.transpose();  // in x T
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LstmLayer& layer = net.layers[l];
    Eigen::MatrixXd gates = layer.w_input * x;
    gates.colwise() += layer.bias.col(0);
    Eigen::MatrixXd cell(h, steps);
    Eigen::MatrixXd tanh_cell(h, steps);
    Eigen::MatrixXd hid(h, steps);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto a = gates.col(t);
      a.noalias() += layer.w_recurrent * h_prev;
      for (int k = 0; k < h; ++k) {
        a(k) = sigmoid(a(k));
        a(h + k) = sigmoid(a(h + k));
        a(2 * h + k) = std::tanh(a(2 * h + k));
        a(3 * h + k) = sigmoid(a(3 * h + k));
        const double c = a(h + k) * c_prev(k) + a(k) * a(2 * h + k);
        const double tc = std::tanh(c);
        cell(k, t) = c;
        tanh_cell(k, t) = tc;
        hid(k, t) = a(3 * h + k) * tc;
      }
      h_prev = hid.col(t);
      c_prev = cell.col(t);
    }
    if (cache) {
      auto& cl = cache->layers[l];
      cl.input = std::move(x);
      cl.gates = std::move(gates);
      cl.cell = std::move(cell);
      cl.tanh_cell = std::move(tanh_cell);
      cl.hidden = hid;
    }
    x = std::move(hid);
  }
  Eigen::MatrixXd out = net.w_out * x;
  out.colwise() += net.b_out.col(0);
  return out.transpose();
}

Eigen::MatrixXd backward(const SequenceNet& net, const SequenceCache& cache,
                         const Eigen::MatrixXd& d_output, SequenceNet& grad) {
  const Eigen::Index steps = d_output.rows();
  const int h = net.hidden;
  if (steps == 0) return Eigen::MatrixXd(0, net.input_dim);

  const Eigen::MatrixXd d_out_t = d_output.transpose();  // out x T
  const Eigen::MatrixXd& top = cache.layers.back().hidden;
  grad.w_out.noalias() += d_out_t * top.transpose();
  grad.b_out.col(0) += d_out_t.rowwise().sum();
  Eigen::MatrixXd dh_above = net.w_out.transpose() * d_out_t;  // H x T

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const LstmLayer& layer = net.layers[li];
    const auto& cl = cache.layers[li];
    LstmLayer& gl = grad.layers[li];
    Eigen::MatrixXd d_pre(4 * h, steps);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    for (Eigen::Index t = steps; t-- > 0;) {
      const auto g = cl.gates.col(t);
      for (int k = 0; k < h; ++k) {
        const double i_g = g(k);
        const double f_g = g(h + k);
        const double c_g = g(2 * h + k);
        const double o_g = g(3 * h + k);
        const double tc = cl.tanh_cell(k, t);
        const double c_prev = t > 0 ? cl.cell(k, t - 1) : 0.0;
        const double dh = dh_above(k, t) + dh_next(k);
        const double d_o = dh * tc;
        const double dc = dc_next(k) + dh * o_g * (1.0 - tc * tc);
        d_pre(k, t) = dc * c_g * i_g * (1.0 - i_g);
        d_pre(h + k, t) = dc * c_prev * f_g * (1.0 - f_g);
        d_pre(2 * h + k, t) = dc * i_g * (1.0 - c_g * c_g);
        d_pre(3 * h + k, t) = d_o * o_g * (1.0 - o_g);
        dc_next(k) = dc * f_g;
      }
      dh_next.noalias() = layer.w_recurrent.transpose() * d_pre.col(t);
    }
    gl.w_input.noalias() += d_pre * cl.input.transpose();
    if (steps > 1) {
      gl.w_recurrent.noalias() +=
          d_pre.rightCols(steps - 1) * cl.hidden.leftCols(steps - 1).transpose();
    }
    gl.bias.col(0) += d_pre.rowwise().sum();
    dh_above = layer.w_input.transpose() * d_pre;  // in x T
  }
  return dh_above.transpose();
}

}  // namespace scevae
