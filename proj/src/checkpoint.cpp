#include "scevae/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "scevae/error.hpp"
#include "scevae/kvconfig.hpp"

namespace scevae {

void write_checkpoint(std::ostream& out, const ScevaeParams& params) {
  const Architecture& a = params.arch;
  out << "scevae-checkpoint " << kCheckpointVersion << '\n';
  out << "latent_dim " << a.latent_dim << '\n';
  out << "hidden " << a.hidden << '\n';
  out << "depth " << a.depth << '\n';
  out << "proxy_dim " << a.proxy_dim << '\n';
  out << "binary_proxy";
  for (int j = 0; j < a.proxy_dim; ++j) out << ' ' << (a.is_binary(j) ? 1 : 0);
  out << '\n';
  out << "training_steps " << params.training_steps << '\n';
  std::size_t count = 0;
  params.for_each_tensor([&](const std::string&, const Eigen::MatrixXd&) { ++count; });
  out << "arrays " << count << '\n';
  params.for_each_tensor([&](const std::string& name, const Eigen::MatrixXd& m) {
    out << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    // row-major values, one row per line
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ' ';
        out << format_double(m(i, j));
      }
      out << '\n';
    }
  });
  out << "end\n";
}

namespace {

std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(std::string("checkpoint truncated: expected ") + what);
  }
  return line;
}

int keyed_int(std::istream& in, const std::string& key) {
  std::istringstream ls(expect_line(in, key.c_str()));
  std::string k;
  int v = 0;
  if (!(ls >> k >> v) || k != key) throw DataError("checkpoint: expected '" + key + " <int>'");
  return v;
}

double parse_value(const std::string& tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError("checkpoint: bad numeric value '" + tok + "'");
  }
  return v;
}

}  // namespace

ScevaeParams read_checkpoint(std::istream& in) {
  {
    std::istringstream ls(expect_line(in, "header"));
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "scevae-checkpoint") {
      throw DataError("not a scevae checkpoint");
    }
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
  }
  Architecture arch;
  arch.latent_dim = keyed_int(in, "latent_dim");
  arch.hidden = keyed_int(in, "hidden");
  arch.depth = keyed_int(in, "depth");
  arch.proxy_dim = keyed_int(in, "proxy_dim");
  {
    std::istringstream ls(expect_line(in, "binary_proxy"));
    std::string k;
    ls >> k;
    if (k != "binary_proxy") throw DataError("checkpoint: expected binary_proxy");
    arch.binary_proxy.assign(static_cast<std::size_t>(std::max(0, arch.proxy_dim)), false);
    for (int j = 0; j < arch.proxy_dim; ++j) {
      int v = 0;
      if (!(ls >> v)) throw DataError("checkpoint: short binary_proxy mask");
      arch.binary_proxy[static_cast<std::size_t>(j)] = v != 0;
    }
  }
  long long training_steps = 0;
  {
    std::istringstream ls(expect_line(in, "training_steps"));
    std::string k;
    if (!(ls >> k >> training_steps) || k != "training_steps") {
      throw DataError("checkpoint: expected 'training_steps <int>'");
    }
  }
  const int count = keyed_int(in, "arrays");

  std::map<std::string, Eigen::MatrixXd> arrays;
  for (int a = 0; a < count; ++a) {
    std::istringstream ls(expect_line(in, "array header"));
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    if (!(ls >> tag >> name >> rows >> cols) || tag != "array" || rows < 0 || cols < 0) {
      throw DataError("checkpoint: malformed array header");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      std::istringstream rs(expect_line(in, "array row"));
      std::string tok;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(rs >> tok)) throw DataError("checkpoint: short row in '" + name + "'");
        m(i, j) = parse_value(tok);
      }
    }
    arrays.emplace(name, std::move(m));
  }
  if (expect_line(in, "end") != "end") throw DataError("checkpoint: missing 'end'");

  ScevaeParams p = ScevaeParams::create(arch, 0);
  p.for_each_tensor([&](const std::string& name, Eigen::MatrixXd& m) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw DataError("checkpoint: missing array '" + name + "'");
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw DataError("checkpoint: shape mismatch for '" + name + "'");
    }
    m = it->second;
  });
  p.training_steps = training_steps;
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ScevaeParams& params) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, params);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

ScevaeParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace scevae
