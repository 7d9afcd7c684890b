#include "scevae/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "scevae/error.hpp"
#include "scevae/kvconfig.hpp"
#include "scevae/rng.hpp"

namespace scevae {

std::string to_string(ProxyMode mode) {
  return mode == ProxyMode::kColumns ? "columns" : "uniform_noise";
}

ProxyMode parse_proxy_mode(const std::string& s) {
  if (s == "columns") return ProxyMode::kColumns;
  if (s == "uniform_noise") return ProxyMode::kUniformNoise;
  throw ConfigError("unknown proxy mode '" + s + "' (expected columns or uniform_noise)");
}

void RoleMap::validate() const {
  if (effect.empty()) throw ConfigError("role map: effect column is empty");
  if (cause.empty()) throw ConfigError("role map: cause column is empty");
  if (effect == cause) throw ConfigError("role map: effect and cause are the same column");
  if (mode == ProxyMode::kColumns) {
    if (proxies.empty()) throw ConfigError("role map: at least one proxy column is required");
    std::set<std::string> seen;
    for (const auto& p : proxies) {
      if (p == effect || p == cause) {
        throw ConfigError("role map: proxy '" + p + "' also has another role");
      }
      if (!seen.insert(p).second) throw ConfigError("role map: proxy '" + p + "' listed twice");
    }
  }
}

std::size_t CsvTable::column_index(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing column: " + name);
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(trim(cell));
  return out;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError("non-numeric cell '" + cell + "' in column " + column + " at data row " +
                    std::to_string(row + 1));
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.precision(17);
  return out;
}

void check_stream(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!have_header) {
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
      if (trim(line).empty()) continue;
      t.header = split_line(line);
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw DataError("row " + std::to_string(t.rows.size() + 1) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw DataError("CSV has no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in);
}

Eigen::MatrixXd uniform_noise_proxy(Eigen::Index n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x75u}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd out(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) out(i, 0) = u(rng);
  return out;
}

SeriesSet load_series(const CsvTable& table, const RoleMap& roles, const LoadOptions& options) {
  roles.validate();
  const std::size_t ie = table.column_index(roles.effect);
  const std::size_t ic = table.column_index(roles.cause);
  std::vector<std::size_t> ip;
  if (roles.mode == ProxyMode::kColumns) {
    for (const auto& p : roles.proxies) ip.push_back(table.column_index(p));
  }

  std::vector<std::size_t> role_cols{ie, ic};
  role_cols.insert(role_cols.end(), ip.begin(), ip.end());

  SeriesSet out;
  out.rows_in = table.rows.size();
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool missing = false;
    for (std::size_t c : role_cols) missing = missing || is_missing(table.rows[r][c]);
    if (missing) {
      ++out.rows_dropped;
    } else {
      kept.push_back(r);
    }
  }
  if (out.rows_dropped > 0) {
    std::cerr << "dataio: dropped " << out.rows_dropped << " of " << out.rows_in
              << " rows with missing values\n";
  }
  if (kept.empty()) throw DataError("no rows left after dropping missing values");

  const auto n_clean = static_cast<Eigen::Index>(kept.size());
  if (options.start < 0 || options.start >= n_clean) {
    throw ConfigError("start " + std::to_string(options.start) + " outside the " +
                      std::to_string(n_clean) + " usable rows");
  }
  Eigen::Index len = options.length.value_or(n_clean - options.start);
  if (len < 1 || options.start + len > n_clean) {
    throw ConfigError("slice [" + std::to_string(options.start) + ", " +
                      std::to_string(options.start + len) + ") exceeds the " +
                      std::to_string(n_clean) + " usable rows");
  }

  auto& d = out.data;
  d.y.resize(len);
  d.w.resize(len);
  const Eigen::Index p = roles.mode == ProxyMode::kColumns ? static_cast<Eigen::Index>(ip.size()) : 1;
  d.x.resize(len, p);
  for (Eigen::Index i = 0; i < len; ++i) {
    const std::size_t r = kept[static_cast<std::size_t>(options.start + i)];
    const auto& row = table.rows[r];
    d.y(i) = parse_number(row[ie], roles.effect, r);
    d.w(i) = parse_number(row[ic], roles.cause, r);
    for (std::size_t j = 0; j < ip.size(); ++j) {
      d.x(i, static_cast<Eigen::Index>(j)) = parse_number(row[ip[j]], roles.proxies[j], r);
    }
  }
  if (roles.mode == ProxyMode::kUniformNoise) {
    d.x = uniform_noise_proxy(len, options.noise_seed);
    d.proxy_names = {"U"};
  } else {
    d.proxy_names = roles.proxies;
  }
  out.binary_proxy.assign(static_cast<std::size_t>(p), false);
  if (roles.mode == ProxyMode::kColumns) {
    for (Eigen::Index j = 0; j < p; ++j) {
      bool binary = true;
      for (Eigen::Index i = 0; i < len && binary; ++i) {
        binary = d.x(i, j) == 0.0 || d.x(i, j) == 1.0;
      }
      out.binary_proxy[static_cast<std::size_t>(j)] = binary;
    }
  }
  return out;
}

SeriesSet load_csv(const std::filesystem::path& path, const RoleMap& roles,
                   const LoadOptions& options) {
  return load_series(read_csv(path), roles, options);
}

Eigen::MatrixXd numeric_columns(const CsvTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(table.column_index(n));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(table.rows.size()),
                      static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& cell = table.rows[r][idx[j]];
      if (is_missing(cell)) {
        throw DataError("missing value in column " + names[j] + " at data row " +
                        std::to_string(r + 1));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          parse_number(cell, names[j], r);
    }
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DataError("write_csv: header/column count mismatch");
  }
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  auto out = open_out(path);
  write_csv(out, header, values);
  check_stream(out, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  check_stream(out, path);
}

std::vector<std::string> scm_dataset_columns() {
  return {"t", "z", "x", "w", "y", "w_hat", "y_hat", "ite_true"};
}

namespace {

Eigen::MatrixXd scm_matrix(const ScmDataset& d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd m(n, 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m.row(i) << static_cast<double>(i), d.z[k], d.x[k], d.w[k], d.y[k], d.w_hat[k], d.y_hat[k],
        d.ite_true[k];
  }
  return m;
}

}  // namespace

void export_dataset(const ScmDataset& data, std::ostream& out) {
  write_csv(out, scm_dataset_columns(), scm_matrix(data));
}

void export_dataset(const ScmDataset& data, const std::filesystem::path& path) {
  write_csv(path, scm_dataset_columns(), scm_matrix(data));
}

void export_dataset(const SeriesSet& data, const RoleMap& roles,
                    const std::filesystem::path& path) {
  const auto& d = data.data;
  std::vector<std::string> header{"t", roles.effect, roles.cause};
  header.insert(header.end(), d.proxy_names.begin(), d.proxy_names.end());
  Eigen::MatrixXd m(d.size(), 3 + d.x.cols());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = d.y(i);
    m(i, 2) = d.w(i);
    m.row(i).tail(d.x.cols()) = d.x.row(i);
  }
  write_csv(path, header, m);
}

bool is_scm_table(const CsvTable& table) {
  for (const auto& c : scm_dataset_columns()) {
    if (std::find(table.header.begin(), table.header.end(), c) == table.header.end()) return false;
  }
  return true;
}

ScmDataset load_scm_dataset(const CsvTable& table, const ScmConfig& config) {
  const auto cols = scm_dataset_columns();
  const Eigen::MatrixXd m = numeric_columns(table, cols);
  const auto n = static_cast<std::size_t>(m.rows());
  ScmDataset d;
  d.config = config;
  d.config.n_steps = static_cast<int>(n);
  auto col = [&](int j) {
    Series s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = m(static_cast<Eigen::Index>(i), j);
    return s;
  };
  d.z = col(1);
  d.x = col(2);
  d.w = col(3);
  d.y = col(4);
  d.w_hat = col(5);
  d.y_hat = col(6);
  d.ite_true = col(7);
  if (config.time_varying_b && n % 2 == 0 && n >= 4) {
    d.b = time_varying_b(static_cast<int>(n));
  } else {
    d.b.assign(n, config.b);
  }
  d.effect_noise = recover_effect_noise(d.config, d.z, d.w, d.y);
  bool intervened = false;
  for (std::size_t i = 0; i < n; ++i) intervened = intervened || d.w_hat[i] != d.w[i];
  d.intervention_kind = intervened ? InterventionKind::kKnockoff : InterventionKind::kNone;
  return d;
}

ScmDataset load_scm_dataset(const std::filesystem::path& path, const ScmConfig& config) {
  return load_scm_dataset(read_csv(path), config);
}

ModelData model_data(const ScmDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  ModelData m;
  m.x.resize(n, 1);
  m.w.resize(n);
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m.x(i, 0) = data.x[k];
    m.w(i) = data.w[k];
    m.y(i) = data.y[k];
  }
  m.proxy_names = {"x"};
  return m;
}

}  // namespace scevae
