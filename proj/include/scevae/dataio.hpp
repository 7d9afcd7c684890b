#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scevae/scm.hpp"
#include "scevae/series_data.hpp"

namespace scevae {

enum class ProxyMode { kColumns, kUniformNoise };

std::string to_string(ProxyMode mode);
ProxyMode parse_proxy_mode(const std::string& s);

struct RoleMap {
  std::string effect = "COD";
  std::string cause = "AOD";
  std::vector<std::string> proxies{"SST", "EIS", "w500", "RH700", "RH850", "RH900"};
  ProxyMode mode = ProxyMode::kColumns;

  // Throws ConfigError on empty or overlapping roles.
  void validate() const;
};

// Raw header plus string cells, rows in file order.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws DataError naming the column when absent.
  std::size_t column_index(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

struct LoadOptions {
  Eigen::Index start = 0;
  std::optional<Eigen::Index> length;  // all remaining rows when absent
  std::uint64_t noise_seed = 0;        // uniform_noise proxies
};

struct SeriesSet {
  ModelData data;
  std::vector<bool> binary_proxy;
  std::size_t rows_in = 0;
  std::size_t rows_dropped = 0;
  std::size_t rows_out() const { return static_cast<std::size_t>(data.size()); }
};

// Empty cells and NA/NaN markers count as missing; rows with a missing value
// in any role column are dropped before slicing.
SeriesSet load_series(const CsvTable& table, const RoleMap& roles, const LoadOptions& options = {});
SeriesSet load_csv(const std::filesystem::path& path, const RoleMap& roles,
                   const LoadOptions& options = {});

// Numeric block of the named columns. Missing cells throw DataError.
Eigen::MatrixXd numeric_columns(const CsvTable& table, const std::vector<std::string>& names);

// Seeded U(0,1) draws, one column.
Eigen::MatrixXd uniform_noise_proxy(Eigen::Index n, std::uint64_t seed);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_text(const std::filesystem::path& path, const std::string& text);

// Columns: t, z, x, w, y, w_hat, y_hat, ite_true.
std::vector<std::string> scm_dataset_columns();
void export_dataset(const ScmDataset& data, const std::filesystem::path& path);
void export_dataset(const ScmDataset& data, std::ostream& out);
// Columns: t, <effect>, <cause>, <proxies...>.
void export_dataset(const SeriesSet& data, const RoleMap& roles, const std::filesystem::path& path);

// Reads an exported synthetic dataset. b and e4 are rebuilt from `config`.
ScmDataset load_scm_dataset(const CsvTable& table, const ScmConfig& config);
ScmDataset load_scm_dataset(const std::filesystem::path& path, const ScmConfig& config);

// True when the table carries the synthetic ground-truth columns.
bool is_scm_table(const CsvTable& table);

// Model view of a synthetic dataset: x (T x 1), w, y.
ModelData model_data(const ScmDataset& data);

}  // namespace scevae
