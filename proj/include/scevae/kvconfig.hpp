#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace scevae {

// Flat `key = value` text file. Lines starting with '#' or ';' are comments,
// and `[section]` headers are ignored so CLI11-style INI files also parse.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }

  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;
  static KeyValues parse(const std::string& text);

  static KeyValues read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace scevae
