#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dadnn {

/// Ordered `key = value` text records. Blank lines and `#` comments are
/// ignored; later duplicates overwrite earlier values.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, std::string_view source = "<text>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, bool value);
  void set_list(const std::string& key, const std::vector<std::size_t>& values);
  void set_list(const std::string& key, const std::vector<double>& values);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;

  std::string get_string(std::string_view key, const std::string& fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::size_t get_size(std::string_view key, std::size_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::size_t> get_size_list(std::string_view key,
                                         const std::vector<std::size_t>& fallback) const;
  std::vector<double> get_double_list(std::string_view key,
                                      const std::vector<double>& fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string dump() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string source_ = "<text>";
};

// Strict numeric parsing shared by every text reader; throw ConfigError.
double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);
std::string format_double(double v);

}  // namespace dadnn
