#include "dadnn/kv.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dadnn/errors.hpp"

namespace dadnn {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError(std::string(what) + ": empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError(std::string(what) + ": not a number: '" + s + "'");
  return v;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(std::string(what) + ": not an integer: '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

KeyValues KeyValues::parse(std::string_view text, std::string_view source) {
  KeyValues kv;
  kv.source_ = std::string(source);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? text.size() - start
                                                                      : nl - start);
    ++line_no;
    std::string body = trim(line);
    if (!body.empty() && body.front() != '#') {
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError(kv.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
      std::string key = trim(std::string_view(body).substr(0, eq));
      std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key.empty())
        throw ConfigError(kv.source_ + ":" + std::to_string(line_no) + ": empty key");
      kv.set(key, value);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValues::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValues::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void KeyValues::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

void KeyValues::set_list(const std::string& key, const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
  set(key, s);
}

void KeyValues::set_list(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
  set(key, s);
}

bool KeyValues::contains(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KeyValues::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string KeyValues::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw ConfigError(source_ + ": missing key '" + std::string(key) + "'");
  return *v;
}

std::string KeyValues::get_string(std::string_view key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValues::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, source_ + ": " + std::string(key)) : fallback;
}

std::int64_t KeyValues::get_int(std::string_view key, std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_int(*v, source_ + ": " + std::string(key)) : fallback;
}

std::size_t KeyValues::get_size(std::string_view key, std::size_t fallback) const {
  const auto v = get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(source_ + ": " + std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

bool KeyValues::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError(source_ + ": " + std::string(key) + ": not a boolean: '" + *v + "'");
}

std::vector<std::size_t> KeyValues::get_size_list(std::string_view key,
                                                  const std::vector<std::size_t>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  if (trim(*v).empty()) return out;
  for (const auto& item : split(*v, ',')) {
    const auto n = parse_int(item, source_ + ": " + std::string(key));
    if (n < 0) throw ConfigError(source_ + ": " + std::string(key) + " entries must be non-negative");
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

std::vector<double> KeyValues::get_double_list(std::string_view key,
                                               const std::vector<double>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  if (trim(*v).empty()) return out;
  for (const auto& item : split(*v, ',')) out.push_back(parse_double(item, source_ + ": " + std::string(key)));
  return out;
}

std::string KeyValues::dump() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << dump();
}

}  // namespace dadnn
