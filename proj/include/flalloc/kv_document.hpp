#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flalloc {

/// Malformed config, spec or scenario document. Carries the offending line
/// (0 when the problem is a missing key) and field name.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, int line, std::string field, const std::string& what);

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Plain-text `key = value [value ...]` document. `#` starts a comment,
/// blank lines are ignored, keys are unique.
class KvDocument {
 public:
  struct Entry {
    std::vector<std::string> values;
    int line = 0;
  };

  static KvDocument parse(std::istream& in, std::string source = "<input>");
  static KvDocument parse_file(const std::string& path);

  bool has(std::string_view key) const;
  /// Line the key was defined on, 0 when absent.
  int line_of(std::string_view key) const;
  std::vector<std::string> keys() const;

  std::string get_string(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;

  double get_double_or(std::string_view key, double fallback) const;
  std::int64_t get_int_or(std::string_view key, std::int64_t fallback) const;
  std::string get_string_or(std::string_view key, std::string fallback) const;

  /// Throws if any key is not in `allowed`.
  void require_known(const std::vector<std::string_view>& allowed) const;

  const std::string& source() const { return source_; }

 private:
  const Entry& entry(std::string_view key) const;
  [[noreturn]] void fail(std::string_view key, const std::string& what) const;

  std::string source_;
  std::map<std::string, Entry, std::less<>> entries_;
};

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double value);

}  // namespace flalloc
