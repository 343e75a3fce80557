#include "flalloc/kv_document.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace flalloc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string describe(const std::string& source, int line, const std::string& field,
                     const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  if (!field.empty()) os << ": field '" << field << "'";
  os << ": " << what;
  return os.str();
}

}  // namespace

ParseError::ParseError(std::string source, int line, std::string field, const std::string& what)
    : std::runtime_error(describe(source, line, field, what)), line_(line), field_(std::move(field)) {}

KvDocument KvDocument::parse(std::istream& in, std::string source) {
  KvDocument doc;
  doc.source_ = std::move(source);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view view(raw);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const std::string line = trim(view);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(doc.source_, line_no, "", "expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ParseError(doc.source_, line_no, "", "empty key");
    Entry entry;
    entry.line = line_no;
    std::istringstream tokens(line.substr(eq + 1));
    for (std::string tok; tokens >> tok;) entry.values.push_back(tok);
    if (entry.values.empty()) throw ParseError(doc.source_, line_no, key, "missing value");
    if (doc.entries_.count(key) != 0) throw ParseError(doc.source_, line_no, key, "duplicate key");
    doc.entries_.emplace(std::move(key), std::move(entry));
  }
  return doc;
}

KvDocument KvDocument::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  return parse(in, path);
}

bool KvDocument::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::vector<std::string> KvDocument::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [key, _] : entries_) out.push_back(key);
  return out;
}

const KvDocument::Entry& KvDocument::entry(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing required key");
  return it->second;
}

void KvDocument::fail(std::string_view key, const std::string& what) const {
  const auto it = entries_.find(key);
  throw ParseError(source_, it == entries_.end() ? 0 : it->second.line, std::string(key), what);
}

std::string KvDocument::get_string(std::string_view key) const {
  const Entry& e = entry(key);
  if (e.values.size() != 1) fail(key, "expected a single value");
  return e.values.front();
}

static bool parse_number(const std::string& token, double& out) {
  errno = 0;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end != token.c_str() && *end == '\0' && errno != ERANGE;
}

double KvDocument::get_double(std::string_view key) const {
  double value = 0.0;
  if (!parse_number(get_string(key), value)) fail(key, "not a number");
  return value;
}

std::int64_t KvDocument::get_int(std::string_view key) const {
  const std::string token = get_string(key);
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) fail(key, "not an integer");
  return value;
}

std::vector<double> KvDocument::get_doubles(std::string_view key) const {
  const Entry& e = entry(key);
  std::vector<double> out(e.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    if (!parse_number(e.values[i], out[i])) {
      fail(key, "element " + std::to_string(i) + " is not a number");
    }
  }
  return out;
}

double KvDocument::get_double_or(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KvDocument::get_int_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::string KvDocument::get_string_or(std::string_view key, std::string fallback) const {
  return has(key) ? get_string(key) : fallback;
}

void KvDocument::require_known(const std::vector<std::string_view>& allowed) const {
  for (const auto& [key, e] : entries_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(source_, e.line, key, "unknown key");
    }
  }
}

int KvDocument::line_of(std::string_view key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace flalloc
