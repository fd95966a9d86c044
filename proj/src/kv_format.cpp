#include "poas/kv_format.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "poas/error.hpp"

namespace poas::kv {

void fail_at(int line, const std::string& what) {
  fail(errc::parse_failure, "line " + std::to_string(line) + ": " + what);
}

const Entry* Block::find(const std::string& key) const {
  for (const Entry& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

static std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

File parse(const std::string& text, const std::string& expected_header) {
  File out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  if (!std::getline(in, raw)) fail_at(1, "empty file, expected header '" + expected_header + "'");
  ++line_no;
  out.header = strip_cr(raw);
  if (out.header != expected_header)
    fail_at(1, "bad header '" + out.header + "', expected '" + expected_header + "'");

  bool in_block = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_cr(raw);
    if (line.empty()) {
      in_block = false;
      continue;
    }
    if (line.find_first_of(" \t") == 0) fail_at(line_no, "unexpected leading whitespace");

    std::string first = line;
    std::string rest;
    if (auto pos = line.find(' '); pos != std::string::npos) {
      first = line.substr(0, pos);
      rest = line.substr(pos + 1);
      if (rest.empty()) fail_at(line_no, "trailing space after '" + first + "'");
    }

    if (!in_block) {
      Block b;
      b.name = first;
      b.arg = rest;
      b.line = line_no;
      out.blocks.push_back(std::move(b));
      in_block = true;
      continue;
    }

    if (rest.empty()) fail_at(line_no, "key '" + first + "' has no value");
    Block& b = out.blocks.back();
    if (b.find(first) != nullptr) fail_at(line_no, "duplicate key '" + first + "'");
    b.entries.push_back(Entry{first, rest, line_no});
  }
  return out;
}

double parse_double(const Entry& entry) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(entry.value.c_str(), &end);
  if (end != entry.value.c_str() + entry.value.size() || entry.value.empty() || errno == ERANGE ||
      !std::isfinite(v))
    fail_at(entry.line, "key '" + entry.key + "': bad number '" + entry.value + "'");
  return v;
}

std::int64_t parse_int(const Entry& entry) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(entry.value.c_str(), &end, 10);
  if (end != entry.value.c_str() + entry.value.size() || entry.value.empty() || errno == ERANGE)
    fail_at(entry.line, "key '" + entry.key + "': bad integer '" + entry.value + "'");
  return v;
}

std::uint64_t parse_uint(const Entry& entry) {
  errno = 0;
  char* end = nullptr;
  if (!entry.value.empty() && entry.value[0] == '-')
    fail_at(entry.line, "key '" + entry.key + "': negative value '" + entry.value + "'");
  unsigned long long v = std::strtoull(entry.value.c_str(), &end, 10);
  if (end != entry.value.c_str() + entry.value.size() || entry.value.empty() || errno == ERANGE)
    fail_at(entry.line, "key '" + entry.key + "': bad integer '" + entry.value + "'");
  return v;
}

bool parse_bool(const Entry& entry) {
  if (entry.value == "true") return true;
  if (entry.value == "false") return false;
  fail_at(entry.line, "key '" + entry.key + "': expected true or false, got '" + entry.value + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace poas::kv
