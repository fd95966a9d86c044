#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poas::kv {

// Line-oriented block format shared by the profile and machine config
// files: a header line, then blocks separated by blank lines. The first
// line of a block names it ("device gpu0", "profiling", "bus true"); the
// remaining lines are "key value" pairs. Parsing is strict: anything
// unrecognized is an error that names the offending line.

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Block {
  std::string name;
  std::string arg;
  int line = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& key) const;
};

struct File {
  std::string header;
  std::vector<Block> blocks;
};

File parse(const std::string& text, const std::string& expected_header);

// Strict numeric conversions; the whole token must be consumed.
double parse_double(const Entry& entry);
std::int64_t parse_int(const Entry& entry);
std::uint64_t parse_uint(const Entry& entry);
bool parse_bool(const Entry& entry);

// Shortest decimal that round-trips the exact double (17 significant
// digits), used by every writer so files reload bit for bit.
std::string format_double(double v);

[[noreturn]] void fail_at(int line, const std::string& what);

}  // namespace poas::kv
