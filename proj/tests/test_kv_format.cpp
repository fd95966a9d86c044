#include <doctest.h>

#include <string>

#include "poas/error.hpp"
#include "poas/kv_format.hpp"
#include "poas/rng.hpp"

using namespace poas;

TEST_CASE("kv parse splits header, blocks, and entries") {
  const std::string text =
      "fmt v1\n"
      "\n"
      "bus true\n"
      "\n"
      "device gpu0\n"
      "kind gpu\n"
      "slope 1.5e-13\n";
  const kv::File file = kv::parse(text, "fmt v1");
  REQUIRE(file.blocks.size() == 2);
  CHECK(file.header == "fmt v1");
  CHECK(file.blocks[0].name == "bus");
  CHECK(file.blocks[0].arg == "true");
  CHECK(file.blocks[0].entries.empty());
  CHECK(file.blocks[1].name == "device");
  CHECK(file.blocks[1].arg == "gpu0");
  REQUIRE(file.blocks[1].entries.size() == 2);
  CHECK(file.blocks[1].entries[0].key == "kind");
  CHECK(file.blocks[1].entries[0].value == "gpu");
  CHECK(file.blocks[1].find("slope") != nullptr);
  CHECK(file.blocks[1].find("missing") == nullptr);
}

TEST_CASE("kv parse strips carriage returns and tolerates trailing blank lines") {
  const kv::File file = kv::parse("fmt v1\r\n\r\nbus false\r\n\r\n\r\n", "fmt v1");
  REQUIRE(file.blocks.size() == 1);
  CHECK(file.blocks[0].arg == "false");
}

TEST_CASE("kv parse rejects malformed input with the offending line") {
  auto message_of = [](const std::string& text) {
    try {
      kv::parse(text, "fmt v1");
    } catch (const Error& e) {
      CHECK(e.code() == errc::parse_failure);
      return std::string(e.what());
    }
    return std::string();
  };

  SUBCASE("wrong header") { CHECK(message_of("fmt v2\n\nbus true\n") != ""); }
  SUBCASE("duplicate key names its line") {
    const std::string msg = message_of("fmt v1\n\ndevice a\nkind cpu\nkind cpu\n");
    CHECK(msg.find("line 5") != std::string::npos);
    CHECK(msg.find("kind") != std::string::npos);
  }
  SUBCASE("entry without a value") {
    CHECK(message_of("fmt v1\n\ndevice a\nkind\n").find("line 4") != std::string::npos);
  }
  SUBCASE("indented line") {
    CHECK(message_of("fmt v1\n\ndevice a\n kind cpu\n") != "");
  }
  SUBCASE("empty file") { CHECK(message_of("") != ""); }
}

TEST_CASE("kv numeric parsing is strict") {
  auto entry = [](const std::string& v) { return kv::Entry{"key", v, 3}; };
  CHECK(kv::parse_double(entry("2.5e-3")) == 2.5e-3);
  CHECK(kv::parse_int(entry("-42")) == -42);
  CHECK(kv::parse_uint(entry("18446744073709551615")) == 18446744073709551615ULL);
  CHECK(kv::parse_bool(entry("true")));
  CHECK(!kv::parse_bool(entry("false")));

  CHECK_THROWS_AS(kv::parse_double(entry("1.5x")), Error);
  CHECK_THROWS_AS(kv::parse_double(entry("")), Error);
  CHECK_THROWS_AS(kv::parse_double(entry("inf")), Error);
  CHECK_THROWS_AS(kv::parse_double(entry("1e999")), Error);
  CHECK_THROWS_AS(kv::parse_int(entry("12.5")), Error);
  CHECK_THROWS_AS(kv::parse_uint(entry("-1")), Error);
  CHECK_THROWS_AS(kv::parse_bool(entry("yes")), Error);
}

TEST_CASE("format_double round-trips arbitrary doubles bit for bit") {
  Rng rng(0x5eedULL);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    // Spread mantissas and exponents across the planner's realistic range.
    const double v = rng.next_range(-1.0, 1.0) * std::pow(10.0, rng.next_int(-18, 18));
    const std::string text = kv::format_double(v);
    const double back = kv::parse_double(kv::Entry{"v", text, 1});
    REQUIRE(back == v);
    ++checked;
  }
  MESSAGE("round-tripped ", checked, " doubles through format_double");
}
