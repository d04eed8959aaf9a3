#include <doctest.h>

#include <set>

#include "corpusforge/text_util.hpp"

using namespace corpusforge;

TEST_CASE("utf8 round trip keeps valid text") {
  const std::string text = "ሰላም world ።";
  CHECK(encode_utf8(decode_utf8(text)) == text);
  CHECK(codepoint_count(text) == 11);
}

TEST_CASE("invalid bytes decode to the replacement character") {
  const auto cps = decode_utf8(std::string("a\xff" "b\xc3", 4));
  REQUIRE(cps.size() == 4);
  CHECK(cps[1] == U'�');
  CHECK(cps[3] == U'�');
  CHECK(sanitize_utf8(std::string("x\0y", 3)) == "xy");
}

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("split_words ignores repeated spaces") {
  CHECK(split_words("  das  haus ") == std::vector<std::string>{"das", "haus"});
  CHECK(split_words("").empty());
  CHECK(trim(" \t x y \n") == "x y");
}

TEST_CASE("character classes") {
  CHECK(is_ethiopic(U'ሀ'));
  CHECK_FALSE(is_ethiopic(U'a'));
  CHECK(is_letter(U'ሀ'));
  CHECK(is_space(U' '));
  CHECK(to_lower(U'Q') == U'q');
}

TEST_CASE("splitmix64 has no collisions on a small range") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(splitmix64(i));
  CHECK(seen.size() == 10000);
}
