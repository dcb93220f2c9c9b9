#include "doctest.h"

#include <stdexcept>

#include "copygen/text.hpp"

using namespace copygen::text;

TEST_CASE("utf8 round trip and scalar counts") {
  const std::string s = "Straße été дом";
  CHECK(encode_utf8(decode_utf8(s)) == s);
  CHECK(scalar_count(s) == 14);
  CHECK(scalar_count("Leave the store trip to us") == 26);
  CHECK(scalar_count("Free delivery from stores saves you time & money") == 48);
}

TEST_CASE("malformed utf8 is rejected") {
  CHECK_FALSE(is_valid_utf8("\xC0\xAF"));          // overlong
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));      // surrogate
  CHECK_FALSE(is_valid_utf8("abc\xE2\x82"));       // truncated
  CHECK_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));  // beyond U+10FFFF
  CHECK(is_valid_utf8("\xE2\x82\xAC"));
  CHECK_THROWS_AS(decode_utf8("\xFF"), std::invalid_argument);
}

TEST_CASE("case folding covers latin, greek and cyrillic") {
  CHECK(fold(U"FREE Été ÖL ДОМ ΣΟΦΙΑ") == U"free été öl дом σοφια");
  CHECK(fold_case(U'1') == U'1');
}

TEST_CASE("word characters") {
  CHECK(is_word_char(U'a'));
  CHECK(is_word_char(U'_'));
  CHECK(is_word_char(U'ß'));
  CHECK(is_word_char(U'д'));
  CHECK_FALSE(is_word_char(U' '));
  CHECK_FALSE(is_word_char(U','));
  CHECK_FALSE(is_word_char(U'&'));
  CHECK(is_space(U'\t'));
  CHECK(is_space(U' '));
}

TEST_CASE("bounded search respects word edges") {
  const auto h = fold(decode_utf8("Know your nowhere, now"));
  const auto hits = find_bounded(h, U"now");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == Span{19, 22});

  SUBCASE("non-word needle edges match anywhere") {
    CHECK(find_bounded(U"a&b", U"&").size() == 1);
  }
  SUBCASE("overlapping occurrences are all reported") {
    CHECK(find_bounded(U"aa aa aa", U"aa aa").size() == 2);
  }
  SUBCASE("empty needle matches nothing") {
    CHECK(find_bounded(U"abc", U"").empty());
  }
}

TEST_CASE("whitespace helpers") {
  CHECK(collapse_whitespace("  free \t\n shipping  ") == "free shipping");
  CHECK(normalize(" FREE   Shipping") == U"free shipping");
  CHECK(trim("\n x \t") == "x");
}
