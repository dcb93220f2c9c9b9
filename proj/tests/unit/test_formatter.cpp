#include "doctest.h"

#include "copygen/formatter.hpp"
#include "oracles.hpp"

using namespace copygen;

namespace {

std::string fmt(const std::string& s) {
  CopyDraft d;
  d.components["header"] = s;
  return apply_rules(d, default_ruleset()).components["header"];
}

const CopyStructure kHeader{{"header"}};
const CopyStructure kPair{{"header", "subheader"}};

}  // namespace

TEST_CASE("parse plain array") {
  const auto drafts = parse_generation(R"([{"header":"A"},{"header":"B"}])", kHeader, 2);
  REQUIRE(drafts.size() == 2);
  CHECK(drafts[0].components.at("header") == "A");
  CHECK(drafts[1].components.at("header") == "B");
  CHECK_FALSE(drafts[0].formatted);
}

TEST_CASE("parse tolerates prose and fences") {
  const auto drafts =
      parse_generation("Here you go:\n```json\n[{\"header\":\"A\",\"subheader\":\"B\"}]\n```", kPair, 1);
  REQUIRE(drafts.size() == 1);
  CHECK(drafts[0].components.at("header") == "A");
  CHECK(drafts[0].components.at("subheader") == "B");
}

TEST_CASE("parse failures") {
  CHECK_THROWS_AS(parse_generation(R"([{"title":"A"}])", kHeader, 1), ParseFailure);
  CHECK_THROWS_AS(parse_generation(R"([{"header":"A"}])", kHeader, 2), ParseFailure);
  CHECK_THROWS_AS(parse_generation(R"([{"header":7}])", kHeader, 1), ParseFailure);
  CHECK_THROWS_AS(parse_generation("no json at all", kHeader, 1), ParseFailure);
}

TEST_CASE("a lone object counts as one copy") {
  CHECK(parse_generation(R"(sure {"header":"A"})", kHeader, 1).size() == 1);
}

TEST_CASE("brackets inside strings do not confuse extraction") {
  const auto drafts = parse_generation(R"(x [{"header":"a ] b { c"}] y)", kHeader, 1);
  REQUIRE(drafts.size() == 1);
  CHECK(drafts[0].components.at("header") == "a ] b { c");
}

TEST_CASE("salvage keeps well-formed drafts only") {
  const auto drafts = salvage_generation(R"([{"header":"A"},{"title":"B"},{"header":"C"}])", kHeader, 5);
  REQUIRE(drafts.size() == 2);
  CHECK(drafts[1].components.at("header") == "C");
  CHECK(salvage_generation("garbage", kHeader, 3).empty());
}

TEST_CASE("single copy parsing") {
  const auto d = parse_single_copy(R"(Revised: {"header":"H","subheader":"S"})", kPair);
  CHECK(d.components.at("subheader") == "S");
  CHECK_THROWS_AS(parse_single_copy(R"({"header":"H"})", kPair), ParseFailure);
}

TEST_CASE("formatting examples") {
  CHECK(fmt("Fast and free") == "Fast & free");
  CHECK(fmt("milk, eggs, and bread") == "milk, eggs & bread");
  CHECK(fmt("Free delivery saves time.") == "Free delivery saves time");
  CHECK(fmt("Free shipping with no order minimum. You read it right.") ==
        "Free shipping with no order minimum. You read it right.");
  CHECK(fmt("Free delivery from stores saves you time and money") ==
        "Free delivery from stores saves you time & money");
}

TEST_CASE("rule details") {
  CHECK(fmt("Our brand and band") == "Our brand & band");
  CHECK(fmt("AND now") == "& now");
  CHECK(fmt("Guess what?") == "Guess what?");
  CHECK(fmt("Ready? Go!") == "Ready? Go!");
  CHECK(fmt("  lots   of\tspace  ") == "lots of space");
  CHECK(fmt("Hello!!") == "Hello!!");
  CHECK(fmt("Wait;,") == "Wait;,");
  CHECK(remove_serial_commas("a, b, , and c") == "a, b  and c");
  CHECK(remove_serial_commas("red, white, & blue") == "red, white & blue");
  CHECK(remove_serial_commas("salt, and pepper") == "salt, and pepper");
  CHECK(substitute_ampersand("sandy and android") == "sandy & android");
  CHECK(strip_terminal_punctuation("Done;") == "Done");
  CHECK(strip_terminal_punctuation("One. Two.") == "One. Two.");
}

TEST_CASE("formatting is idempotent and keeps component names") {
  oracle::Random rnd(42);
  for (int i = 0; i < 2000; ++i) {
    CopyDraft d;
    d.components["header"] = rnd.any_string(60);
    d.components["subheader"] = rnd.any_string(90);
    const auto once = apply_rules(d, default_ruleset());
    CHECK(once.formatted);
    CHECK(once.components.size() == 2);
    CHECK(apply_rules(once, default_ruleset()).components == once.components);
  }
}

TEST_CASE("strip never fires on multi-sentence or interrogative text") {
  oracle::Random rnd(7);
  for (int i = 0; i < 2000; ++i) {
    const auto s = rnd.any_string(40) + "? " + rnd.any_string(20) + ".";
    CHECK(strip_terminal_punctuation(s) == s);
  }
}

TEST_CASE("ruleset selection") {
  UseCaseSpec spec;
  CHECK(&ruleset_for(spec) == &default_ruleset());
  spec.format_rules = {FormatRule{FormatRuleId::whitespace_collapse, Json::object()}};
  CHECK(ruleset_for(spec).size() == 1);
  CHECK(default_ruleset().size() == 4);
  CHECK(default_ruleset()[0].rule_id == FormatRuleId::serial_comma_removal);
}
