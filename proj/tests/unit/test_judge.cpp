#include "doctest.h"

#include "copygen/judge.hpp"
#include "fixtures.hpp"

using namespace copygen;

namespace {

const JudgedCriterion& criterion(const UseCaseSpec& spec, const std::string& id) {
  const auto* c = spec.constraints.criterion(id);
  REQUIRE(c != nullptr);
  return *c;
}

CopyDraft pair(std::string h, std::string s) {
  CopyDraft d;
  d.formatted = true;
  d.components = {{"header", std::move(h)}, {"subheader", std::move(s)}};
  return d;
}

Gateway mock(std::vector<TranscriptEntry> entries) {
  ProviderConfig cfg;
  cfg.attempts = 1;
  return Gateway(std::make_unique<MockProvider>(MockTranscript{std::move(entries), true}), cfg);
}

}  // namespace

TEST_CASE("tone prompt embeds the rubric and asks for reasoning and an answer block") {
  const auto spec = fixtures::load_config("campaign-a-free-delivery");
  CopyDraft d;
  d.components["header"] = "Free delivery from stores";
  const auto p = build_judge_prompt(d, criterion(spec, "tone"), spec);
  CHECK(p.find(criterion(spec, "tone").rubric_text) != std::string::npos);
  CHECK(p.find("step-by-step") != std::string::npos);
  CHECK(p.find("\"verdict\"") != std::string::npos);
  CHECK(p.find("\"reason_code\"") != std::string::npos);
  CHECK(p.find("\"narrative\"") != std::string::npos);
  CHECK(p.find("Free delivery from stores") != std::string::npos);
  CHECK(p.find("ShopPlus offers free delivery") != std::string::npos);  // context description
  CHECK(p.find("The most incredible deal") != std::string::npos);       // few-shot example
}

TEST_CASE("coherence prompt asks about a coherent message") {
  const auto spec = fixtures::load_config("campaign-b-free-delivery");
  const auto p = build_judge_prompt(pair("Leave the store trip to us", "Free & fast delivery"),
                                    criterion(spec, "coherence"), spec);
  CHECK(p.find("form a coherent message") != std::string::npos);
  CHECK(p.find("Leave the store trip to us") != std::string::npos);
  CopyDraft single;
  single.components["header"] = "x";
  CHECK_THROWS_AS(build_judge_prompt(single, criterion(spec, "coherence"), spec), std::invalid_argument);
}

TEST_CASE("persona prompt embeds the cohort") {
  const auto spec = fixtures::load_config("campaign-c");
  const auto p = build_judge_prompt(pair("Pet food at your door", "Free delivery"), criterion(spec, "persona"), spec);
  CHECK(p.find("pet owners") != std::string::npos);
  CHECK(p.find(spec.persona->description) != std::string::npos);
}

TEST_CASE("every criterion kind has a template") {
  for (const char* kind :
       {"tone", "coherence", "topic_inclusion", "topic_exclusion", "persona", "value_proposition", "style", "frame"}) {
    CHECK(judge_templates().contains(kind));
  }
}

TEST_CASE("parsing answers") {
  const JudgedCriterion tone{"tone", CriterionKind::tone, "calm", {}};
  const auto fail = parse_judge_response(
      R"(...step by step... {"verdict":"fail","reason_code":"hyperbole","narrative":"contains hyperbolic terms"})", tone);
  CHECK_FALSE(fail.pass);
  CHECK(fail.feedback.reason_code == "judge.tone.hyperbole");
  CHECK(fail.feedback.narrative == "contains hyperbolic terms");

  const auto pass = parse_judge_response(R"(fine {"verdict":"PASS","reason_code":"","narrative":""})", tone);
  CHECK(pass.pass);
  CHECK(pass.feedback.is_pass());

  CHECK_THROWS_AS(parse_judge_response("no json here", tone), JudgeFormatError);
  CHECK_THROWS_AS(parse_judge_response(R"({"verdict":"maybe"})", tone), JudgeFormatError);

  SUBCASE("the last answer block wins and codes are slugified") {
    const auto o = parse_judge_response(
        R"(Example: {"verdict":"pass"} Final: {"verdict":"fail","reason_code":"Too Pushy!","narrative":"n"})", tone);
    CHECK(o.feedback.reason_code == "judge.tone.too_pushy_");
  }
}

TEST_CASE("judge outcomes look like deterministic outcomes") {
  const JudgedCriterion tone{"tone", CriterionKind::tone, "calm", {}};
  const auto j = Json(parse_judge_response(R"({"verdict":"pass"})", tone));
  const auto d = Json(EvaluationOutcome::passed("length"));
  for (const auto& [key, _] : d.items()) CHECK(j.contains(key));
  CHECK(j.size() == d.size());
}

TEST_CASE("run_judge through the gateway") {
  const auto spec = fixtures::load_config("campaign-a-free-delivery");
  CopyDraft d;
  d.formatted = true;
  d.components["header"] = "The best deal ever";
  const auto& tone = criterion(spec, "tone");

  SUBCASE("scripted fail") {
    auto g = mock({{"judge:tone", std::nullopt, R"({"verdict":"fail","reason_code":"hyperbole","narrative":"x"})",
                    std::nullopt}});
    CHECK(run_judge(d, tone, spec, g).feedback.reason_code == "judge.tone.hyperbole");
  }
  SUBCASE("scripted pass") {
    auto g = mock({{"judge:tone", std::nullopt, R"({"verdict":"pass"})", std::nullopt}});
    CHECK(run_judge(d, tone, spec, g).pass);
  }
  SUBCASE("malformed answer is re-asked once") {
    auto g = mock({{"judge:tone", std::nullopt, "I think it is fine", std::nullopt},
                   {"judge:tone", std::nullopt, R"({"verdict":"pass"})", std::nullopt}});
    CHECK(run_judge(d, tone, spec, g).pass);
  }
  SUBCASE("two malformed answers grade as unparseable") {
    auto g = mock({{"judge:tone", std::nullopt, "hmm", std::nullopt}, {"judge:tone", std::nullopt, "hmm", std::nullopt}});
    const auto o = run_judge(d, tone, spec, g);
    CHECK_FALSE(o.pass);
    CHECK(o.feedback.reason_code == "judge.unparseable");
  }
  SUBCASE("gateway down") {
    auto g = mock({});
    CHECK_THROWS_AS(run_judge(d, tone, spec, g), JudgeUnavailable);
  }
}

TEST_CASE("judge runner grades one criterion per call") {
  const auto spec = fixtures::load_config("campaign-c");
  std::vector<TranscriptEntry> entries;
  for (const auto& s : spec.evaluator_plan.steps) {
    if (s.type == StepType::judge) entries.push_back({tags::judge(*s.criterion_id), std::nullopt, R"({"verdict":"pass"})", std::nullopt});
  }
  ProviderConfig cfg;
  auto provider = std::make_unique<MockProvider>(MockTranscript{entries, true});
  auto* raw = provider.get();
  Gateway g(std::move(provider), cfg);
  const auto d = pair("Pet food for pet owners", "free delivery, shipping & streaming");
  const auto r = run_plan(d, spec, make_judge_runner(spec, g));
  CHECK(r.all_passed());
  CHECK(raw->requests().size() == entries.size());
  for (const auto& req : raw->requests()) CHECK(req.request_tag.rfind("judge:", 0) == 0);
}
