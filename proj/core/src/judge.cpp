#include "copygen/judge.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "copygen/formatter.hpp"
#include "copygen/taxonomy.hpp"
#include "copygen/text.hpp"

namespace copygen {

namespace detail {
const std::map<std::string, std::string>& judge_template_assets();
}

namespace {

constexpr std::string_view kReaskSuffix =
    "\n\nYour previous answer did not end with the required JSON answer block. "
    "Answer again and end with the JSON object only.";

std::string fill(std::string tmpl, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(token, pos)) != std::string::npos) {
      tmpl.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return tmpl;
}

std::string render_copy(const CopyDraft& draft, const UseCaseSpec& spec) {
  std::string out;
  for (const auto& name : spec.structure.components) {
    auto it = draft.components.find(name);
    if (it == draft.components.end()) continue;
    out += name + ": " + it->second + "\n";
  }
  return out;
}

std::string render_examples(const JudgedCriterion& criterion) {
  if (criterion.few_shot.empty()) return "";
  std::string out = "\nLabeled examples:\n";
  for (const auto& ex : criterion.few_shot) {
    out += "- Copy: " + ex.copy + "\n  Verdict: " + (ex.pass ? "pass" : "fail") + "\n";
    if (!ex.explanation.empty()) out += "  Why: " + ex.explanation + "\n";
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const std::map<std::string, std::string>& judge_templates() { return detail::judge_template_assets(); }

std::string build_judge_prompt(const CopyDraft& draft, const JudgedCriterion& criterion,
                               const UseCaseSpec& spec) {
  if (criterion.kind == CriterionKind::coherence &&
      (!draft.components.contains("header") || !draft.components.contains("subheader"))) {
    throw std::invalid_argument("coherence judging needs both header and subheader");
  }
  const auto& templates = judge_templates();
  const std::map<std::string, std::string> vars = {
      {"rubric", criterion.rubric_text},
      {"cohort", spec.persona ? spec.persona->cohort : criterion.rubric_text},
      {"persona_description", spec.persona ? spec.persona->description : ""},
      {"campaign_name", spec.campaign_name},
  };
  const std::string criterion_text = text::trim(fill(templates.at(to_string(criterion.kind)), vars));
  const std::string context =
      spec.context_description().empty() ? spec.context : fill(spec.context_description(), vars);
  return fill(templates.at("frame"), {
                                         {"context", context},
                                         {"criterion_id", criterion.criterion_id},
                                         {"criterion_text", criterion_text},
                                         {"examples", render_examples(criterion)},
                                         {"copy", render_copy(draft, spec)},
                                     });
}

EvaluationOutcome parse_judge_response(std::string_view raw, const JudgedCriterion& criterion) {
  const auto values = extract_json_values(raw);
  const auto answer = std::find_if(values.rbegin(), values.rend(), [](const Json& v) {
    return v.is_object() && v.contains("verdict") && v["verdict"].is_string();
  });
  if (answer == values.rend()) throw JudgeFormatError("no answer block with a verdict");

  const std::string verdict = lower(text::trim((*answer)["verdict"].get<std::string>()));
  if (verdict != "pass" && verdict != "fail") {
    throw JudgeFormatError("verdict must be pass or fail, got '" + verdict + "'");
  }
  spdlog::debug("judge {} reasoning: {}", criterion.criterion_id, raw.substr(0, 400));
  const std::string evaluator_id = "judge:" + criterion.criterion_id;
  if (verdict == "pass") return EvaluationOutcome::passed(evaluator_id);

  const auto field = [&](const char* key) {
    auto it = answer->find(key);
    return (it != answer->end() && it->is_string()) ? it->get<std::string>() : std::string();
  };
  std::string slug = slugify(text::trim(field("reason_code")));
  if (slug.empty()) slug = "failed";
  const std::string narrative = field("narrative");
  FeedbackRecord fb{"judge." + to_string(criterion.kind) + "." + slug,
                    Json{{"criterion_id", criterion.criterion_id},
                         {"kind", to_string(criterion.kind)},
                         {"rubric", criterion.rubric_text},
                         {"narrative", narrative}},
                    narrative.empty() ? "Rejected by the " + to_string(criterion.kind) + " evaluator." : narrative};
  return EvaluationOutcome::failed(evaluator_id, std::move(fb));
}

EvaluationOutcome run_judge(const CopyDraft& draft, const JudgedCriterion& criterion,
                            const UseCaseSpec& spec, Gateway& gateway) {
  const std::string prompt = build_judge_prompt(draft, criterion, spec);
  const std::string tag = tags::judge(criterion.criterion_id);
  auto ask = [&](const std::string& p) {
    try {
      return gateway.complete(p, tag);
    } catch (const ProviderError& e) {
      throw JudgeUnavailable(std::string("judge ") + criterion.criterion_id + " unavailable: " + e.what());
    }
  };
  try {
    return parse_judge_response(ask(prompt), criterion);
  } catch (const JudgeFormatError& first) {
    spdlog::warn("judge {} answer unparseable ({}); re-asking once", criterion.criterion_id, first.what());
  }
  try {
    return parse_judge_response(ask(prompt + std::string(kReaskSuffix)), criterion);
  } catch (const JudgeFormatError& second) {
    FeedbackRecord fb{std::string(reason::kJudgeUnparseable),
                      Json{{"criterion_id", criterion.criterion_id},
                           {"kind", to_string(criterion.kind)},
                           {"rubric", criterion.rubric_text},
                           {"error", second.what()}},
                      "The " + to_string(criterion.kind) + " evaluator gave no usable verdict."};
    return EvaluationOutcome::failed("judge:" + criterion.criterion_id, std::move(fb));
  }
}

JudgeRunner make_judge_runner(const UseCaseSpec& spec, Gateway& gateway) {
  return [&spec, &gateway](const CopyDraft& draft, const JudgedCriterion& criterion, const EvaluatorStep&) {
    return run_judge(draft, criterion, spec, gateway);
  };
}

}  // namespace copygen
