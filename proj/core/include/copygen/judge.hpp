#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "copygen/constraints.hpp"
#include "copygen/gateway.hpp"
#include "copygen/model.hpp"

// LLM-based evaluators. Each call grades exactly one criterion and returns
// the same EvaluationOutcome shape as the deterministic checks.
namespace copygen {

inline constexpr std::string_view kJudgeTemplateVersion = "judge-templates/1";

class JudgeFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kind name ("tone", ..., plus "frame") -> template text.
const std::map<std::string, std::string>& judge_templates();

std::string build_judge_prompt(const CopyDraft& draft, const JudgedCriterion& criterion,
                               const UseCaseSpec& spec);

/// Reads the last JSON object carrying a "verdict" key. Failing verdicts get
/// reason_code "judge.<kind>.<slug>"; text before the block is only logged.
/// Throws JudgeFormatError when no answer block can be found.
EvaluationOutcome parse_judge_response(std::string_view raw, const JudgedCriterion& criterion);

/// build -> gateway.complete(tag "judge:<criterion_id>") -> parse. A
/// malformed answer is re-asked once, then graded as judge.unparseable.
/// Gateway failures surface as JudgeUnavailable.
EvaluationOutcome run_judge(const CopyDraft& draft, const JudgedCriterion& criterion,
                            const UseCaseSpec& spec, Gateway& gateway);

JudgeRunner make_judge_runner(const UseCaseSpec& spec, Gateway& gateway);

}  // namespace copygen
