#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copygen/model.hpp"

// Deterministic evaluators and evaluator-plan sequencing.
//
// All matching is case-insensitive (simple case folding) on Unicode scalar
// values. A literal whose first/last character is a word character must sit
// on a word boundary, so "now" never matches inside "Know" or "nowhere".
// Positions in feedback details are scalar offsets within the component.
namespace copygen {

/// Raised by a judge runner when the provider cannot produce a verdict.
class JudgeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::u32string_view kForbiddenAfterWord = U".,;:!?";

EvaluationOutcome check_length(const CopyDraft& draft, const LengthConstraint& constraint,
                               const std::string& evaluator_id = "length");

EvaluationOutcome check_keywords(const CopyDraft& draft,
                                 const std::vector<std::vector<std::string>>& include_groups,
                                 const std::vector<std::string>& exclude,
                                 const std::string& evaluator_id = "keywords");

EvaluationOutcome check_punctuation_after(const CopyDraft& draft, const std::vector<std::string>& words,
                                          const std::string& evaluator_id = "punctuation");

/// Flags occurrences of an avoided term that are not part of an occurrence of
/// its preferred term. Never rewrites the copy.
EvaluationOutcome check_lexical_prefs(const CopyDraft& draft, const std::vector<LexicalPref>& prefs,
                                      const std::string& evaluator_id = "lexical");

using JudgeRunner = std::function<EvaluationOutcome(const CopyDraft&, const JudgedCriterion&,
                                                    const EvaluatorStep&)>;

struct PlanResult {
  std::vector<EvaluationOutcome> outcomes;  // one per executed step
  std::optional<std::size_t> failed_index;

  bool all_passed() const { return !failed_index.has_value(); }
  const EvaluationOutcome& failure() const { return outcomes.at(*failed_index); }
};

struct PlanOptions {
  /// Skip judged steps entirely (used when no provider is configured).
  bool skip_judged = false;
};

/// Runs a single step; judged steps go to `judge`.
EvaluationOutcome run_step(const EvaluatorStep& step, const CopyDraft& draft, const UseCaseSpec& spec,
                           const JudgeRunner& judge);

/// Executes the plan in order and stops at the first failing step. Throws
/// std::invalid_argument for an unformatted draft; JudgeUnavailable and other
/// judge-runner exceptions propagate.
PlanResult run_plan(const CopyDraft& draft, const UseCaseSpec& spec, const JudgeRunner& judge,
                    PlanOptions options = {});

}  // namespace copygen
