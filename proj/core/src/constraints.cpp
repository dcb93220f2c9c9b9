#include "copygen/constraints.hpp"

#include <algorithm>

#include "copygen/taxonomy.hpp"
#include "copygen/text.hpp"

namespace copygen {

namespace {

struct FoldedComponent {
  std::string name;
  std::u32string scalars;  // folded
};

std::vector<FoldedComponent> fold_components(const CopyDraft& draft) {
  std::vector<FoldedComponent> out;
  out.reserve(draft.components.size());
  for (const auto& [name, value] : draft.components) {
    out.push_back({name, text::fold(text::decode_utf8(value))});
  }
  return out;
}

std::u32string fold_literal(const std::string& literal) {
  return text::fold(text::decode_utf8(text::trim(literal)));
}

std::string quoted_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += "'" + items[i] + "'";
  }
  return out;
}

}  // namespace

EvaluationOutcome check_length(const CopyDraft& draft, const LengthConstraint& constraint,
                               const std::string& evaluator_id) {
  auto it = draft.components.find(constraint.component);
  if (it == draft.components.end()) {
    throw std::invalid_argument("draft has no component '" + constraint.component + "'");
  }
  const auto measured = static_cast<long>(text::scalar_count(it->second));
  if (measured > constraint.max_len) {
    FeedbackRecord fb{std::string(reason::kLengthExceeded),
                      Json{{"component", constraint.component},
                           {"measured", measured},
                           {"limit", constraint.max_len}},
                      "The " + constraint.component + " has " + std::to_string(measured) +
                          " characters; the limit is " + std::to_string(constraint.max_len) + "."};
    return EvaluationOutcome::failed(evaluator_id, std::move(fb), constraint.component);
  }
  if (constraint.min_len && measured < *constraint.min_len) {
    FeedbackRecord fb{std::string(reason::kLengthTooShort),
                      Json{{"component", constraint.component},
                           {"measured", measured},
                           {"minimum", *constraint.min_len}},
                      "The " + constraint.component + " has " + std::to_string(measured) +
                          " characters; the minimum is " + std::to_string(*constraint.min_len) + "."};
    return EvaluationOutcome::failed(evaluator_id, std::move(fb), constraint.component);
  }
  return EvaluationOutcome::passed(evaluator_id, constraint.component);
}

EvaluationOutcome check_keywords(const CopyDraft& draft,
                                 const std::vector<std::vector<std::string>>& include_groups,
                                 const std::vector<std::string>& exclude,
                                 const std::string& evaluator_id) {
  const auto comps = fold_components(draft);
  const auto present = [&](const std::u32string& needle) {
    return std::any_of(comps.begin(), comps.end(), [&](const FoldedComponent& c) {
      return !text::find_bounded(c.scalars, needle).empty();
    });
  };

  Json missing = Json::array();
  for (const auto& group : include_groups) {
    const bool satisfied = std::any_of(group.begin(), group.end(),
                                       [&](const std::string& alt) { return present(fold_literal(alt)); });
    if (!satisfied) missing.push_back(group);
  }

  std::vector<std::string> found;
  Json found_at = Json::array();
  for (const auto& banned : exclude) {
    const auto needle = fold_literal(banned);
    bool any = false;
    for (const auto& c : comps) {
      for (const auto& span : text::find_bounded(c.scalars, needle)) {
        found_at.push_back({{"term", banned}, {"component", c.name}, {"position", span.begin}});
        any = true;
      }
    }
    if (any) found.push_back(banned);
  }

  if (missing.empty() && found.empty()) return EvaluationOutcome::passed(evaluator_id);

  std::string narrative;
  if (!missing.empty()) {
    narrative = "Missing required keywords:";
    for (const auto& group : missing) {
      narrative += " [" + quoted_list(group.get<std::vector<std::string>>()) + "]";
    }
    narrative += ".";
  }
  if (!found.empty()) {
    if (!narrative.empty()) narrative += " ";
    narrative += "Contains off-brand words: " + quoted_list(found) + ".";
  }
  const auto code = missing.empty() ? reason::kKeywordBannedPresent : reason::kKeywordMissingGroup;
  FeedbackRecord fb{std::string(code),
                    Json{{"missing_groups", missing}, {"found", found}, {"found_at", found_at}},
                    narrative};
  return EvaluationOutcome::failed(evaluator_id, std::move(fb));
}

EvaluationOutcome check_punctuation_after(const CopyDraft& draft, const std::vector<std::string>& words,
                                          const std::string& evaluator_id) {
  const auto comps = fold_components(draft);
  Json violations = Json::array();
  std::vector<std::string> offenders;
  for (const auto& word : words) {
    const auto needle = fold_literal(word);
    bool hit = false;
    for (const auto& c : comps) {
      for (const auto& span : text::find_bounded(c.scalars, needle)) {
        if (span.end < c.scalars.size() &&
            kForbiddenAfterWord.find(c.scalars[span.end]) != std::u32string_view::npos) {
          violations.push_back({{"word", word},
                                {"component", c.name},
                                {"position", span.begin},
                                {"mark", text::encode_utf8(std::u32string(1, c.scalars[span.end]))}});
          hit = true;
        }
      }
    }
    if (hit) offenders.push_back(word);
  }
  if (violations.empty()) return EvaluationOutcome::passed(evaluator_id);
  FeedbackRecord fb{std::string(reason::kPunctAfterWord), Json{{"violations", violations}},
                    "Punctuation directly follows " + quoted_list(offenders) + "."};
  return EvaluationOutcome::failed(evaluator_id, std::move(fb));
}

EvaluationOutcome check_lexical_prefs(const CopyDraft& draft, const std::vector<LexicalPref>& prefs,
                                      const std::string& evaluator_id) {
  const auto comps = fold_components(draft);
  Json pairs = Json::array();
  Json occurrences = Json::array();
  std::string narrative;
  for (const auto& pref : prefs) {
    const auto avoided = fold_literal(pref.avoided_term);
    const auto preferred = fold_literal(pref.preferred_term);
    bool hit = false;
    for (const auto& c : comps) {
      const auto keep = text::find_bounded(c.scalars, preferred);
      for (const auto& span : text::find_bounded(c.scalars, avoided)) {
        const bool inside_preferred = std::any_of(keep.begin(), keep.end(), [&](const text::Span& k) {
          return k.begin <= span.begin && span.end <= k.end;
        });
        if (inside_preferred) continue;
        occurrences.push_back({{"term", pref.avoided_term}, {"component", c.name}, {"position", span.begin}});
        hit = true;
      }
    }
    if (hit) {
      pairs.push_back({{"avoided", pref.avoided_term}, {"preferred", pref.preferred_term}});
      if (!narrative.empty()) narrative += " ";
      narrative += "Uses '" + pref.avoided_term + "' instead of '" + pref.preferred_term + "'.";
    }
  }
  if (pairs.empty()) return EvaluationOutcome::passed(evaluator_id);
  FeedbackRecord fb{std::string(reason::kLexicalAvoidedTerm),
                    Json{{"pairs", pairs}, {"occurrences", occurrences}}, narrative};
  return EvaluationOutcome::failed(evaluator_id, std::move(fb));
}

EvaluationOutcome run_step(const EvaluatorStep& step, const CopyDraft& draft, const UseCaseSpec& spec,
                           const JudgeRunner& judge) {
  const auto& cs = spec.constraints;
  switch (step.type) {
    case StepType::length: {
      if (step.component) {
        const auto* lc = cs.length_for(*step.component);
        if (!lc) throw std::invalid_argument("no length constraint for " + *step.component);
        return check_length(draft, *lc, step.evaluator_id);
      }
      for (const auto& name : spec.structure.components) {
        const auto* lc = cs.length_for(name);
        if (!lc) continue;
        auto outcome = check_length(draft, *lc, step.evaluator_id);
        if (!outcome.pass) return outcome;
      }
      return EvaluationOutcome::passed(step.evaluator_id);
    }
    case StepType::keywords:
      return check_keywords(draft, cs.keywords_include, cs.keywords_exclude, step.evaluator_id);
    case StepType::punctuation:
      return check_punctuation_after(draft, cs.punctuation_after, step.evaluator_id);
    case StepType::lexical:
      return check_lexical_prefs(draft, cs.lexical_prefs, step.evaluator_id);
    case StepType::judge: {
      const auto* criterion = step.criterion_id ? cs.criterion(*step.criterion_id) : nullptr;
      if (!criterion) throw std::invalid_argument("judge step without a known criterion");
      if (!judge) throw JudgeUnavailable("no judge runner configured");
      auto outcome = judge(draft, *criterion, step);
      outcome.evaluator_id = step.evaluator_id;
      return outcome;
    }
  }
  throw std::logic_error("unhandled step type");
}

PlanResult run_plan(const CopyDraft& draft, const UseCaseSpec& spec, const JudgeRunner& judge,
                    PlanOptions options) {
  if (!draft.formatted) throw std::invalid_argument("run_plan requires a formatted draft");
  PlanResult result;
  const auto& steps = spec.evaluator_plan.steps;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (options.skip_judged && !steps[i].deterministic()) continue;
    result.outcomes.push_back(run_step(steps[i], draft, spec, judge));
    if (!result.outcomes.back().pass) {
      result.failed_index = result.outcomes.size() - 1;
      break;
    }
  }
  return result;
}

}  // namespace copygen
