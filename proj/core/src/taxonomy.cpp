#include "copygen/taxonomy.hpp"

#include <algorithm>

#include "copygen/model.hpp"

namespace copygen {

const std::vector<ReasonCodeInfo>& reason_taxonomy() {
  static const std::vector<ReasonCodeInfo> codes = {
      {"pass", ReasonSource::evaluator, "Default feedback for a passing evaluation."},
      {"length.exceeded", ReasonSource::evaluator, "Component longer than its limit."},
      {"length.too_short", ReasonSource::evaluator, "Component shorter than its minimum."},
      {"keyword.missing_group", ReasonSource::evaluator, "A required keyword group is absent."},
      {"keyword.banned_present", ReasonSource::evaluator, "An off-brand word is present."},
      {"punct.after_word", ReasonSource::evaluator,
       "Punctuation directly follows a word that must not be followed by punctuation."},
      {"lexical.avoided_term", ReasonSource::evaluator,
       "An avoided term is used instead of its preferred alternative."},
      {"judge.unparseable", ReasonSource::judge,
       "The judge response had no parsable answer block after a re-ask."},
      {"tone.off_brand", ReasonSource::review, "Reviewer: tone does not match the brand voice."},
      {"legal.unsubstantiated_claim", ReasonSource::review,
       "Reviewer: the copy makes a claim legal cannot approve."},
      {"brand.guideline_violation", ReasonSource::review,
       "Reviewer: violates a brand guideline not covered by evaluators."},
      {"message.unclear", ReasonSource::review, "Reviewer: value proposition is unclear."},
      {"other", ReasonSource::review, "Reviewer: other reason, see note."},
  };
  return codes;
}

std::string slugify(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 'A' && u <= 'Z') {
      out.push_back(static_cast<char>(u + 32));
    } else if ((u >= 'a' && u <= 'z') || (u >= '0' && u <= '9') || u == '_') {
      out.push_back(c);
    } else {
      out.push_back('_');
    }
  }
  return out;
}

bool is_registered_reason(std::string_view code) {
  const auto& codes = reason_taxonomy();
  if (std::any_of(codes.begin(), codes.end(), [&](const auto& info) { return info.code == code; })) {
    return true;
  }
  if (!code.starts_with(reason::kJudgePrefix)) return false;
  const std::string_view rest = code.substr(reason::kJudgePrefix.size());
  const auto dot = rest.find('.');
  if (dot == std::string_view::npos) return false;
  const std::string kind(rest.substr(0, dot));
  const std::string_view slug = rest.substr(dot + 1);
  return criterion_kind_from_string(kind).has_value() && !slug.empty() && slugify(slug) == slug;
}

std::vector<std::string> review_reason_codes() {
  std::vector<std::string> out;
  for (const auto& info : reason_taxonomy()) {
    if (info.source == ReasonSource::review) out.push_back(info.code);
  }
  return out;
}

}  // namespace copygen
