#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace copygen {

// Machine-readable reason codes carried by FeedbackRecord and human reviews.
namespace reason {
inline constexpr std::string_view kTaxonomyVersion = "reasons/1";

inline constexpr std::string_view kPass = "pass";
inline constexpr std::string_view kLengthExceeded = "length.exceeded";
inline constexpr std::string_view kLengthTooShort = "length.too_short";
inline constexpr std::string_view kKeywordMissingGroup = "keyword.missing_group";
inline constexpr std::string_view kKeywordBannedPresent = "keyword.banned_present";
inline constexpr std::string_view kPunctAfterWord = "punct.after_word";
inline constexpr std::string_view kLexicalAvoidedTerm = "lexical.avoided_term";
inline constexpr std::string_view kJudgeUnparseable = "judge.unparseable";
inline constexpr std::string_view kJudgePrefix = "judge.";
}  // namespace reason

enum class ReasonSource { evaluator, judge, review };

struct ReasonCodeInfo {
  std::string code;
  ReasonSource source;
  std::string description;
};

/// Fixed codes. Judge codes are open-ended under "judge.<kind>.<slug>".
const std::vector<ReasonCodeInfo>& reason_taxonomy();

/// True for fixed codes and for well-formed "judge.<kind>.<slug>" codes.
bool is_registered_reason(std::string_view code);

/// Codes a human reviewer may attach to a rejection.
std::vector<std::string> review_reason_codes();

/// Lower-cases and replaces anything outside [a-z0-9_] with '_'.
std::string slugify(std::string_view raw);

}  // namespace copygen
