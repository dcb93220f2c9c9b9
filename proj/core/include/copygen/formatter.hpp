#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "copygen/model.hpp"

namespace copygen {

class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDefaultRulesetName = "brand-default-v1";

/// serial_comma_removal, ampersand_substitution, terminal_punctuation_strip,
/// whitespace_collapse, in that order.
const std::vector<FormatRule>& default_ruleset();

/// The spec's own rules, or the default ruleset when it lists none.
const std::vector<FormatRule>& ruleset_for(const UseCaseSpec& spec);

/// Splits a raw generation response into exactly `expected_count` unformatted
/// drafts. Prose and code fences around the payload are tolerated: the first
/// bracket-balanced substring that parses as JSON is used. A lone object is
/// accepted as a one-element array. Throws ParseFailure on missing keys,
/// non-string values or a count mismatch.
std::vector<CopyDraft> parse_generation(std::string_view raw, const CopyStructure& structure,
                                        std::size_t expected_count);

/// Lenient variant used after a re-ask: returns every well-formed draft found
/// (at most `max_count`), possibly none.
std::vector<CopyDraft> salvage_generation(std::string_view raw, const CopyStructure& structure,
                                          std::size_t max_count);

/// Parses a refinement response: a single JSON object with every component.
CopyDraft parse_single_copy(std::string_view raw, const CopyStructure& structure);

/// Every top-level bracket-balanced JSON array/object embedded in `raw` that
/// parses, in order of appearance.
std::vector<Json> extract_json_values(std::string_view raw);

/// Applies each rule to each component in order and marks the draft formatted.
CopyDraft apply_rules(CopyDraft draft, const std::vector<FormatRule>& ruleset);

/// One rule on one string; exposed for tests and benchmarks.
std::string apply_rule(std::string_view component, const FormatRule& rule);

std::string remove_serial_commas(std::string_view s);
std::string substitute_ampersand(std::string_view s);
std::string strip_terminal_punctuation(std::string_view s, std::u32string_view marks = U".!;,");

}  // namespace copygen
