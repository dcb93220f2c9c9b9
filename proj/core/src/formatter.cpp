#include "copygen/formatter.hpp"

#include <algorithm>

#include "copygen/text.hpp"

namespace copygen {

namespace {

constexpr std::u32string_view kSentenceTerminators = U".!?";

bool is_terminator(char32_t c) { return kSentenceTerminators.find(c) != std::u32string_view::npos; }

// Positions just past each balanced '[...]' / '{...}' candidate starting at
// `begin`, honouring JSON string quoting. npos when unbalanced.
std::size_t balanced_end(std::string_view s, std::size_t begin) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        break;
      case '[':
      case '{':
        stack.push_back(c == '[' ? ']' : '}');
        break;
      case ']':
      case '}':
        if (stack.empty() || stack.back() != c) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default:
        break;
    }
  }
  return std::string_view::npos;
}

// Every top-level JSON array/object embedded in `raw`, in order of appearance.
std::vector<Json> json_candidates(std::string_view raw) {
  std::vector<Json> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    const std::size_t start = raw.find_first_of("[{", i);
    if (start == std::string_view::npos) break;
    const std::size_t end = balanced_end(raw, start);
    if (end != std::string_view::npos) {
      Json parsed = Json::parse(raw.substr(start, end - start), nullptr, false);
      if (!parsed.is_discarded()) {
        out.push_back(std::move(parsed));
        i = end;
        continue;
      }
    }
    i = start + 1;
  }
  return out;
}

// Converts one JSON object into a draft; returns an error message on failure.
std::string to_draft(const Json& obj, const CopyStructure& structure, CopyDraft& out) {
  if (!obj.is_object()) return "copy entry is not an object";
  out = CopyDraft{};
  for (const auto& name : structure.components) {
    auto it = obj.find(name);
    if (it == obj.end()) return "missing key " + name;
    if (!it->is_string()) return "key " + name + " is not a string";
    const auto value = it->get<std::string>();
    if (!text::is_valid_utf8(value)) return "key " + name + " is not valid UTF-8";
    out.components[name] = value;
  }
  return {};
}

std::vector<Json> as_entries(const Json& value) {
  if (value.is_array()) return std::vector<Json>(value.begin(), value.end());
  return {value};
}

}  // namespace

const std::vector<FormatRule>& default_ruleset() {
  static const std::vector<FormatRule> rules = {
      {FormatRuleId::serial_comma_removal, Json::object()},
      {FormatRuleId::ampersand_substitution, Json::object()},
      {FormatRuleId::terminal_punctuation_strip, Json::object()},
      {FormatRuleId::whitespace_collapse, Json::object()},
  };
  return rules;
}

const std::vector<FormatRule>& ruleset_for(const UseCaseSpec& spec) {
  return spec.format_rules.empty() ? default_ruleset() : spec.format_rules;
}

std::vector<Json> extract_json_values(std::string_view raw) { return json_candidates(raw); }

std::vector<CopyDraft> parse_generation(std::string_view raw, const CopyStructure& structure,
                                        std::size_t expected_count) {
  const auto candidates = json_candidates(raw);
  if (candidates.empty()) throw ParseFailure("no well-formed JSON in response");

  std::string first_error;
  for (const auto& candidate : candidates) {
    std::vector<CopyDraft> drafts;
    std::string error;
    for (const auto& entry : as_entries(candidate)) {
      CopyDraft draft;
      error = to_draft(entry, structure, draft);
      if (!error.empty()) break;
      drafts.push_back(std::move(draft));
    }
    if (error.empty() && drafts.empty()) error = "empty copy list";
    if (error.empty()) {
      if (drafts.size() != expected_count) {
        throw ParseFailure("expected " + std::to_string(expected_count) + " copies, got " +
                           std::to_string(drafts.size()));
      }
      return drafts;
    }
    if (first_error.empty()) first_error = error;
  }
  throw ParseFailure(first_error);
}

std::vector<CopyDraft> salvage_generation(std::string_view raw, const CopyStructure& structure,
                                          std::size_t max_count) {
  std::vector<CopyDraft> drafts;
  for (const auto& candidate : json_candidates(raw)) {
    for (const auto& entry : as_entries(candidate)) {
      if (drafts.size() == max_count) return drafts;
      CopyDraft draft;
      if (to_draft(entry, structure, draft).empty()) drafts.push_back(std::move(draft));
    }
  }
  return drafts;
}

CopyDraft parse_single_copy(std::string_view raw, const CopyStructure& structure) {
  const auto candidates = json_candidates(raw);
  if (candidates.empty()) throw ParseFailure("no well-formed JSON in response");
  std::string first_error;
  for (const auto& candidate : candidates) {
    // A one-element array is tolerated; the refiner is asked for an object.
    const Json* obj = &candidate;
    if (candidate.is_array() && candidate.size() == 1) obj = &candidate.front();
    CopyDraft draft;
    const auto error = to_draft(*obj, structure, draft);
    if (error.empty()) return draft;
    if (first_error.empty()) first_error = error;
  }
  throw ParseFailure(first_error);
}

// ---------------------------------------------------------------------------
// Rules

std::string remove_serial_commas(std::string_view s) {
  const std::u32string u = text::decode_utf8(s);
  // Whether some comma precedes position p in the same sentence. The first
  // comma of a sentence is never dropped, so this holds after removal too.
  std::vector<bool> comma_before(u.size(), false);
  bool seen = false;
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (is_terminator(u[p])) seen = false;
    comma_before[p] = seen;
    if (u[p] == U',') seen = true;
  }
  // Right to left, so a dropped comma never hides the conjunction from an
  // earlier one (", , and" loses both).
  std::vector<bool> drop(u.size(), false);
  for (std::size_t p = u.size(); p-- > 0;) {
    if (u[p] != U',' || !comma_before[p]) continue;
    std::size_t q = p + 1;
    while (q < u.size() && (text::is_space(u[q]) || drop[q])) ++q;
    bool conjunction = false;
    if (q < u.size() && u[q] == U'&') {
      conjunction = true;
    } else if (q + 3 <= u.size() && text::fold_case(u[q]) == U'a' &&
               text::fold_case(u[q + 1]) == U'n' && text::fold_case(u[q + 2]) == U'd') {
      conjunction = q + 3 == u.size() || !text::is_word_char(u[q + 3]);
    }
    drop[p] = conjunction;
  }
  std::u32string out;
  out.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!drop[i]) out.push_back(u[i]);
  }
  return text::encode_utf8(out);
}

std::string substitute_ampersand(std::string_view s) {
  const std::u32string u = text::decode_utf8(s);
  const auto spans = text::find_bounded(text::fold(u), U"and");
  std::u32string out;
  out.reserve(u.size());
  std::size_t at = 0;
  for (const auto& span : spans) {
    out.append(u, at, span.begin - at);
    out.push_back(U'&');
    at = span.end;
  }
  out.append(u, at, std::u32string::npos);
  return text::encode_utf8(out);
}

std::string strip_terminal_punctuation(std::string_view s, std::u32string_view marks) {
  const std::u32string u = text::decode_utf8(s);
  const auto is_mark = [&](char32_t c) { return marks.find(c) != std::u32string_view::npos; };
  auto rtrimmed = [&](std::size_t end) {
    while (end > 0 && text::is_space(u[end - 1])) --end;
    return end;
  };
  const std::size_t end = rtrimmed(u.size());
  if (end == 0 || !is_mark(u[end - 1])) return std::string(s);
  const std::size_t last = end - 1;
  // A second mark right before the last one (e.g. ";,") means this is not a
  // plain sentence ending; leave it for a human rather than peel it away.
  const std::size_t before = rtrimmed(last);
  if (before > 0 && is_mark(u[before - 1])) return std::string(s);
  for (std::size_t i = 0; i < last; ++i) {
    if (is_terminator(u[i])) return std::string(s);
  }
  return text::encode_utf8(std::u32string_view(u).substr(0, last));
}

std::string apply_rule(std::string_view component, const FormatRule& rule) {
  switch (rule.rule_id) {
    case FormatRuleId::serial_comma_removal:
      return remove_serial_commas(component);
    case FormatRuleId::ampersand_substitution:
      return substitute_ampersand(component);
    case FormatRuleId::terminal_punctuation_strip:
      if (auto it = rule.parameters.find("marks"); it != rule.parameters.end() && it->is_string()) {
        return strip_terminal_punctuation(component, text::decode_utf8(it->get<std::string>()));
      }
      return strip_terminal_punctuation(component);
    case FormatRuleId::whitespace_collapse:
      return text::collapse_whitespace(component);
  }
  return std::string(component);
}

CopyDraft apply_rules(CopyDraft draft, const std::vector<FormatRule>& ruleset) {
  for (auto& [name, value] : draft.components) {
    for (const auto& rule : ruleset) value = apply_rule(value, rule);
  }
  draft.formatted = true;
  return draft;
}

}  // namespace copygen
