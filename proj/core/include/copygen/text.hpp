#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by the formatter, the deterministic checks and the
// diversity selector. Everything operates on Unicode scalar values decoded
// from UTF-8; lengths and match positions are scalar offsets.
namespace copygen::text {

/// Decodes UTF-8. Throws std::invalid_argument on malformed input
/// (overlong forms, surrogates and truncated sequences are rejected).
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view scalars);
bool is_valid_utf8(std::string_view utf8) noexcept;

/// Number of Unicode scalar values; this is the "character" count used by
/// every length constraint.
std::size_t scalar_count(std::string_view utf8);

/// Simple one-to-one case folding (ASCII, Latin-1, Latin Extended-A, Greek,
/// Cyrillic). Characters outside those blocks fold to themselves.
char32_t fold_case(char32_t c) noexcept;
std::u32string fold(std::u32string_view s);

/// Letters, digits, underscore and anything non-ASCII outside the common
/// punctuation/symbol/space blocks.
bool is_word_char(char32_t c) noexcept;
bool is_space(char32_t c) noexcept;

struct Span {
  std::size_t begin = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive

  friend bool operator==(const Span&, const Span&) = default;
};

/// Every occurrence (overlaps included, ordered by start) of `needle` in `haystack`,
/// both already folded. An edge of the needle that is a word character must
/// sit on a word boundary in the haystack; non-word edges match anywhere.
std::vector<Span> find_bounded(std::u32string_view haystack, std::u32string_view needle);

/// Trims both ends and collapses every internal whitespace run to one space.
std::string collapse_whitespace(std::string_view utf8);

/// Case-folded and whitespace-collapsed.
std::u32string normalize(std::string_view utf8);

std::string trim(std::string_view s);

}  // namespace copygen::text
