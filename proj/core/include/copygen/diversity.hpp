#pragma once

#include <string>
#include <string_view>
#include <vector>

// Lexical near-duplicate detection and diverse subset selection.
namespace copygen {

/// Character-trigram Jaccard similarity of the case-folded,
/// whitespace-normalized texts. Texts too short to have a trigram compare
/// as 1 when equal after normalization and 0 otherwise.
double similarity(std::string_view a, std::string_view b);

/// Greedy farthest-point selection. Seeds with the longest text (ties go to
/// the lexicographically smallest normalized text), then repeatedly adds the
/// candidate whose minimum distance (1 - similarity) to the selection is
/// largest, with the same tie-break. Texts that are equal after
/// normalization are collapsed first, so the result holds
/// min(k, distinct count) indices into `texts`, in selection order; the
/// first occurrence represents each group of duplicates.
std::vector<std::size_t> select_diverse(const std::vector<std::string>& texts, std::size_t k);

/// Smallest pairwise distance within a subset; 1 for fewer than two items.
double min_pairwise_distance(const std::vector<std::string>& texts, const std::vector<std::size_t>& subset);

}  // namespace copygen
