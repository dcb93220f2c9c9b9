#include "copygen/diversity.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "copygen/text.hpp"

namespace copygen {

namespace {

using Trigrams = std::set<std::u32string>;

Trigrams trigrams(const std::u32string& s) {
  Trigrams out;
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) out.insert(s.substr(i, 3));
  return out;
}

double jaccard(const std::u32string& na, const Trigrams& ta, const std::u32string& nb, const Trigrams& tb) {
  if (ta.empty() || tb.empty()) return na == nb ? 1.0 : 0.0;
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  const std::size_t uni = ta.size() + tb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

struct Candidate {
  std::size_t index;
  std::u32string norm;
  Trigrams grams;
};

// Longer first, then lexicographically smaller normalized text.
bool seed_before(const Candidate& a, const Candidate& b) {
  if (a.norm.size() != b.norm.size()) return a.norm.size() > b.norm.size();
  return a.norm < b.norm;
}

}  // namespace

double similarity(std::string_view a, std::string_view b) {
  const auto na = text::normalize(a);
  const auto nb = text::normalize(b);
  return jaccard(na, trigrams(na), nb, trigrams(nb));
}

std::vector<std::size_t> select_diverse(const std::vector<std::string>& texts, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::vector<Candidate> pool;
  std::set<std::u32string> seen;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto norm = text::normalize(texts[i]);
    if (!seen.insert(norm).second) continue;
    auto grams = trigrams(norm);
    pool.push_back({i, std::move(norm), std::move(grams)});
  }
  std::vector<std::size_t> chosen;
  if (pool.empty()) return chosen;

  const std::size_t want = std::min(k, pool.size());
  std::vector<bool> taken(pool.size(), false);
  std::vector<double> nearest(pool.size(), std::numeric_limits<double>::infinity());

  std::size_t pick = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (seed_before(pool[i], pool[pick])) pick = i;
  }
  while (true) {
    taken[pick] = true;
    chosen.push_back(pool[pick].index);
    if (chosen.size() == want) break;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double d = 1.0 - jaccard(pool[i].norm, pool[i].grams, pool[pick].norm, pool[pick].grams);
      nearest[i] = std::min(nearest[i], d);
      if (!best || nearest[i] > nearest[*best] ||
          (nearest[i] == nearest[*best] && seed_before(pool[i], pool[*best]))) {
        best = i;
      }
    }
    pick = *best;
  }
  return chosen;
}

double min_pairwise_distance(const std::vector<std::string>& texts, const std::vector<std::size_t>& subset) {
  double best = 1.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t j = i + 1; j < subset.size(); ++j) {
      best = std::min(best, 1.0 - similarity(texts.at(subset[i]), texts.at(subset[j])));
    }
  }
  return best;
}

}  // namespace copygen
