#include "doctest.h"

#include <set>

#include "copygen/diversity.hpp"
#include "oracles.hpp"

using namespace copygen;

TEST_CASE("similarity examples") {
  CHECK(similarity("abcabc", "abcabc") == 1.0);
  CHECK(similarity("abc", "xyz") == 0.0);
  CHECK(similarity("free shipping today", "free shipping now") ==
        doctest::Approx(oracle::trigram_similarity("free shipping today", "free shipping now")));
  // 17 trigrams in "free shipping today", 15 in "free shipping now", 12 shared ("free shippin"..."ing ").
  CHECK(similarity("free shipping today", "free shipping now") == doctest::Approx(12.0 / 20.0));
  CHECK(similarity("Free  SHIPPING", "free shipping") == 1.0);
  CHECK(similarity("ab", "AB") == 1.0);
  CHECK(similarity("ab", "cd") == 0.0);
}

TEST_CASE("selection examples") {
  const std::vector<std::string> texts = {"A", "A", "B"};
  const auto picked = select_diverse(texts, 2);
  REQUIRE(picked.size() == 2);
  CHECK(std::set<std::string>{texts[picked[0]], texts[picked[1]]} == std::set<std::string>{"A", "B"});

  const std::vector<std::string> distinct = {"Free delivery from stores", "Shop from home", "Groceries at your door"};
  CHECK(select_diverse(distinct, 10).size() == 3);
  CHECK(select_diverse(distinct, 1) == std::vector<std::size_t>{0});  // the longest seeds
  CHECK(select_diverse({}, 3).empty());
}

TEST_CASE("ties go to the lexicographically smallest text") {
  CHECK(select_diverse({"bbb", "aaa", "ccc"}, 1) == std::vector<std::size_t>{1});
}

TEST_CASE("selection properties on random inputs") {
  static const std::vector<std::string> pool = {"free delivery", "Free Delivery", "free shipping", "shop now",
                                                "shop now today", "x", "y", "groceries at your door"};
  oracle::Random rnd(99);
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + rnd.below(12);
    std::vector<std::string> texts(n);
    for (auto& t : texts) t = pool[rnd.below(static_cast<int>(pool.size()))];
    const auto k = static_cast<std::size_t>(1 + rnd.below(n));
    const auto picked = select_diverse(texts, k);
    CHECK(picked.size() == std::min(k, oracle::distinct_count(texts)));
    CHECK(picked == select_diverse(texts, k));
    for (std::size_t a = 0; a < picked.size(); ++a) {
      for (std::size_t b = a + 1; b < picked.size(); ++b) CHECK(similarity(texts[picked[a]], texts[picked[b]]) < 1.0);
    }
  }
}

TEST_CASE("min pairwise distance") {
  CHECK(min_pairwise_distance({"abc"}, {0}) == 1.0);
  CHECK(min_pairwise_distance({"abc", "abc", "xyz"}, {0, 1, 2}) == 0.0);
  CHECK(min_pairwise_distance({"abc", "xyz"}, {0, 1}) == 1.0);
}
