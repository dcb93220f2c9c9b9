#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "copygen/constraints.hpp"
#include "copygen/diversity.hpp"
#include "copygen/formatter.hpp"
#include "copygen/mab.hpp"

using namespace copygen;

namespace {

const std::vector<std::string> kWords = {"free", "delivery", "from", "stores", "and", "saves", "you",
                                         "time", "money", "fresh", "groceries", "today", "shipping",
                                         "order", "minimum", "easy", "fast", "local", "essentials"};

std::string sentence(std::mt19937& rng, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out += (rng() % 7 == 0) ? ", " : " ";
    out += kWords[rng() % kWords.size()];
  }
  return out + ".";
}

std::vector<std::string> corpus(std::size_t n) {
  std::mt19937 rng(11);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sentence(rng, 6 + static_cast<int>(rng() % 6)));
  return out;
}

UseCaseSpec load(const std::string& name) {
  return load_usecase(std::string(COPYGEN_CONFIG_DIR) + "/usecases/" + name + ".json");
}

}  // namespace

static void BM_FormatDraft(benchmark::State& state) {
  const auto texts = corpus(256);
  std::size_t i = 0;
  for (auto _ : state) {
    CopyDraft d;
    d.components["header"] = texts[i++ % texts.size()];
    benchmark::DoNotOptimize(apply_rules(std::move(d), default_ruleset()));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FormatDraft);

static void BM_DeterministicPlan(benchmark::State& state) {
  const auto spec = load("campaign-b-free-shipping");
  const auto texts = corpus(256);
  const JudgeRunner no_judge = [](const CopyDraft&, const JudgedCriterion&, const EvaluatorStep& s) {
    return EvaluationOutcome::passed(s.evaluator_id);
  };
  std::size_t i = 0;
  for (auto _ : state) {
    CopyDraft d;
    d.components["header"] = texts[i % texts.size()];
    d.components["subheader"] = texts[(i + 1) % texts.size()];
    d.formatted = true;
    ++i;
    benchmark::DoNotOptimize(run_plan(d, spec, no_judge, {.skip_judged = true}));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DeterministicPlan);

static void BM_SelectDiverse(benchmark::State& state) {
  const auto texts = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(select_diverse(texts, 10));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SelectDiverse)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_MabSimulation(benchmark::State& state) {
  mab::Scenario s;
  s.arms = {{"manual-control", 0.013}, {"generated", 0.0189}};
  s.horizon = state.range(0);
  s.batch = 100;
  s.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mab::simulate(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MabSimulation)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
