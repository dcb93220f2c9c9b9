#include <benchmark/benchmark.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "copygen/metrics.hpp"
#include "copygen/refine.hpp"
#include "copygen/store.hpp"

using namespace copygen;
namespace fs = std::filesystem;

namespace {

constexpr int kBatch = 10;

// Answers every generation with a batch of passing copies and every judge
// request with a pass, so the run measures orchestration and storage only.
class PassingProvider final : public LlmProvider {
 public:
  explicit PassingProvider(const UseCaseSpec& spec) {
    for (const auto& group : spec.constraints.keywords_include) keywords_ += " " + group.front();
  }

  std::string complete(const CompletionRequest& request) override {
    if (request.request_tag == tags::kGeneration) {
      Json arr = Json::array();
      for (int i = 0; i < kBatch; ++i) arr.push_back({{"header", "c" + std::to_string(next_++) + keywords_}});
      return arr.dump();
    }
    return R"({"verdict": "pass", "reason_code": "", "narrative": ""})";
  }

 private:
  std::string keywords_;
  std::atomic<int> next_{0};
};

UseCaseSpec spec() {
  return load_usecase(std::string(COPYGEN_CONFIG_DIR) + "/usecases/campaign-a-free-delivery.json");
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("copygen-bench-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

JobSummary run(const UseCaseSpec& s, EventStore& store, const std::string& job_id, int total) {
  ProviderConfig cfg;
  cfg.provider_kind = ProviderKind::mock;
  Gateway gateway(std::make_unique<PassingProvider>(s), cfg);
  JobRequest req;
  req.job_id = job_id;
  req.total = total;
  req.batch_size = kBatch;
  req.max_refines = 1;
  req.workers = 4;
  return run_job(s, req, gateway, store);
}

}  // namespace

static void BM_RunJobInMemory(benchmark::State& state) {
  const auto s = spec();
  int job = 0;
  int passed = 0;
  for (auto _ : state) {
    EventStore store;
    passed = run(s, store, "bench-" + std::to_string(job++), static_cast<int>(state.range(0))).first_pass;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["first_pass"] = passed;
}
BENCHMARK(BM_RunJobInMemory)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_ReplayAndReport(benchmark::State& state) {
  const auto s = spec();
  const auto dir = scratch("replay");
  {
    EventStore store(dir);
    run(s, store, "replay", static_cast<int>(state.range(0)));
  }
  for (auto _ : state) {
    EventStore store(dir);
    benchmark::DoNotOptimize(build_report(store.lineages("replay"), "replay"));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  fs::remove_all(dir);
}
BENCHMARK(BM_ReplayAndReport)->Arg(420)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
