#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "copygen/gateway.hpp"
#include "copygen/model.hpp"
#include "copygen/refine.hpp"
#include "copygen/store.hpp"

// Scripted jobs: every copy follows a list of rounds, each naming the
// evaluator that fails in that round (empty = the round passes). The builder
// synthesizes copy texts that trip exactly that evaluator and a lenient mock
// transcript that answers generation, judge and refinement calls.
namespace copygen::fixtures {

struct CopyScript {
  std::vector<std::string> rounds;
};

/// `count` copies with the same round list.
struct Group {
  int count = 0;
  std::vector<std::string> rounds;
};

/// Round-robin interleave of the groups so failure kinds are spread out.
std::vector<CopyScript> expand(const std::vector<Group>& groups);

/// Copy text for copy `index` in round `round` that fails exactly `fail`.
std::map<std::string, std::string> compose(const UseCaseSpec& spec, int index, int round, const std::string& fail);

/// Marker token embedded in every copy text; unique per (copy, round).
std::string marker(int index, int round);

struct Fixture {
  UseCaseSpec spec;
  JobRequest request;
  MockTranscript transcript;
  int expected_first_pass = 0;
  int expected_terminal_pass = 0;
};

Fixture build(const UseCaseSpec& spec, const std::string& job_id, const std::vector<CopyScript>& copies,
              int max_refines = 1, int batch = 10);

/// Runs the fixture through run_job on an in-memory mock gateway.
JobSummary run(const Fixture& fixture, EventStore& store, int workers = 1);

std::filesystem::path config_dir();
UseCaseSpec load_config(const std::string& name);

// Job fixtures shaped after the published success-rate tables.
struct Row {
  std::string name;
  std::string config;
  int n = 0;
  int first_pass = 0;
  int terminal_pass = 0;
  std::string first_rate;
  std::string terminal_rate;
  std::vector<Group> groups;
};

std::vector<Row> success_rate_rows();
Row ablation_row();
Row scripted_row();  // 10 copies, 4 first-pass, 4 of 6 fixed

Fixture build_row(const Row& row, const std::string& job_id);

}  // namespace copygen::fixtures
