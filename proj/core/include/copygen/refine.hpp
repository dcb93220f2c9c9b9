#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copygen/gateway.hpp"
#include "copygen/model.hpp"
#include "copygen/store.hpp"

// Generation, refinement and the per-copy state machine driver.
namespace copygen {

class UnknownReasonCode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generation prompt x_c assembled from the use case's fragments.
struct PromptBundle {
  std::string role;
  std::string context_description;
  std::string instructions;
  std::string usecase_instructions;
  std::vector<std::string> constraint_lines;
  std::vector<std::string> examples;  // one JSON object per example
  std::string batch_instruction;
  std::string output_format;

  std::string render() const;
};

PromptBundle build_prompt_bundle(const UseCaseSpec& spec, int m);

/// Human-readable lines describing the deterministic constraints.
std::vector<std::string> constraint_instructions(const UseCaseSpec& spec);

/// Refinement prompt z_{c,i} || copy.
struct RefinePrompt {
  std::string instruction;
  std::string context_description;
  std::string copy_json;

  std::string render() const;
};

RefinePrompt build_refine_prompt(const CopyDraft& draft, const FeedbackRecord& feedback, const UseCaseSpec& spec);

/// Imperative instruction for one failing feedback record. Throws
/// UnknownReasonCode for codes outside the taxonomy (including "pass").
std::string render_instruction(const FeedbackRecord& feedback);

struct BatchResult {
  std::vector<CopyDraft> drafts;  // raw, without copy ids
  int deficit = 0;
  std::string error;  // last parse or provider error, if any
};

/// One gateway call for m raw copies. A response that does not parse is
/// re-asked once; the second response is salvaged and any shortfall is
/// reported as a deficit. Provider errors yield an empty batch.
BatchResult generate_batch(const UseCaseSpec& spec, int m, Gateway& gateway);

/// Result of driving one copy to a terminal state.
struct CopyRun {
  CopyLineage lineage;
  std::vector<LineageEvent> events;  // locally numbered from 1
};

/// Drives one raw draft: format, evaluate, refine while budget remains.
/// Every transition is recorded as an event and validated by the lineage
/// fold as it is produced.
CopyRun run_copy(const CopyDraft& draft, const UseCaseSpec& spec, int max_refines, Gateway& gateway,
                 const std::string& job_id);

struct JobRequest {
  std::string job_id;
  int total = 0;       // N
  int batch_size = 10; // m
  int max_refines = 1; // J
  int workers = 1;
  int max_batch = kDefaultMaxBatch;
};

/// Empty string when valid.
std::string validate_job_request(const JobRequest& request);

struct JobSummary {
  std::string job_id;
  std::string usecase_id;
  int requested = 0;
  int generated = 0;
  int deficit = 0;
  std::map<std::string, int> states;  // terminal state -> count
  int first_pass = 0;
  int terminal_pass = 0;
  std::string first_pass_rate;  // two decimals, over requested N
  std::string success_rate;     // two decimals, over requested N
  std::vector<std::string> copy_ids;
};

void to_json(Json& j, const JobSummary& v);

using ProgressFn = std::function<void(int done, int total)>;

/// Generates ceil(N/m) batches in order, then runs every copy on a pool of
/// `workers` threads. Each copy's events are appended to the store in copy
/// order once all copies finish, so logs do not depend on scheduling.
/// Throws std::invalid_argument for an invalid request.
JobSummary run_job(const UseCaseSpec& spec, const JobRequest& request, Gateway& gateway, EventStore& store,
                   const ProgressFn& progress = {});

/// Copy id for the i-th (0-based) copy of a job.
std::string make_copy_id(const std::string& job_id, int index);

}  // namespace copygen
