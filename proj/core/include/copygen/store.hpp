#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "copygen/model.hpp"

// Append-only event log of every copy's lineage. One JSONL file per job
// (`<job_id>.events.jsonl`, first line {"schema":"lineage/1"}); the in-memory
// index is rebuilt by replaying the files on open.
namespace copygen {

inline constexpr std::string_view kLineageSchema = "lineage/1";

class SequenceViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StorageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind {
  CopyGenerated,
  CopyFormatted,
  EvaluationRecorded,
  RefinementRequested,
  CopyRefined,
  CopyDiscarded,
  SentToHumanReview,
  HumanReviewRecorded,
};

enum class CopyState {
  generating,
  evaluating,
  refining,
  pending_human_review,
  accepted,
  discarded,
  human_rejected,
};

std::string to_string(EventKind kind);
std::string to_string(CopyState state);
std::optional<CopyState> copy_state_from_string(std::string_view s);

/// Pipeline terminal: the copy needs no further automated work.
bool is_terminal(CopyState state);
/// The copy passed every evaluation at some point.
bool passed_evaluations(CopyState state);

namespace discard_reason {
inline constexpr std::string_view kRefineBudgetExhausted = "refine_budget_exhausted";
inline constexpr std::string_view kProviderFailure = "provider_failure";
inline constexpr std::string_view kParseFailure = "parse_failure";
}  // namespace discard_reason

struct LineageEvent {
  std::uint64_t event_id = 0;  // 0 = let the store assign the next id
  std::string timestamp;       // RFC 3339 UTC; metadata only
  std::string copy_id;
  std::string job_id;
  EventKind kind = EventKind::CopyGenerated;
  Json payload = Json::object();
  int plan_version = 1;
};

void to_json(Json& j, const LineageEvent& v);
void from_json(const Json& j, LineageEvent& v);
void to_json(Json& j, const EventKind& v);
void from_json(const Json& j, EventKind& v);

struct CopyLineage {
  std::string copy_id;
  std::string job_id;
  std::string usecase_id;
  int refine_count = 0;
  int max_refines = 0;
  CopyState state = CopyState::generating;
  std::vector<LineageEvent> events;

  // Derived while folding.
  std::map<std::string, std::string> components;  // latest text
  bool round_failed = false;                      // current evaluation round saw a failure
  int evaluations_in_round = 0;
  std::string discard_reason;
  std::optional<Json> review;  // HumanReviewRecorded payload

  /// Every EvaluationRecorded outcome, in order.
  std::vector<EvaluationOutcome> evaluations() const;
  /// Passed the full plan before any refinement.
  bool passed_first_evaluation() const;
  /// First failing outcome of the whole lineage, if any.
  std::optional<EvaluationOutcome> first_failure() const;
  /// Last failing outcome, if any.
  std::optional<EvaluationOutcome> last_failure() const;
};

void to_json(Json& j, const CopyLineage& v);

/// Applies one event to a lineage after validating it against the state
/// machine. Throws SequenceViolation and leaves `lineage` untouched on error.
void apply_event(CopyLineage& lineage, const LineageEvent& event);

/// Deterministic fold of a full event sequence; throws SequenceViolation.
CopyLineage fold_events(const std::vector<LineageEvent>& events);

struct LineageFilter {
  std::optional<std::string> job_id;
  std::optional<CopyState> state;
  std::optional<std::string> usecase_id;
};

struct LineageSummary {
  std::string copy_id;
  std::string job_id;
  std::string usecase_id;
  CopyState state = CopyState::generating;
  int refine_count = 0;
  int max_refines = 0;
  std::map<std::string, std::string> components;
};

void to_json(Json& j, const LineageSummary& v);

std::string now_rfc3339();

class EventStore {
 public:
  /// In-memory only; nothing is persisted.
  EventStore();
  /// Opens (creating if needed) a directory of job logs and replays them.
  /// A torn trailing line is dropped; any other malformed line is a
  /// StorageFailure.
  explicit EventStore(const std::filesystem::path& dir);
  ~EventStore();

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Validates against the copy's current fold, then appends durably
  /// (flushed and fsync'ed) before acknowledging. Returns the event id.
  std::uint64_t append(LineageEvent event);

  /// Appends a batch atomically with respect to other writers. Validation
  /// happens event by event; events before a violation stay appended.
  void append_all(std::vector<LineageEvent> events);

  CopyLineage replay(const std::string& copy_id) const;
  bool contains(const std::string& copy_id) const;
  std::vector<LineageSummary> query(const LineageFilter& filter) const;
  std::vector<CopyLineage> lineages(const std::optional<std::string>& job_id = std::nullopt) const;
  std::vector<std::string> jobs() const;

  /// Human rejections grouped by reviewer reason code.
  std::map<std::string, std::vector<std::string>> human_rejections_by_reason(
      const std::optional<std::string>& job_id = std::nullopt) const;

  std::optional<std::filesystem::path> directory() const { return dir_; }
  static std::filesystem::path log_path(const std::filesystem::path& dir, const std::string& job_id);

 private:
  std::uint64_t append_locked(LineageEvent event);
  void load_file(const std::filesystem::path& file);
  std::FILE* writer_for(const std::string& job_id);

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, CopyLineage> copies_;
  std::set<std::uint64_t> event_ids_;
  std::uint64_t last_event_id_ = 0;
  std::map<std::string, std::FILE*> writers_;
  bool writers_enabled_ = true;  // off while replaying files on open
};

}  // namespace copygen
