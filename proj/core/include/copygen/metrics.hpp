#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copygen/model.hpp"
#include "copygen/store.hpp"

// Success rates and failure breakdowns folded from lineages.
namespace copygen {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A percentage held as integer hundredths, rounded half-up from an exact
/// ratio so "30.45" never depends on binary floating point.
struct Percent {
  long long hundredths = 0;

  static Percent of(long long numerator, long long denominator);
  std::string str() const;  // "30.45"
  double value() const { return static_cast<double>(hundredths) / 100.0; }
  bool operator==(const Percent&) const = default;
};

struct SuccessRates {
  int total = 0;
  int first_pass = 0;     // passed the full plan with no refinement
  int refined_pass = 0;   // passed after at least one refinement
  int terminal_pass = 0;  // first_pass + refined_pass
  Percent without_refinement;
  Percent with_refinement;
};

/// Throws EmptyInput for an empty list.
SuccessRates success_rate(const std::vector<CopyLineage>& lineages);

struct BreakdownRow {
  std::string key;
  int count = 0;
  Percent share;  // of all failures in the table
};

struct RefinementOutcome {
  int refined = 0;
  int passed = 0;
  std::map<std::string, int> failed_by;  // category of the last failure
};

struct FailureBreakdown {
  int total_failures = 0;  // copies whose first evaluation round failed
  std::vector<BreakdownRow> first_failure_by_evaluator;
  std::vector<BreakdownRow> first_failure_by_category;
  int post_refinement_failures = 0;  // refined copies that were still discarded
  std::vector<BreakdownRow> post_refinement_by_category;
  /// Keyed by the category of the copy's first failure.
  std::map<std::string, RefinementOutcome> refinement_outcomes;
};

/// "length", "keyword", "punct", "lexical", "judge.<kind>", "judge.unparseable",
/// or the discard reason when a copy never got an evaluation.
std::string failure_category(const EvaluationOutcome& outcome);

FailureBreakdown failure_breakdown(const std::vector<CopyLineage>& lineages);

struct Report {
  std::string job_id;
  SuccessRates rates;
  FailureBreakdown breakdown;
  std::map<std::string, int> states;
  std::map<std::string, std::vector<std::string>> human_rejections;
};

Report build_report(const std::vector<CopyLineage>& lineages, const std::string& job_id = "");

void to_json(Json& j, const Percent& v);  // a JSON number, e.g. 30.45
void to_json(Json& j, const SuccessRates& v);
void to_json(Json& j, const BreakdownRow& v);
void to_json(Json& j, const RefinementOutcome& v);
void to_json(Json& j, const FailureBreakdown& v);
void to_json(Json& j, const Report& v);

/// Aligned plain-text tables.
std::string render_report(const Report& report);

}  // namespace copygen
