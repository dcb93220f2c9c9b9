#include "copygen/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "copygen/taxonomy.hpp"

namespace copygen {

namespace {

std::vector<BreakdownRow> rows_from(const std::map<std::string, int>& counts, int total) {
  std::vector<BreakdownRow> rows;
  for (const auto& [key, count] : counts) rows.push_back({key, count, Percent::of(count, total)});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BreakdownRow& a, const BreakdownRow& b) { return a.count > b.count; });
  return rows;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

void render_rows(std::ostringstream& out, const std::string& title, const std::vector<BreakdownRow>& rows) {
  out << "\n" << title << "\n";
  if (rows.empty()) {
    out << "  (none)\n";
    return;
  }
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.key.size());
  out << "  " << pad_right("key", width) << "  " << pad_left("count", 6) << "  " << pad_left("share", 8) << "\n";
  for (const auto& r : rows) {
    out << "  " << pad_right(r.key, width) << "  " << pad_left(std::to_string(r.count), 6) << "  "
        << pad_left(r.share.str() + "%", 8) << "\n";
  }
}

// Failure that ended the copy's first evaluation round, if it had one.
std::optional<EvaluationOutcome> first_round_failure(const CopyLineage& l) {
  for (const auto& e : l.events) {
    if (e.kind == EventKind::CopyRefined) return std::nullopt;
    if (e.kind == EventKind::EvaluationRecorded && !e.payload.at("outcome").at("pass").get<bool>()) {
      return e.payload.at("outcome").get<EvaluationOutcome>();
    }
  }
  return std::nullopt;
}

}  // namespace

Percent Percent::of(long long numerator, long long denominator) {
  if (denominator <= 0) throw std::invalid_argument("percentage of an empty denominator");
  if (numerator < 0) throw std::invalid_argument("negative count");
  // floor(10000 * n / d + 1/2) in exact integer arithmetic.
  return Percent{(20000 * numerator + denominator) / (2 * denominator)};
}

std::string Percent::str() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", hundredths / 100, hundredths % 100);
  return buf;
}

SuccessRates success_rate(const std::vector<CopyLineage>& lineages) {
  if (lineages.empty()) throw EmptyInput("success rate of zero copies");
  SuccessRates r;
  r.total = static_cast<int>(lineages.size());
  for (const auto& l : lineages) {
    if (!passed_evaluations(l.state)) continue;
    ++r.terminal_pass;
    if (l.refine_count == 0) {
      ++r.first_pass;
    } else {
      ++r.refined_pass;
    }
  }
  r.without_refinement = Percent::of(r.first_pass, r.total);
  r.with_refinement = Percent::of(r.terminal_pass, r.total);
  return r;
}

std::string failure_category(const EvaluationOutcome& outcome) {
  const auto& code = outcome.feedback.reason_code;
  if (code.rfind(reason::kJudgePrefix, 0) == 0) {
    if (code == reason::kJudgeUnparseable) return code;
    const auto second_dot = code.find('.', reason::kJudgePrefix.size());
    return code.substr(0, second_dot);
  }
  return code.substr(0, code.find('.'));
}

FailureBreakdown failure_breakdown(const std::vector<CopyLineage>& lineages) {
  FailureBreakdown b;
  std::map<std::string, int> by_evaluator;
  std::map<std::string, int> by_category;
  std::map<std::string, int> post_by_category;
  for (const auto& l : lineages) {
    if (l.passed_first_evaluation()) continue;
    const auto first = first_round_failure(l);
    std::string evaluator;
    std::string category;
    if (first) {
      evaluator = first->evaluator_id;
      category = failure_category(*first);
    } else if (l.state == CopyState::discarded && l.refine_count == 0) {
      evaluator = category = l.discard_reason;
    } else {
      continue;  // still in flight
    }
    ++b.total_failures;
    ++by_evaluator[evaluator];
    ++by_category[category];

    if (l.refine_count == 0) continue;
    auto& outcome = b.refinement_outcomes[category];
    ++outcome.refined;
    if (passed_evaluations(l.state)) {
      ++outcome.passed;
    } else if (l.state == CopyState::discarded) {
      const auto last = l.last_failure();
      const bool evaluated_after_refine = last && l.discard_reason == discard_reason::kRefineBudgetExhausted;
      const std::string last_category = evaluated_after_refine ? failure_category(*last) : l.discard_reason;
      ++outcome.failed_by[last_category];
      ++post_by_category[last_category];
      ++b.post_refinement_failures;
    }
  }
  if (b.total_failures > 0) {
    b.first_failure_by_evaluator = rows_from(by_evaluator, b.total_failures);
    b.first_failure_by_category = rows_from(by_category, b.total_failures);
  }
  if (b.post_refinement_failures > 0) {
    b.post_refinement_by_category = rows_from(post_by_category, b.post_refinement_failures);
  }
  return b;
}

Report build_report(const std::vector<CopyLineage>& lineages, const std::string& job_id) {
  Report r;
  r.job_id = job_id;
  r.rates = success_rate(lineages);
  r.breakdown = failure_breakdown(lineages);
  for (const auto& l : lineages) {
    ++r.states[to_string(l.state)];
    if (l.state == CopyState::human_rejected && l.review) {
      auto code = l.review->value("reason_code", std::string());
      r.human_rejections[code.empty() ? "unspecified" : code].push_back(l.copy_id);
    }
  }
  return r;
}

void to_json(Json& j, const Percent& v) { j = v.value(); }

void to_json(Json& j, const SuccessRates& v) {
  j = Json{{"total", v.total},
           {"first_pass", v.first_pass},
           {"refined_pass", v.refined_pass},
           {"terminal_pass", v.terminal_pass},
           {"without_refinement", v.without_refinement},
           {"with_refinement", v.with_refinement},
           {"without_refinement_text", v.without_refinement.str()},
           {"with_refinement_text", v.with_refinement.str()}};
}

void to_json(Json& j, const BreakdownRow& v) {
  j = Json{{"key", v.key}, {"count", v.count}, {"share", v.share}};
}

void to_json(Json& j, const RefinementOutcome& v) {
  j = Json{{"refined", v.refined}, {"passed", v.passed}, {"failed_by", v.failed_by}};
}

void to_json(Json& j, const FailureBreakdown& v) {
  j = Json{{"total_failures", v.total_failures},
           {"first_failure_by_evaluator", v.first_failure_by_evaluator},
           {"first_failure_by_category", v.first_failure_by_category},
           {"post_refinement_failures", v.post_refinement_failures},
           {"post_refinement_by_category", v.post_refinement_by_category},
           {"refinement_outcomes", v.refinement_outcomes}};
}

void to_json(Json& j, const Report& v) {
  j = Json{{"job_id", v.job_id},
           {"rates", v.rates},
           {"breakdown", v.breakdown},
           {"states", v.states},
           {"human_rejections", v.human_rejections}};
}

std::string render_report(const Report& report) {
  std::ostringstream out;
  const auto& r = report.rates;
  if (!report.job_id.empty()) out << "Job " << report.job_id << "\n";
  const std::size_t w = 28;
  out << pad_right("Generated", w) << pad_left(std::to_string(r.total), 6) << "\n";
  out << pad_right("Passed without refinement", w) << pad_left(std::to_string(r.first_pass), 6) << "  "
      << pad_left(r.without_refinement.str() + "%", 8) << "\n";
  out << pad_right("Passed after refinement", w) << pad_left(std::to_string(r.refined_pass), 6) << "\n";
  out << pad_right("Passed with refinement", w) << pad_left(std::to_string(r.terminal_pass), 6) << "  "
      << pad_left(r.with_refinement.str() + "%", 8) << "\n";

  const auto& b = report.breakdown;
  render_rows(out, "First failures by category (" + std::to_string(b.total_failures) + ")",
              b.first_failure_by_category);
  render_rows(out, "First failures by evaluator (" + std::to_string(b.total_failures) + ")",
              b.first_failure_by_evaluator);
  render_rows(out, "Failures after refinement (" + std::to_string(b.post_refinement_failures) + ")",
              b.post_refinement_by_category);
  if (!b.refinement_outcomes.empty()) {
    out << "\nRefinement outcomes by first failure\n";
    for (const auto& [category, o] : b.refinement_outcomes) {
      out << "  " << pad_right(category, 24) << " refined " << pad_left(std::to_string(o.refined), 5)
          << "  passed " << pad_left(std::to_string(o.passed), 5);
      for (const auto& [k, n] : o.failed_by) out << "  failed " << k << " " << n;
      out << "\n";
    }
  }
  out << "\nStates\n";
  for (const auto& [state, n] : report.states) {
    out << "  " << pad_right(state, 22) << pad_left(std::to_string(n), 6) << "\n";
  }
  if (!report.human_rejections.empty()) {
    out << "\nHuman rejections by reason\n";
    for (const auto& [code, ids] : report.human_rejections) {
      out << "  " << pad_right(code, 30) << pad_left(std::to_string(ids.size()), 6) << "\n";
    }
  }
  return out.str();
}

}  // namespace copygen
