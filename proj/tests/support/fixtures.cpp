#include "fixtures.hpp"

#include <cstdio>
#include <stdexcept>

#include "copygen/text.hpp"

namespace copygen::fixtures {

namespace {

const EvaluatorStep& step_named(const UseCaseSpec& spec, const std::string& id) {
  for (const auto& s : spec.evaluator_plan.steps) {
    if (s.evaluator_id == id) return s;
  }
  throw std::invalid_argument("plan of " + spec.usecase_id + " has no step '" + id + "'");
}

std::string keyword_text(const UseCaseSpec& spec) {
  std::string out;
  for (const auto& group : spec.constraints.keywords_include) {
    if (!out.empty()) out += " ";
    out += group.front();
  }
  return out.empty() ? "plain words" : out;
}

std::string judge_answer(bool pass, const JudgedCriterion& c) {
  if (pass) return R"(Checked the copy step by step. {"verdict": "pass", "reason_code": "", "narrative": ""})";
  std::string code = "off_target";
  std::string narrative = "does not meet the criterion";
  switch (c.kind) {
    case CriterionKind::tone:
      code = "hyperbole";
      narrative = "contains hyperbolic terms";
      break;
    case CriterionKind::persona:
      code = "off_cohort";
      narrative = "does not address the target cohort";
      break;
    case CriterionKind::value_proposition:
      code = "missing_benefit";
      narrative = "the benefit is not stated";
      break;
    case CriterionKind::coherence:
      code = "disconnected";
      narrative = "header and subheader do not connect";
      break;
    case CriterionKind::topic_inclusion:
      code = "off_topic";
      narrative = "the service is not mentioned";
      break;
    default:
      break;
  }
  return "Step by step the copy falls short.\n" +
         Json{{"verdict", "fail"}, {"reason_code", code}, {"narrative", narrative}}.dump();
}

}  // namespace

std::vector<CopyScript> expand(const std::vector<Group>& groups) {
  std::vector<int> left;
  int total = 0;
  for (const auto& g : groups) {
    left.push_back(g.count);
    total += g.count;
  }
  std::vector<CopyScript> out;
  while (static_cast<int>(out.size()) < total) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (left[i] > 0) {
        --left[i];
        out.push_back(CopyScript{groups[i].rounds});
      }
    }
  }
  return out;
}

std::string marker(int index, int round) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "k%04d%c", index, static_cast<char>('a' + round));
  return buf;
}

std::map<std::string, std::string> compose(const UseCaseSpec& spec, int index, int round, const std::string& fail) {
  const auto& comps = spec.structure.components;
  const std::string& first = comps.front();
  const std::string& last = comps.back();
  std::map<std::string, std::string> out;
  if (comps.size() == 1) {
    out[first] = marker(index, round) + " " + keyword_text(spec);
  } else {
    out[first] = marker(index, round) + " today";
    out[last] = keyword_text(spec);
  }
  if (fail.empty()) return out;

  const auto& cs = spec.constraints;
  const auto& step = step_named(spec, fail);
  switch (step.type) {
    case StepType::length: {
      const std::string& comp = step.component.value_or(first);
      const auto* lc = cs.length_for(comp);
      while (static_cast<int>(text::scalar_count(out[comp])) <= lc->max_len) out[comp] += " more";
      break;
    }
    case StepType::keywords:
      if (!cs.keywords_include.empty()) {
        out[last] = comps.size() == 1 ? marker(index, round) + " plain words" : "plain words";
      } else {
        out[last] += " " + cs.keywords_exclude.front();
      }
      break;
    case StepType::punctuation:
      out[last] = cs.punctuation_after.front() + ", " + out[last];
      break;
    case StepType::lexical:
      out[last] += " " + cs.lexical_prefs.front().avoided_term + " ok";
      break;
    case StepType::judge:
      break;
  }
  return out;
}

Fixture build(const UseCaseSpec& spec, const std::string& job_id, const std::vector<CopyScript>& copies,
              int max_refines, int batch) {
  Fixture f;
  f.spec = spec;
  f.request.job_id = job_id;
  f.request.total = static_cast<int>(copies.size());
  f.request.batch_size = batch;
  f.request.max_refines = max_refines;
  f.transcript.strict = false;

  const int n = static_cast<int>(copies.size());
  for (int start = 0; start < n; start += batch) {
    Json arr = Json::array();
    for (int i = start; i < std::min(n, start + batch); ++i) {
      const auto& rounds = copies[i].rounds;
      arr.push_back(compose(spec, i, 0, rounds.empty() ? "" : rounds.front()));
    }
    f.transcript.entries.push_back({std::string(tags::kGeneration), std::nullopt, arr.dump(), std::nullopt});
  }

  for (int i = 0; i < n; ++i) {
    const auto& rounds = copies[i].rounds;
    if (rounds.empty() || static_cast<int>(rounds.size()) > max_refines + 1) {
      throw std::invalid_argument("copy " + std::to_string(i) + " needs 1.." + std::to_string(max_refines + 1) +
                                  " rounds");
    }
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      const std::string& fail = rounds[r];
      const bool last_round = r + 1 == rounds.size();
      if (!fail.empty() && last_round && static_cast<int>(r) < max_refines) {
        throw std::invalid_argument("copy " + std::to_string(i) + " ends failing with refine budget left");
      }
      if (fail.empty() && !last_round) {
        throw std::invalid_argument("copy " + std::to_string(i) + " passes before its last round");
      }
      const auto mark = marker(i, static_cast<int>(r));
      for (const auto& s : spec.evaluator_plan.steps) {
        const bool failing = s.evaluator_id == fail;
        if (s.type == StepType::judge) {
          const auto* c = spec.constraints.criterion(*s.criterion_id);
          f.transcript.entries.push_back({tags::judge(c->criterion_id), mark, judge_answer(!failing, *c), std::nullopt});
        }
        if (failing) break;
      }
      if (!fail.empty() && !last_round) {
        const auto next = compose(spec, i, static_cast<int>(r) + 1, rounds[r + 1]);
        f.transcript.entries.push_back(
            {std::string(tags::kRefinement), mark, Json(next).dump(), std::nullopt});
      }
    }
    if (rounds.back().empty()) {
      ++f.expected_terminal_pass;
      if (rounds.size() == 1) ++f.expected_first_pass;
    }
  }
  return f;
}

JobSummary run(const Fixture& fixture, EventStore& store, int workers) {
  ProviderConfig cfg;
  cfg.provider_kind = ProviderKind::mock;
  cfg.attempts = 1;
  Gateway gateway(std::make_unique<MockProvider>(fixture.transcript), cfg);
  auto req = fixture.request;
  req.workers = workers;
  return run_job(fixture.spec, req, gateway, store);
}

std::filesystem::path config_dir() { return COPYGEN_CONFIG_DIR; }

UseCaseSpec load_config(const std::string& name) {
  return load_usecase((config_dir() / "usecases" / (name + ".json")).string());
}

namespace {

// One group per first-failure evaluator: `fixed` copies pass after one
// refinement, the rest fail the same evaluator again.
void add(std::vector<Group>& g, const std::string& evaluator, int count, int fixed) {
  if (fixed) g.push_back({fixed, {evaluator, ""}});
  if (count - fixed) g.push_back({count - fixed, {evaluator, evaluator}});
}

}  // namespace

std::vector<Row> success_rate_rows() {
  std::vector<Row> rows;
  {
    Row r{"campaign-a-free-delivery", "campaign-a-free-delivery", 100, 41, 65, "41.00", "65.00", {}};
    r.groups.push_back({41, {""}});
    add(r.groups, "length_header", 20, 9);
    add(r.groups, "keywords", 9, 4);
    add(r.groups, "punctuation", 6, 3);
    add(r.groups, "lexical", 4, 2);
    add(r.groups, "topic", 5, 2);
    add(r.groups, "tone", 15, 4);
    rows.push_back(r);
  }
  {
    Row r{"campaign-a-free-shipping", "campaign-a-free-shipping", 100, 34, 56, "34.00", "56.00", {}};
    r.groups.push_back({34, {""}});
    add(r.groups, "length_header", 22, 8);
    add(r.groups, "keywords", 14, 5);
    add(r.groups, "punctuation", 5, 2);
    add(r.groups, "lexical", 8, 3);
    add(r.groups, "topic", 4, 1);
    add(r.groups, "tone", 13, 3);
    rows.push_back(r);
  }
  {
    Row r{"campaign-b-free-delivery", "campaign-b-free-delivery", 180, 83, 141, "46.11", "78.33", {}};
    r.groups.push_back({83, {""}});
    add(r.groups, "length_header", 58, 36);
    add(r.groups, "length_subheader", 12, 6);
    add(r.groups, "keywords", 8, 5);
    add(r.groups, "punctuation", 4, 3);
    add(r.groups, "lexical", 3, 2);
    add(r.groups, "coherence", 5, 3);
    add(r.groups, "tone", 7, 3);
    rows.push_back(r);
  }
  {
    Row r{"campaign-b-free-shipping", "campaign-b-free-shipping", 220, 67, 146, "30.45", "66.36", {}};
    r.groups.push_back({67, {""}});
    add(r.groups, "length_header", 70, 42);
    add(r.groups, "length_subheader", 17, 9);
    add(r.groups, "keywords", 20, 9);
    add(r.groups, "punctuation", 8, 4);
    add(r.groups, "lexical", 12, 5);
    add(r.groups, "coherence", 10, 4);
    add(r.groups, "tone", 16, 6);
    rows.push_back(r);
  }
  {
    Row r{"campaign-c", "campaign-c", 437, 180, 251, "41.19", "57.44", {}};
    r.groups.push_back({180, {""}});
    add(r.groups, "length_header", 40, 12);
    add(r.groups, "length_subheader", 25, 8);
    add(r.groups, "keywords", 30, 8);
    add(r.groups, "punctuation", 12, 4);
    add(r.groups, "lexical", 15, 4);
    add(r.groups, "coherence", 20, 5);
    add(r.groups, "persona", 45, 12);
    add(r.groups, "value", 30, 8);
    add(r.groups, "tone", 40, 10);
    rows.push_back(r);
  }
  return rows;
}

Row ablation_row() {
  Row r{"campaign-a-persona", "campaign-a-persona", 420, 104, 161, "24.76", "38.33", {}};
  r.groups.push_back({104, {""}});
  r.groups.push_back({57, {"persona", ""}});
  r.groups.push_back({21, {"persona", "length_header"}});
  r.groups.push_back({23, {"persona", "value"}});
  r.groups.push_back({21, {"persona", "tone"}});
  add(r.groups, "length_header", 70, 0);
  add(r.groups, "keywords", 30, 0);
  add(r.groups, "punctuation", 14, 0);
  add(r.groups, "lexical", 20, 0);
  add(r.groups, "value", 30, 0);
  add(r.groups, "tone", 30, 0);
  return r;
}

Row scripted_row() {
  Row r{"scripted", "campaign-a-free-delivery", 10, 4, 8, "40.00", "80.00", {}};
  r.groups.push_back({4, {""}});
  add(r.groups, "length_header", 2, 2);
  add(r.groups, "tone", 2, 1);
  add(r.groups, "keywords", 2, 1);
  return r;
}

Fixture build_row(const Row& row, const std::string& job_id) {
  return build(load_config(row.config), job_id, expand(row.groups), 1, row.name == "scripted" ? 5 : 10);
}

}  // namespace copygen::fixtures
