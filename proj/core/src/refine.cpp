#include "copygen/refine.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "copygen/constraints.hpp"
#include "copygen/formatter.hpp"
#include "copygen/judge.hpp"
#include "copygen/metrics.hpp"
#include "copygen/taxonomy.hpp"

namespace copygen {

namespace {

constexpr std::string_view kGenerationReask =
    "\n\nYour previous answer could not be read. Reply with the JSON array only, no other text.";
constexpr std::string_view kRefinementReask =
    "\n\nYour previous answer could not be read. Reply with one JSON object only, no other text.";

std::string quoted(const std::string& s) { return "'" + s + "'"; }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string substitute_campaign(std::string s, const std::string& campaign) {
  if (campaign.empty()) return s;
  const std::string token = "{campaign_name}";
  for (std::size_t pos = 0; (pos = s.find(token, pos)) != std::string::npos; pos += campaign.size()) {
    s.replace(pos, token.size(), campaign);
  }
  return s;
}

std::string keys_phrase(const CopyStructure& structure) {
  std::vector<std::string> keys;
  for (const auto& c : structure.components) keys.push_back("\"" + c + "\"");
  return keys.size() == 1 ? "the key " + keys[0] : "the keys " + join(keys, " and ");
}

std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string str_detail(const Json& details, const char* key) {
  auto it = details.find(key);
  if (it == details.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) return it->dump();
  return {};
}

std::string judge_instruction(const std::string& kind, const std::string& slug, const Json& details) {
  const auto rubric = str_detail(details, "rubric");
  const auto narrative = str_detail(details, "narrative");
  std::string out;
  if (kind == "tone" && slug == "hyperbole") {
    out = "Remove the hyperbolic terms and keep this tone of voice: " + rubric + ".";
  } else if (kind == "tone") {
    out = "Adjust the tone of voice to match: " + rubric + ".";
  } else if (kind == "coherence") {
    out = "Rewrite the header and subheader so they read as one coherent message: " + rubric + ".";
  } else if (kind == "persona") {
    out = "Rewrite the copy so it speaks directly to this audience: " + rubric + ".";
  } else if (kind == "topic_inclusion") {
    out = "Make sure the copy covers: " + rubric + ".";
  } else if (kind == "topic_exclusion") {
    out = "Leave this out of the copy: " + rubric + ".";
  } else if (kind == "value_proposition") {
    out = "State the value to the customer clearly: " + rubric + ".";
  } else {
    out = "Follow this style guidance: " + rubric + ".";
  }
  if (!narrative.empty()) out += " Reviewer note: " + narrative;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Prompts

std::vector<std::string> constraint_instructions(const UseCaseSpec& spec) {
  const auto& cs = spec.constraints;
  std::vector<std::string> lines;
  for (const auto& name : spec.structure.components) {
    if (const auto* lc = cs.length_for(name)) {
      std::string line = "Keep the " + name + " within " + std::to_string(lc->max_len) + " characters";
      if (lc->min_len) line += " and at least " + std::to_string(*lc->min_len) + " long";
      lines.push_back(line + ".");
    }
  }
  for (const auto& group : cs.keywords_include) {
    std::vector<std::string> alts;
    for (const auto& a : group) alts.push_back(quoted(a));
    lines.push_back("Include " + join(alts, " or ") + ".");
  }
  if (!cs.keywords_exclude.empty()) {
    std::vector<std::string> words;
    for (const auto& w : cs.keywords_exclude) words.push_back(quoted(w));
    lines.push_back("Never use these words: " + join(words, ", ") + ".");
  }
  if (!cs.punctuation_after.empty()) {
    std::vector<std::string> words;
    for (const auto& w : cs.punctuation_after) words.push_back(quoted(w));
    lines.push_back("Do not put punctuation right after " + join(words, ", ") + ".");
  }
  for (const auto& p : cs.lexical_prefs) {
    lines.push_back("Write " + quoted(p.preferred_term) + ", not " + quoted(p.avoided_term) + ".");
  }
  return lines;
}

PromptBundle build_prompt_bundle(const UseCaseSpec& spec, int m) {
  if (m < 1) throw std::invalid_argument("batch size must be positive");
  const auto& f = spec.prompt_fragments;
  const auto& campaign = spec.campaign_name;
  PromptBundle b;
  b.role = substitute_campaign(f.role, campaign);
  b.context_description = substitute_campaign(spec.context_description(), campaign);
  b.instructions = substitute_campaign(f.instructions, campaign);
  b.usecase_instructions = substitute_campaign(f.usecase_instructions, campaign);
  b.constraint_lines = constraint_instructions(spec);
  for (auto& line : b.constraint_lines) line = substitute_campaign(line, campaign);
  for (const auto& ex : f.examples) b.examples.push_back(substitute_campaign(Json(ex).dump(), campaign));
  b.batch_instruction = "Generate " + std::to_string(m) + " different copies.";
  b.output_format = "Answer with a JSON array of " + std::to_string(m) + " objects, each with " +
                    keys_phrase(spec.structure) + " and string values. Do not add anything else.";
  return b;
}

std::string PromptBundle::render() const {
  std::vector<std::string> sections;
  if (!role.empty()) sections.push_back(role);
  if (!context_description.empty()) sections.push_back("Context: " + context_description);
  if (!instructions.empty()) sections.push_back(instructions);
  if (!usecase_instructions.empty()) sections.push_back(usecase_instructions);
  if (!constraint_lines.empty()) {
    std::string s = "Requirements:";
    for (const auto& l : constraint_lines) s += "\n- " + l;
    sections.push_back(s);
  }
  if (!examples.empty()) {
    std::string s = "Examples of good copies:";
    for (const auto& e : examples) s += "\n" + e;
    sections.push_back(s);
  }
  sections.push_back(batch_instruction);
  sections.push_back(output_format);
  return join(sections, "\n\n");
}

std::string render_instruction(const FeedbackRecord& feedback) {
  const auto& code = feedback.reason_code;
  const auto& d = feedback.details;
  if (code == reason::kPass || !is_registered_reason(code)) {
    throw UnknownReasonCode("no instruction for reason code '" + code + "'");
  }
  if (code == reason::kLengthExceeded) {
    return "Shorten the " + str_detail(d, "component") + " to at most " + str_detail(d, "limit") +
           " characters; it is currently " + str_detail(d, "measured") + ".";
  }
  if (code == reason::kLengthTooShort) {
    return "Lengthen the " + str_detail(d, "component") + " to at least " + str_detail(d, "minimum") +
           " characters; it is currently " + str_detail(d, "measured") + ".";
  }
  if (code == reason::kKeywordMissingGroup || code == reason::kKeywordBannedPresent) {
    std::vector<std::string> parts;
    for (const auto& group : d.value("missing_groups", Json::array())) {
      std::vector<std::string> alts;
      for (const auto& a : group) alts.push_back(quoted(a.get<std::string>()));
      parts.push_back("Include " + join(alts, " or ") + ".");
    }
    std::vector<std::string> banned;
    for (const auto& w : d.value("found", Json::array())) banned.push_back(quoted(w.get<std::string>()));
    if (!banned.empty()) parts.push_back("Remove " + join(banned, ", ") + ".");
    return join(parts, " ");
  }
  if (code == reason::kPunctAfterWord) {
    std::vector<std::string> words;
    for (const auto& v : d.value("violations", Json::array())) {
      auto w = quoted(v.at("word").get<std::string>());
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    }
    return "Remove the punctuation directly after " + join(words, ", ") + ".";
  }
  if (code == reason::kLexicalAvoidedTerm) {
    std::vector<std::string> parts;
    for (const auto& p : d.value("pairs", Json::array())) {
      parts.push_back("Use " + quoted(p.at("preferred").get<std::string>()) + " instead of " +
                      quoted(p.at("avoided").get<std::string>()) + ".");
    }
    return join(parts, " ");
  }
  if (code == reason::kJudgeUnparseable) {
    return "Revise the copy so it clearly meets this requirement: " + str_detail(d, "rubric") + ".";
  }
  // judge.<kind>.<slug>
  const auto rest = code.substr(reason::kJudgePrefix.size());
  const auto dot = rest.find('.');
  return judge_instruction(rest.substr(0, dot), rest.substr(dot + 1), d);
}

RefinePrompt build_refine_prompt(const CopyDraft& draft, const FeedbackRecord& feedback, const UseCaseSpec& spec) {
  RefinePrompt p;
  p.instruction = render_instruction(feedback);
  p.context_description = substitute_campaign(spec.context_description(), spec.campaign_name);
  Json copy = Json::object();
  for (const auto& name : spec.structure.components) {
    if (auto it = draft.components.find(name); it != draft.components.end()) copy[name] = it->second;
  }
  p.copy_json = copy.dump();
  return p;
}

std::string RefinePrompt::render() const {
  std::string out = "Revise the marketing copy below. " + instruction;
  if (!context_description.empty()) out += "\n\nContext: " + context_description;
  out += "\n\nKeep everything else that already works. Answer with one JSON object with the same keys.";
  out += "\n\n" + copy_json;
  return out;
}

// ---------------------------------------------------------------------------
// Generation

BatchResult generate_batch(const UseCaseSpec& spec, int m, Gateway& gateway) {
  const std::string prompt = build_prompt_bundle(spec, m).render();
  const std::string tag(tags::kGeneration);
  BatchResult result;
  auto stamp = [&](std::vector<CopyDraft> drafts) {
    for (auto& d : drafts) d.usecase_id = spec.usecase_id;
    result.drafts = std::move(drafts);
    result.deficit = m - static_cast<int>(result.drafts.size());
    return result;
  };
  std::string raw;
  try {
    raw = gateway.complete(prompt, tag);
    return stamp(parse_generation(raw, spec.structure, static_cast<std::size_t>(m)));
  } catch (const ProviderError& e) {
    spdlog::error("generation failed: {}", e.what());
    result.error = e.what();
    return stamp({});
  } catch (const ParseFailure& e) {
    spdlog::warn("generation response unreadable ({}); re-asking once", e.what());
    result.error = e.what();
  }
  try {
    raw = gateway.complete(prompt + std::string(kGenerationReask), tag);
    return stamp(parse_generation(raw, spec.structure, static_cast<std::size_t>(m)));
  } catch (const ProviderError& e) {
    spdlog::error("generation re-ask failed: {}", e.what());
    result.error = e.what();
    return stamp({});
  } catch (const ParseFailure& e) {
    result.error = e.what();
  }
  stamp(salvage_generation(raw, spec.structure, static_cast<std::size_t>(m)));
  spdlog::warn("generation batch short by {} of {} copies: {}", result.deficit, m, result.error);
  return result;
}

// ---------------------------------------------------------------------------
// Per-copy loop

CopyRun run_copy(const CopyDraft& draft, const UseCaseSpec& spec, int max_refines, Gateway& gateway,
                 const std::string& job_id) {
  if (max_refines < 0) throw std::invalid_argument("max_refines must be non-negative");
  CopyRun run;
  std::uint64_t next_id = 1;
  const int plan_version = spec.evaluator_plan.plan_version;
  auto emit = [&](EventKind kind, Json payload) {
    LineageEvent e{next_id++, now_rfc3339(), draft.copy_id, job_id, kind, std::move(payload), plan_version};
    apply_event(run.lineage, e);
    run.events.push_back(std::move(e));
  };
  auto discard = [&](std::string_view why, const std::string& detail) {
    emit(EventKind::CopyDiscarded, Json{{"reason", why}, {"detail", detail}});
  };

  emit(EventKind::CopyGenerated,
       Json{{"usecase_id", spec.usecase_id}, {"max_refines", max_refines}, {"components", draft.components}});

  const auto& ruleset = ruleset_for(spec);
  const JudgeRunner judge = make_judge_runner(spec, gateway);
  CopyDraft current = draft;
  while (true) {
    CopyDraft formatted = apply_rules(current, ruleset);
    emit(EventKind::CopyFormatted, Json{{"components", formatted.components}});

    PlanResult result;
    try {
      result = run_plan(formatted, spec, judge);
    } catch (const JudgeUnavailable& e) {
      discard(discard_reason::kProviderFailure, e.what());
      break;
    }
    for (const auto& outcome : result.outcomes) emit(EventKind::EvaluationRecorded, Json{{"outcome", outcome}});
    if (result.all_passed()) {
      emit(EventKind::SentToHumanReview, Json::object());
      break;
    }
    const auto& failure = result.failure();
    if (run.lineage.refine_count >= max_refines) {
      emit(EventKind::CopyDiscarded, Json{{"reason", discard_reason::kRefineBudgetExhausted},
                                          {"evaluator_id", failure.evaluator_id},
                                          {"reason_code", failure.feedback.reason_code}});
      break;
    }

    const RefinePrompt prompt = build_refine_prompt(formatted, failure.feedback, spec);
    const std::string prompt_text = prompt.render();
    emit(EventKind::RefinementRequested, Json{{"evaluator_id", failure.evaluator_id},
                                              {"reason_code", failure.feedback.reason_code},
                                              {"instruction", prompt.instruction},
                                              {"prompt_digest", fnv1a_hex(prompt_text)}});
    const std::string tag(tags::kRefinement);
    std::optional<CopyDraft> refined;
    std::string error;
    try {
      try {
        refined = parse_single_copy(gateway.complete(prompt_text, tag), spec.structure);
      } catch (const ParseFailure& e) {
        spdlog::warn("refinement of {} unreadable ({}); re-asking once", draft.copy_id, e.what());
        refined = parse_single_copy(gateway.complete(prompt_text + std::string(kRefinementReask), tag),
                                    spec.structure);
      }
    } catch (const ProviderError& e) {
      discard(discard_reason::kProviderFailure, e.what());
      break;
    } catch (const ParseFailure& e) {
      discard(discard_reason::kParseFailure, e.what());
      break;
    }
    refined->copy_id = draft.copy_id;
    refined->usecase_id = spec.usecase_id;
    emit(EventKind::CopyRefined, Json{{"components", refined->components}});
    current = std::move(*refined);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Jobs

std::string make_copy_id(const std::string& job_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-c%04d", index + 1);
  return job_id + buf;
}

std::string validate_job_request(const JobRequest& r) {
  if (r.job_id.empty()) return "job_id must not be empty";
  for (char c : r.job_id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      return "job_id may only contain letters, digits, '-', '_' and '.'";
    }
  }
  if (r.total < 1) return "total (N) must be at least 1";
  if (r.batch_size < 1 || r.batch_size > r.max_batch) {
    return "batch_size (m) must be between 1 and " + std::to_string(r.max_batch);
  }
  if (r.max_refines < 0) return "max_refines (J) must be non-negative";
  if (r.workers < 1) return "workers must be at least 1";
  return {};
}

void to_json(Json& j, const JobSummary& v) {
  j = Json{{"job_id", v.job_id},
           {"usecase_id", v.usecase_id},
           {"requested", v.requested},
           {"generated", v.generated},
           {"deficit", v.deficit},
           {"states", v.states},
           {"first_pass", v.first_pass},
           {"terminal_pass", v.terminal_pass},
           {"first_pass_rate", v.first_pass_rate},
           {"success_rate", v.success_rate},
           {"copy_ids", v.copy_ids}};
}

JobSummary run_job(const UseCaseSpec& spec, const JobRequest& request, Gateway& gateway, EventStore& store,
                   const ProgressFn& progress) {
  if (auto err = validate_job_request(request); !err.empty()) throw std::invalid_argument(err);
  if (auto report = validate_usecase(spec); !report.ok()) {
    throw std::invalid_argument("invalid use case: " + report.violations.front().path + ": " +
                                report.violations.front().message);
  }
  {
    const auto jobs = store.jobs();
    if (std::find(jobs.begin(), jobs.end(), request.job_id) != jobs.end()) {
      throw std::invalid_argument("job '" + request.job_id + "' already exists");
    }
  }

  JobSummary summary;
  summary.job_id = request.job_id;
  summary.usecase_id = spec.usecase_id;
  summary.requested = request.total;

  std::vector<CopyDraft> drafts;
  for (int start = 0; start < request.total; start += request.batch_size) {
    const int m = std::min(request.batch_size, request.total - start);
    auto batch = generate_batch(spec, m, gateway);
    summary.deficit += batch.deficit;
    for (auto& d : batch.drafts) {
      d.copy_id = make_copy_id(request.job_id, static_cast<int>(drafts.size()));
      drafts.push_back(std::move(d));
    }
  }
  summary.generated = static_cast<int>(drafts.size());

  std::vector<std::optional<CopyRun>> runs(drafts.size());
  std::vector<std::exception_ptr> errors(drafts.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < drafts.size();) {
      try {
        runs[i] = run_copy(drafts[i], spec, request.max_refines, gateway, request.job_id);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      const int n = ++done;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(n, static_cast<int>(drafts.size()));
      }
    }
  };
  const int threads = std::min<int>(request.workers, std::max<std::size_t>(drafts.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& run : runs) {
    for (auto& e : run->events) e.event_id = 0;
    store.append_all(run->events);
    const auto& l = run->lineage;
    summary.copy_ids.push_back(l.copy_id);
    ++summary.states[to_string(l.state)];
    if (passed_evaluations(l.state)) {
      ++summary.terminal_pass;
      if (l.refine_count == 0) ++summary.first_pass;
    }
  }
  summary.first_pass_rate = Percent::of(summary.first_pass, request.total).str();
  summary.success_rate = Percent::of(summary.terminal_pass, request.total).str();
  return summary;
}

}  // namespace copygen
