// copygen: run, evaluate, select, report and simulate from the command line.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "copygen/constraints.hpp"
#include "copygen/diversity.hpp"
#include "copygen/formatter.hpp"
#include "copygen/gateway.hpp"
#include "copygen/judge.hpp"
#include "copygen/mab.hpp"
#include "copygen/metrics.hpp"
#include "copygen/model.hpp"
#include "copygen/refine.hpp"
#include "copygen/service.hpp"
#include "copygen/store.hpp"

namespace fs = std::filesystem;
using copygen::Json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Bad arguments detected after parsing; reported with exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

copygen::UseCaseSpec load_spec(const std::string& path) {
  auto spec = copygen::load_usecase(path);
  const auto report = copygen::validate_usecase(spec);
  if (!report.ok()) {
    std::string msg = path + " is not a valid use case:";
    for (const auto& v : report.violations) msg += "\n  " + v.path + ": " + v.message;
    throw std::runtime_error(msg);
  }
  return spec;
}

struct ProviderArgs {
  std::string kind;
  std::string transcript;
  std::string endpoint;
  std::string model = "default";
  std::string credential_env;
  std::string config_file;
  double temperature = 0.7;
};

void add_provider_options(CLI::App* cmd, ProviderArgs& p) {
  cmd->add_option("--provider", p.kind, "Provider kind")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--transcript", p.transcript, "Mock transcript (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--endpoint", p.endpoint, "HTTP completion endpoint");
  cmd->add_option("--model", p.model, "Model id");
  cmd->add_option("--credential-env", p.credential_env, "Environment variable holding the API key");
  cmd->add_option("--temperature", p.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
  cmd->add_option("--provider-config", p.config_file, "ProviderConfig JSON file")->check(CLI::ExistingFile);
}

std::optional<copygen::ProviderConfig> provider_config(const ProviderArgs& p) {
  copygen::ProviderConfig cfg;
  if (!p.config_file.empty()) {
    cfg = read_json(p.config_file).get<copygen::ProviderConfig>();
  } else if (p.kind.empty()) {
    return std::nullopt;
  }
  if (p.kind == "mock") cfg.provider_kind = copygen::ProviderKind::mock;
  if (p.kind == "http") cfg.provider_kind = copygen::ProviderKind::http;
  if (!p.transcript.empty()) cfg.transcript_path = p.transcript;
  if (!p.endpoint.empty()) cfg.endpoint = p.endpoint;
  if (!p.credential_env.empty()) cfg.credential_env = p.credential_env;
  if (p.config_file.empty()) {
    cfg.model_id = p.model;
    cfg.temperature = p.temperature;
  }
  if (auto err = copygen::validate_provider(cfg); !err.empty()) throw UsageError(err);
  return cfg;
}

// A job is addressed by its log file or by a directory plus an optional id.
struct JobRef {
  std::unique_ptr<copygen::EventStore> store;
  std::string job_id;
};

JobRef open_job(const std::string& path, const std::string& job_id) {
  JobRef ref;
  fs::path p(path);
  std::string id = job_id;
  if (fs::is_regular_file(p)) {
    const std::string name = p.filename().string();
    const std::string suffix = ".events.jsonl";
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) {
      throw UsageError(path + " is not a <job_id>.events.jsonl log");
    }
    if (id.empty()) id = name.substr(0, name.size() - suffix.size());
    p = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  } else if (!fs::is_directory(p)) {
    throw UsageError(path + " does not exist");
  }
  ref.store = std::make_unique<copygen::EventStore>(p);
  const auto jobs = ref.store->jobs();
  if (id.empty()) {
    if (jobs.size() != 1) {
      throw UsageError(path + " holds " + std::to_string(jobs.size()) + " jobs; pick one with --job-id");
    }
    id = jobs.front();
  } else if (std::find(jobs.begin(), jobs.end(), id) == jobs.end()) {
    throw UsageError("no job '" + id + "' in " + path);
  }
  ref.job_id = id;
  return ref;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string usecase;
  int count = 0;
  int batch = 10;
  int max_refines = 1;
  int workers = 1;
  std::string out;
  std::string job_id;
  std::string audit;
  ProviderArgs provider;
};

int cmd_run(const RunArgs& a, bool json) {
  const auto spec = load_spec(a.usecase);
  auto cfg = provider_config(a.provider);
  if (!cfg) throw UsageError("run needs --provider or --provider-config");
  copygen::JobRequest req;
  req.job_id = a.job_id.empty() ? spec.usecase_id : a.job_id;
  req.total = a.count;
  req.batch_size = a.batch;
  req.max_refines = a.max_refines;
  req.workers = a.workers;
  if (auto err = copygen::validate_job_request(req); !err.empty()) throw UsageError(err);

  const fs::path out(a.out);
  if (fs::exists(copygen::EventStore::log_path(out, req.job_id))) {
    throw UsageError("job log for '" + req.job_id + "' already exists in " + a.out);
  }
  copygen::AuditSink audit;
  if (!a.audit.empty()) audit = copygen::jsonl_audit_sink(a.audit);
  auto gateway = copygen::make_gateway(*cfg, audit);
  copygen::EventStore store(out);
  const auto summary = copygen::run_job(spec, req, *gateway, store);
  write_file(out / (req.job_id + ".summary.json"), Json(summary).dump(2) + "\n");

  if (json) {
    std::cout << Json(summary).dump(2) << "\n";
  } else {
    std::cout << "job " << summary.job_id << ": " << summary.generated << " of " << summary.requested
              << " copies generated";
    if (summary.deficit) std::cout << " (deficit " << summary.deficit << ")";
    std::cout << "\n";
    std::cout << "passed without refinement: " << summary.first_pass << " (" << summary.first_pass_rate << "%)\n";
    std::cout << "passed with refinement:    " << summary.terminal_pass << " (" << summary.success_rate << "%)\n";
    for (const auto& [state, n] : summary.states) std::cout << "  " << state << ": " << n << "\n";
    std::cout << "log: " << copygen::EventStore::log_path(out, req.job_id).string() << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string usecase;
  std::string copies;
  ProviderArgs provider;
};

int cmd_eval(const EvalArgs& a, bool json) {
  const auto spec = load_spec(a.usecase);
  const Json input = read_json(a.copies);
  if (!input.is_array()) throw std::runtime_error(a.copies + " must hold a JSON array of copies");

  std::unique_ptr<copygen::Gateway> gateway;
  copygen::JudgeRunner judge;
  if (auto cfg = provider_config(a.provider)) {
    gateway = copygen::make_gateway(*cfg);
    judge = copygen::make_judge_runner(spec, *gateway);
  }
  std::vector<std::string> skipped;
  if (!judge) {
    for (const auto& step : spec.evaluator_plan.steps) {
      if (!step.deterministic()) skipped.push_back(step.evaluator_id);
    }
  }

  Json results = Json::array();
  int passed = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const Json& item = input[i];
    copygen::CopyDraft draft;
    draft.copy_id = item.value("copy_id", "copy-" + std::to_string(i + 1));
    draft.usecase_id = spec.usecase_id;
    const Json& comps = item.contains("components") ? item["components"] : item;
    for (const auto& name : spec.structure.components) {
      if (!comps.contains(name) || !comps[name].is_string()) {
        throw std::runtime_error(draft.copy_id + " has no string component '" + name + "'");
      }
      draft.components[name] = comps[name].get<std::string>();
    }
    const auto formatted = copygen::apply_rules(draft, copygen::ruleset_for(spec));
    const auto result = copygen::run_plan(formatted, spec, judge, copygen::PlanOptions{!judge});
    if (result.all_passed()) ++passed;
    results.push_back({{"copy_id", draft.copy_id},
                       {"components", formatted.components},
                       {"pass", result.all_passed()},
                       {"outcomes", result.outcomes},
                       {"skipped", result.all_passed() ? Json(skipped) : Json::array()}});
  }

  if (json) {
    std::cout << Json{{"usecase_id", spec.usecase_id}, {"passed", passed}, {"total", input.size()}, {"results", results}}
                     .dump(2)
              << "\n";
    return 0;
  }
  for (const auto& r : results) {
    std::cout << (r["pass"].get<bool>() ? "PASS " : "FAIL ") << r["copy_id"].get<std::string>();
    for (const auto& [name, text] : r["components"].items()) std::cout << "  " << name << "=\"" << text.get<std::string>() << "\"";
    std::cout << "\n";
    for (const auto& o : r["outcomes"]) {
      std::cout << "    " << (o["pass"].get<bool>() ? "ok   " : "fail ") << o["evaluator_id"].get<std::string>();
      if (!o["pass"].get<bool>()) {
        std::cout << "  " << o["feedback"]["reason_code"].get<std::string>() << ": "
                  << o["feedback"]["narrative"].get<std::string>();
      }
      std::cout << "\n";
    }
    for (const auto& s : r["skipped"]) std::cout << "    skip " << s.get<std::string>() << " (no provider)\n";
  }
  std::cout << passed << " of " << input.size() << " copies passed\n";
  return 0;
}

int cmd_select(const std::string& job, const std::string& job_id, int k, const std::string& usecase, bool json) {
  if (k < 1) throw UsageError("--k must be at least 1");
  auto ref = open_job(job, job_id);
  std::optional<copygen::UseCaseSpec> spec;
  if (!usecase.empty()) spec = load_spec(usecase);
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  for (const auto& l : ref.store->lineages(ref.job_id)) {
    if (l.state != copygen::CopyState::pending_human_review && l.state != copygen::CopyState::accepted) continue;
    copygen::CopyDraft d;
    d.components = l.components;
    copygen::CopyStructure structure;
    if (spec) {
      structure = spec->structure;
    } else {
      for (const auto& [name, value] : l.components) structure.components.push_back(name);
    }
    ids.push_back(l.copy_id);
    texts.push_back(d.joined(structure));
  }
  std::vector<std::size_t> picked;
  if (!texts.empty()) picked = copygen::select_diverse(texts, static_cast<std::size_t>(k));
  if (json) {
    Json out = Json::array();
    for (auto i : picked) out.push_back({{"copy_id", ids[i]}, {"text", texts[i]}});
    std::cout << Json{{"job_id", ref.job_id}, {"k", k}, {"candidates", texts.size()}, {"selected", out}}.dump(2) << "\n";
  } else {
    std::cout << "selected " << picked.size() << " of " << texts.size() << " passing copies\n";
    for (auto i : picked) std::cout << ids[i] << "\t" << texts[i] << "\n";
  }
  return 0;
}

int cmd_report(const std::string& job, const std::string& job_id, bool json) {
  auto ref = open_job(job, job_id);
  const auto report = copygen::build_report(ref.store->lineages(ref.job_id), ref.job_id);
  if (json) {
    std::cout << Json(report).dump(2) << "\n";
  } else {
    std::cout << copygen::render_report(report);
  }
  return 0;
}

int cmd_mab(const std::string& scenario_path, const std::string& out, const std::string& csv,
            std::optional<std::uint64_t> seed, bool json) {
  auto scenario = copygen::mab::load_scenario(scenario_path);
  if (seed) scenario.seed = *seed;
  const auto report = copygen::mab::simulate(scenario);
  const std::string body = Json(report).dump(2) + "\n";
  if (!out.empty()) write_file(out, body);
  if (!csv.empty()) write_file(csv, copygen::mab::trace_csv(report));
  if (json) {
    std::cout << body;
    return 0;
  }
  std::cout << "arm                 impressions   clicks   ctr       P(best)  final-decile\n";
  for (const auto& a : report.arms) {
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %12lld %8lld   %.5f   %.3f    %.3f\n", a.arm_id.c_str(), a.impressions,
                  a.clicks, a.empirical_ctr(), a.prob_best, report.final_decile_share(a.arm_id));
    std::cout << line;
  }
  std::cout << "best arm: " << report.best_arm << "\n";
  if (report.lift_pct) {
    char line[120];
    std::snprintf(line, sizeof line, "lift of %s over %s: %.2f%%\n", report.lift_arm.c_str(),
                  report.control_arm.c_str(), *report.lift_pct);
    std::cout << line;
  }
  std::cout << "winner: " << report.winner.value_or("none") << "\n";
  return 0;
}

copygen::Service* g_service = nullptr;

int cmd_serve(const std::string& config_path, std::optional<int> port) {
  auto cfg = copygen::load_service_config(config_path);
  if (port) cfg.port = *port;
  copygen::Service service(cfg);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  service.listen();
  g_service = nullptr;
  return 0;
}

int cmd_validate(const std::string& path, bool json) {
  const auto spec = copygen::load_usecase(path);
  const auto report = copygen::validate_usecase(spec);
  if (json) {
    std::cout << Json(report).dump(2) << "\n";
  } else if (report.ok()) {
    std::cout << spec.usecase_id << ": ok\n";
  } else {
    for (const auto& v : report.violations) std::cout << v.path << ": " << v.message << "\n";
  }
  return report.ok() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained marketing-copy generation pipeline"};
  app.require_subcommand(1);
  bool json = false;
  bool verbose = false;
  app.add_flag("--json", json, "Machine-readable output");
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Generate, evaluate and refine a job of copies");
  run_cmd->add_option("--usecase", run.usecase, "Use case JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--count,-N", run.count, "Total copies N")->required();
  run_cmd->add_option("--batch,-m", run.batch, "Copies per generation call m")->capture_default_str();
  run_cmd->add_option("--max-refines,-J", run.max_refines, "Refinement budget J per copy")->capture_default_str();
  run_cmd->add_option("--workers", run.workers, "Copies processed in parallel")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Directory for the job log and summary")->required();
  run_cmd->add_option("--job-id", run.job_id, "Job id (default: the use case id)");
  run_cmd->add_option("--audit", run.audit, "Append provider audit records to this JSONL file");
  add_provider_options(run_cmd, run.provider);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate existing copies against a use case");
  eval_cmd->add_option("--usecase", eval.usecase, "Use case JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--copies", eval.copies, "JSON array of copies")->required()->check(CLI::ExistingFile);
  add_provider_options(eval_cmd, eval.provider);

  std::string job;
  std::string job_id;
  int k = 0;
  std::string select_usecase;
  auto* select_cmd = app.add_subcommand("select", "Pick k diverse copies among a job's passing copies");
  select_cmd->add_option("--job", job, "Job log file or directory")->required();
  select_cmd->add_option("--job-id", job_id, "Job id when the directory holds several");
  select_cmd->add_option("--k", k, "Subset size")->required();
  select_cmd->add_option("--usecase", select_usecase, "Use case JSON (component order)")->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "Success rates and failure breakdown of a job");
  report_cmd->add_option("--job", job, "Job log file or directory")->required();
  report_cmd->add_option("--job-id", job_id, "Job id when the directory holds several");

  std::string scenario;
  std::string out;
  std::string csv;
  std::optional<std::uint64_t> seed;
  auto* mab_cmd = app.add_subcommand("mab-sim", "Simulate a bandit experiment");
  mab_cmd->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  mab_cmd->add_option("--out", out, "Write the report JSON here");
  mab_cmd->add_option("--csv", csv, "Write the allocation trace as CSV here");
  mab_cmd->add_option("--seed", seed, "Override the scenario seed");

  std::string config;
  std::optional<int> port;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config, "Service config JSON")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", port, "Override the configured port");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a use case document");
  validate_cmd->add_option("usecase", validate_path, "Use case JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("copygen");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*run_cmd) return cmd_run(run, json);
    if (*eval_cmd) return cmd_eval(eval, json);
    if (*select_cmd) return cmd_select(job, job_id, k, select_usecase, json);
    if (*report_cmd) return cmd_report(job, job_id, json);
    if (*mab_cmd) return cmd_mab(scenario, out, csv, seed, json);
    if (*serve_cmd) return cmd_serve(config, port);
    if (*validate_cmd) return cmd_validate(validate_path, json);
  } catch (const UsageError& e) {
    std::cerr << "copygen: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "copygen: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
