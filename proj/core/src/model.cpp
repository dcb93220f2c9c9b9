#include "copygen/model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <stdexcept>
#include <utility>

#include "copygen/taxonomy.hpp"
#include "copygen/text.hpp"

namespace copygen {

namespace {

constexpr std::array<std::pair<CriterionKind, const char*>, 7> kCriterionNames = {{
    {CriterionKind::tone, "tone"},
    {CriterionKind::coherence, "coherence"},
    {CriterionKind::topic_inclusion, "topic_inclusion"},
    {CriterionKind::topic_exclusion, "topic_exclusion"},
    {CriterionKind::persona, "persona"},
    {CriterionKind::value_proposition, "value_proposition"},
    {CriterionKind::style, "style"},
}};

template <typename Enum, std::size_t N>
Enum enum_from_json(const Json& j, const std::array<std::pair<Enum, const char*>, N>& table,
                    const char* what) {
  const auto s = j.get<std::string>();
  for (const auto& [value, name] : table) {
    if (s == name) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const std::array<std::pair<Enum, const char*>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "unknown";
}

constexpr std::array<std::pair<StepType, const char*>, 5> kStepNames = {{
    {StepType::length, "length"},
    {StepType::keywords, "keywords"},
    {StepType::punctuation, "punctuation"},
    {StepType::lexical, "lexical"},
    {StepType::judge, "judge"},
}};

constexpr std::array<std::pair<FormatRuleId, const char*>, 4> kRuleNames = {{
    {FormatRuleId::serial_comma_removal, "serial_comma_removal"},
    {FormatRuleId::ampersand_substitution, "ampersand_substitution"},
    {FormatRuleId::terminal_punctuation_strip, "terminal_punctuation_strip"},
    {FormatRuleId::whitespace_collapse, "whitespace_collapse"},
}};

constexpr std::array<std::pair<ProviderKind, const char*>, 2> kProviderNames = {{
    {ProviderKind::http, "http"},
    {ProviderKind::mock, "mock"},
}};

template <typename T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

template <typename T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

bool blank(const std::string& s) { return text::trim(s).empty(); }

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace

std::string to_string(CriterionKind kind) { return enum_name(kind, kCriterionNames); }

std::optional<CriterionKind> criterion_kind_from_string(const std::string& s) {
  for (const auto& [value, name] : kCriterionNames) {
    if (s == name) return value;
  }
  return std::nullopt;
}

const LengthConstraint* ConstraintSet::length_for(const std::string& component) const {
  auto it = std::find_if(length.begin(), length.end(),
                         [&](const LengthConstraint& c) { return c.component == component; });
  return it == length.end() ? nullptr : &*it;
}

const JudgedCriterion* ConstraintSet::criterion(const std::string& criterion_id) const {
  auto it = std::find_if(judged_criteria.begin(), judged_criteria.end(),
                         [&](const JudgedCriterion& c) { return c.criterion_id == criterion_id; });
  return it == judged_criteria.end() ? nullptr : &*it;
}

const std::string& UseCaseSpec::context_description() const {
  static const std::string empty;
  auto it = prompt_fragments.contextual_descriptions.find(context);
  return it == prompt_fragments.contextual_descriptions.end() ? empty : it->second;
}

std::string CopyDraft::joined(const CopyStructure& structure) const {
  std::string out;
  for (const auto& name : structure.components) {
    auto it = components.find(name);
    if (it == components.end()) continue;
    if (!out.empty()) out.push_back(' ');
    out += it->second;
  }
  return out;
}

FeedbackRecord FeedbackRecord::pass() {
  return FeedbackRecord{std::string(reason::kPass), Json::object(), ""};
}

bool FeedbackRecord::is_pass() const {
  return reason_code == reason::kPass && details == Json::object() && narrative.empty();
}

EvaluationOutcome EvaluationOutcome::passed(std::string evaluator_id, std::string scope) {
  return EvaluationOutcome{std::move(evaluator_id), true, FeedbackRecord::pass(), std::move(scope)};
}

EvaluationOutcome EvaluationOutcome::failed(std::string evaluator_id, FeedbackRecord feedback,
                                            std::string scope) {
  return EvaluationOutcome{std::move(evaluator_id), false, std::move(feedback), std::move(scope)};
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_usecase(const UseCaseSpec& spec) {
  ValidationReport report;
  auto add = [&](std::string path, std::string msg) {
    report.violations.push_back({std::move(path), std::move(msg)});
  };

  if (blank(spec.usecase_id)) add("usecase_id", "must be non-empty");
  if (blank(spec.context)) add("context", "must be non-empty");

  const auto& comps = spec.structure.components;
  if (comps.empty() || comps.size() > 2) {
    add("structure.components", "must list 1 or 2 components");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (blank(comps[i])) add(idx("structure.components", i), "component name must be non-empty");
    if (!names.insert(comps[i]).second) add(idx("structure.components", i), "duplicate component name");
  }

  const auto& cs = spec.constraints;
  for (const auto& name : names) {
    const auto n = std::count_if(cs.length.begin(), cs.length.end(),
                                 [&](const LengthConstraint& c) { return c.component == name; });
    if (n != 1) {
      add("constraints.length", "component '" + name + "' needs exactly one length constraint, has " +
                                    std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < cs.length.size(); ++i) {
    const auto& lc = cs.length[i];
    const auto path = idx("constraints.length", i);
    if (!names.contains(lc.component)) add(path + ".component", "unknown component '" + lc.component + "'");
    if (lc.max_len <= 0) add(path + ".max_len", "must be positive");
    if (lc.min_len && (*lc.min_len < 0 || *lc.min_len >= lc.max_len)) {
      add(path + ".min_len", "must be non-negative and below max_len");
    }
  }

  for (std::size_t g = 0; g < cs.keywords_include.size(); ++g) {
    const auto& group = cs.keywords_include[g];
    if (group.empty()) add(idx("constraints.keywords_include", g), "group must list at least one alternative");
    for (std::size_t a = 0; a < group.size(); ++a) {
      if (blank(group[a])) add(idx(idx("constraints.keywords_include", g), a), "literal must be non-empty");
    }
  }
  for (std::size_t i = 0; i < cs.keywords_exclude.size(); ++i) {
    if (blank(cs.keywords_exclude[i])) add(idx("constraints.keywords_exclude", i), "literal must be non-empty");
  }
  for (std::size_t i = 0; i < cs.punctuation_after.size(); ++i) {
    if (blank(cs.punctuation_after[i])) add(idx("constraints.punctuation_after", i), "literal must be non-empty");
  }
  for (std::size_t i = 0; i < cs.lexical_prefs.size(); ++i) {
    const auto& p = cs.lexical_prefs[i];
    const auto path = idx("constraints.lexical_prefs", i);
    if (blank(p.preferred_term) || blank(p.avoided_term)) {
      add(path, "terms must be non-empty");
    } else if (text::normalize(p.preferred_term) == text::normalize(p.avoided_term)) {
      add(path, "preferred and avoided terms must differ");
    }
  }

  std::set<std::string> criterion_ids;
  for (std::size_t i = 0; i < cs.judged_criteria.size(); ++i) {
    const auto& c = cs.judged_criteria[i];
    const auto path = idx("constraints.judged_criteria", i);
    if (blank(c.criterion_id)) add(path + ".criterion_id", "must be non-empty");
    if (!criterion_ids.insert(c.criterion_id).second) add(path + ".criterion_id", "duplicate criterion id");
    if (blank(c.rubric_text)) add(path + ".rubric_text", "must be non-empty");
    if (c.kind == CriterionKind::coherence && comps.size() != 2) {
      add(path + ".kind", "coherence requires a two-component structure");
    }
  }

  const auto& steps = spec.evaluator_plan.steps;
  if (spec.evaluator_plan.plan_version < 1) add("evaluator_plan.plan_version", "must be >= 1");
  if (steps.empty()) add("evaluator_plan.steps", "plan needs at least one step");
  std::set<std::string> step_ids;
  bool seen_judge = false;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const auto path = idx("evaluator_plan.steps", i);
    if (blank(s.evaluator_id)) add(path + ".evaluator_id", "must be non-empty");
    if (!step_ids.insert(s.evaluator_id).second) add(path + ".evaluator_id", "duplicate evaluator id");
    if (s.deterministic() && seen_judge) add(path, "deterministic steps must precede judged steps");
    seen_judge = seen_judge || !s.deterministic();
    switch (s.type) {
      case StepType::length:
        if (s.component && !names.contains(*s.component)) {
          add(path + ".component", "unknown component '" + *s.component + "'");
        }
        break;
      case StepType::keywords:
        if (cs.keywords_include.empty() && cs.keywords_exclude.empty()) {
          add(path, "keyword step without keywords_include or keywords_exclude");
        }
        break;
      case StepType::punctuation:
        if (cs.punctuation_after.empty()) add(path, "punctuation step without punctuation_after words");
        break;
      case StepType::lexical:
        if (cs.lexical_prefs.empty()) add(path, "lexical step without lexical_prefs");
        break;
      case StepType::judge:
        if (!s.criterion_id || !cs.criterion(*s.criterion_id)) {
          add(path + ".criterion_id", "judge step must reference a judged criterion");
        }
        break;
    }
  }

  std::set<FormatRuleId> rule_ids;
  for (std::size_t i = 0; i < spec.format_rules.size(); ++i) {
    if (!rule_ids.insert(spec.format_rules[i].rule_id).second) {
      add(idx("format_rules", i), "duplicate rule id");
    }
  }
  if (spec.persona && blank(spec.persona->cohort)) add("persona.cohort", "must be non-empty");
  return report;
}

ValidationReport validate_draft(const CopyDraft& draft, const CopyStructure& structure) {
  ValidationReport report;
  std::set<std::string> expected(structure.components.begin(), structure.components.end());
  std::set<std::string> actual;
  for (const auto& [name, value] : draft.components) {
    actual.insert(name);
    if (!text::is_valid_utf8(value)) report.violations.push_back({"components." + name, "invalid UTF-8"});
  }
  if (expected != actual) {
    report.violations.push_back({"components", "component names do not match the structure"});
  }
  return report;
}

std::string validate_provider(const ProviderConfig& config) {
  if (config.temperature < 0) return "temperature must be >= 0";
  if (config.provider_kind == ProviderKind::mock && config.transcript_path.empty()) {
    return "mock provider requires a transcript";
  }
  if (config.provider_kind == ProviderKind::http && config.endpoint.empty()) {
    return "http provider requires an endpoint";
  }
  if (config.attempts < 1) return "attempts must be >= 1";
  if (config.max_concurrency < 1) return "max_concurrency must be >= 1";
  return {};
}

UseCaseSpec load_usecase(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open use case file " + path);
  return Json::parse(in).get<UseCaseSpec>();
}

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const CriterionKind& v) { j = enum_name(v, kCriterionNames); }
void from_json(const Json& j, CriterionKind& v) { v = enum_from_json(j, kCriterionNames, "criterion kind"); }
void to_json(Json& j, const StepType& v) { j = enum_name(v, kStepNames); }
void from_json(const Json& j, StepType& v) { v = enum_from_json(j, kStepNames, "step type"); }
void to_json(Json& j, const FormatRuleId& v) { j = enum_name(v, kRuleNames); }
void from_json(const Json& j, FormatRuleId& v) { v = enum_from_json(j, kRuleNames, "format rule"); }
void to_json(Json& j, const ProviderKind& v) { j = enum_name(v, kProviderNames); }
void from_json(const Json& j, ProviderKind& v) { v = enum_from_json(j, kProviderNames, "provider kind"); }

void to_json(Json& j, const CopyStructure& v) { j = Json{{"components", v.components}}; }
void from_json(const Json& j, CopyStructure& v) { j.at("components").get_to(v.components); }

void to_json(Json& j, const LengthConstraint& v) {
  j = Json{{"component", v.component}, {"max_len", v.max_len}};
  put_opt(j, "min_len", v.min_len);
}
void from_json(const Json& j, LengthConstraint& v) {
  j.at("component").get_to(v.component);
  j.at("max_len").get_to(v.max_len);
  v.min_len.reset();
  if (auto it = j.find("min_len"); it != j.end() && !it->is_null()) v.min_len = it->get<int>();
}

void to_json(Json& j, const LexicalPref& v) {
  j = Json{{"preferred_term", v.preferred_term}, {"avoided_term", v.avoided_term}};
}
void from_json(const Json& j, LexicalPref& v) {
  j.at("preferred_term").get_to(v.preferred_term);
  j.at("avoided_term").get_to(v.avoided_term);
}

void to_json(Json& j, const FewShotExample& v) {
  j = Json{{"copy", v.copy}, {"verdict", v.pass ? "pass" : "fail"}, {"explanation", v.explanation}};
}
void from_json(const Json& j, FewShotExample& v) {
  j.at("copy").get_to(v.copy);
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict != "pass" && verdict != "fail") throw std::invalid_argument("few-shot verdict must be pass|fail");
  v.pass = verdict == "pass";
  v.explanation = j.value("explanation", "");
}

void to_json(Json& j, const JudgedCriterion& v) {
  j = Json{{"criterion_id", v.criterion_id},
           {"kind", v.kind},
           {"rubric_text", v.rubric_text},
           {"few_shot", v.few_shot}};
}
void from_json(const Json& j, JudgedCriterion& v) {
  j.at("criterion_id").get_to(v.criterion_id);
  j.at("kind").get_to(v.kind);
  j.at("rubric_text").get_to(v.rubric_text);
  v.few_shot.clear();
  get_opt(j, "few_shot", v.few_shot);
}

void to_json(Json& j, const ConstraintSet& v) {
  j = Json{{"length", v.length},
           {"keywords_include", v.keywords_include},
           {"keywords_exclude", v.keywords_exclude},
           {"punctuation_after", v.punctuation_after},
           {"lexical_prefs", v.lexical_prefs},
           {"judged_criteria", v.judged_criteria}};
}
void from_json(const Json& j, ConstraintSet& v) {
  v = ConstraintSet{};
  j.at("length").get_to(v.length);
  get_opt(j, "keywords_include", v.keywords_include);
  get_opt(j, "keywords_exclude", v.keywords_exclude);
  get_opt(j, "punctuation_after", v.punctuation_after);
  get_opt(j, "lexical_prefs", v.lexical_prefs);
  get_opt(j, "judged_criteria", v.judged_criteria);
}

void to_json(Json& j, const EvaluatorStep& v) {
  j = Json{{"evaluator_id", v.evaluator_id}, {"type", v.type}};
  put_opt(j, "component", v.component);
  put_opt(j, "criterion_id", v.criterion_id);
}
void from_json(const Json& j, EvaluatorStep& v) {
  j.at("evaluator_id").get_to(v.evaluator_id);
  j.at("type").get_to(v.type);
  v.component.reset();
  v.criterion_id.reset();
  if (auto it = j.find("component"); it != j.end() && !it->is_null()) v.component = it->get<std::string>();
  if (auto it = j.find("criterion_id"); it != j.end() && !it->is_null()) v.criterion_id = it->get<std::string>();
}

void to_json(Json& j, const EvaluatorPlan& v) {
  j = Json{{"plan_version", v.plan_version}, {"steps", v.steps}};
}
void from_json(const Json& j, EvaluatorPlan& v) {
  j.at("plan_version").get_to(v.plan_version);
  j.at("steps").get_to(v.steps);
}

void to_json(Json& j, const PromptFragments& v) {
  j = Json{{"role", v.role},
           {"contextual_descriptions", v.contextual_descriptions},
           {"instructions", v.instructions},
           {"usecase_instructions", v.usecase_instructions},
           {"examples", v.examples}};
}
void from_json(const Json& j, PromptFragments& v) {
  v = PromptFragments{};
  get_opt(j, "role", v.role);
  get_opt(j, "contextual_descriptions", v.contextual_descriptions);
  get_opt(j, "instructions", v.instructions);
  get_opt(j, "usecase_instructions", v.usecase_instructions);
  get_opt(j, "examples", v.examples);
}

void to_json(Json& j, const PersonaSpec& v) {
  j = Json{{"cohort", v.cohort}, {"description", v.description}};
}
void from_json(const Json& j, PersonaSpec& v) {
  j.at("cohort").get_to(v.cohort);
  v.description = j.value("description", "");
}

void to_json(Json& j, const FormatRule& v) {
  j = Json{{"rule_id", v.rule_id}, {"parameters", v.parameters}};
}
void from_json(const Json& j, FormatRule& v) {
  j.at("rule_id").get_to(v.rule_id);
  v.parameters = j.value("parameters", Json::object());
}

void to_json(Json& j, const UseCaseSpec& v) {
  j = Json{{"usecase_id", v.usecase_id},
           {"context", v.context},
           {"structure", v.structure},
           {"constraints", v.constraints},
           {"evaluator_plan", v.evaluator_plan},
           {"prompt_fragments", v.prompt_fragments},
           {"format_rules", v.format_rules},
           {"campaign_name", v.campaign_name}};
  put_opt(j, "persona", v.persona);
}
void from_json(const Json& j, UseCaseSpec& v) {
  v = UseCaseSpec{};
  j.at("usecase_id").get_to(v.usecase_id);
  j.at("context").get_to(v.context);
  j.at("structure").get_to(v.structure);
  j.at("constraints").get_to(v.constraints);
  j.at("evaluator_plan").get_to(v.evaluator_plan);
  get_opt(j, "prompt_fragments", v.prompt_fragments);
  if (auto it = j.find("persona"); it != j.end() && !it->is_null()) v.persona = it->get<PersonaSpec>();
  // "format_rules" is either a rule list or the name of a builtin ruleset.
  if (auto it = j.find("format_rules"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "brand-default-v1") {
        throw std::invalid_argument("unknown builtin ruleset '" + it->get<std::string>() + "'");
      }
    } else {
      it->get_to(v.format_rules);
    }
  }
  get_opt(j, "campaign_name", v.campaign_name);
}

void to_json(Json& j, const CopyDraft& v) {
  j = Json{{"copy_id", v.copy_id},
           {"usecase_id", v.usecase_id},
           {"components", v.components},
           {"formatted", v.formatted}};
}
void from_json(const Json& j, CopyDraft& v) {
  v.copy_id = j.value("copy_id", "");
  v.usecase_id = j.value("usecase_id", "");
  j.at("components").get_to(v.components);
  v.formatted = j.value("formatted", false);
}

void to_json(Json& j, const FeedbackRecord& v) {
  j = Json{{"reason_code", v.reason_code}, {"details", v.details}, {"narrative", v.narrative}};
}
void from_json(const Json& j, FeedbackRecord& v) {
  j.at("reason_code").get_to(v.reason_code);
  v.details = j.value("details", Json::object());
  v.narrative = j.value("narrative", "");
}

void to_json(Json& j, const EvaluationOutcome& v) {
  j = Json{{"evaluator_id", v.evaluator_id},
           {"pass", v.pass},
           {"feedback", v.feedback},
           {"scope", v.scope}};
}
void from_json(const Json& j, EvaluationOutcome& v) {
  j.at("evaluator_id").get_to(v.evaluator_id);
  j.at("pass").get_to(v.pass);
  j.at("feedback").get_to(v.feedback);
  v.scope = j.value("scope", "copy");
}

void to_json(Json& j, const ProviderConfig& v) {
  j = Json{{"provider_kind", v.provider_kind},
           {"model_id", v.model_id},
           {"temperature", v.temperature},
           {"max_output_tokens", v.max_output_tokens},
           {"endpoint", v.endpoint},
           {"credential_env", v.credential_env},
           {"transcript_path", v.transcript_path},
           {"timeout_ms", v.timeout_ms},
           {"attempts", v.attempts},
           {"backoff_ms", v.backoff_ms},
           {"max_concurrency", v.max_concurrency}};
}
void from_json(const Json& j, ProviderConfig& v) {
  v = ProviderConfig{};
  j.at("provider_kind").get_to(v.provider_kind);
  get_opt(j, "model_id", v.model_id);
  get_opt(j, "temperature", v.temperature);
  get_opt(j, "max_output_tokens", v.max_output_tokens);
  get_opt(j, "endpoint", v.endpoint);
  get_opt(j, "credential_env", v.credential_env);
  get_opt(j, "transcript_path", v.transcript_path);
  get_opt(j, "timeout_ms", v.timeout_ms);
  get_opt(j, "attempts", v.attempts);
  get_opt(j, "backoff_ms", v.backoff_ms);
  get_opt(j, "max_concurrency", v.max_concurrency);
}

void to_json(Json& j, const Violation& v) { j = Json{{"path", v.path}, {"message", v.message}}; }
void to_json(Json& j, const ValidationReport& v) { j = Json{{"violations", v.violations}}; }

}  // namespace copygen
