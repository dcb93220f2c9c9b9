#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Shared domain types and the declarative use-case configuration. Every type
// has a canonical JSON form (lower_snake_case field names) through the
// to_json/from_json overloads below. from_json throws nlohmann::json
// exceptions on structurally malformed documents and std::invalid_argument
// for unknown enum names; semantic checks live in validate_usecase().
namespace copygen {

using Json = nlohmann::json;

inline constexpr int kDefaultMaxBatch = 20;

enum class CriterionKind {
  tone,
  coherence,
  topic_inclusion,
  topic_exclusion,
  persona,
  value_proposition,
  style,
};

std::string to_string(CriterionKind kind);
std::optional<CriterionKind> criterion_kind_from_string(const std::string& s);

struct CopyStructure {
  std::vector<std::string> components;  // "header", optionally "subheader"
};

struct LengthConstraint {
  std::string component;
  int max_len = 0;
  std::optional<int> min_len;
};

struct LexicalPref {
  std::string preferred_term;
  std::string avoided_term;
};

struct FewShotExample {
  std::string copy;
  bool pass = true;
  std::string explanation;
};

struct JudgedCriterion {
  std::string criterion_id;
  CriterionKind kind = CriterionKind::tone;
  std::string rubric_text;
  std::vector<FewShotExample> few_shot;
};

struct ConstraintSet {
  std::vector<LengthConstraint> length;
  /// All groups required; any alternative inside a group satisfies it.
  std::vector<std::vector<std::string>> keywords_include;
  std::vector<std::string> keywords_exclude;
  std::vector<std::string> punctuation_after;
  std::vector<LexicalPref> lexical_prefs;
  std::vector<JudgedCriterion> judged_criteria;

  const LengthConstraint* length_for(const std::string& component) const;
  const JudgedCriterion* criterion(const std::string& criterion_id) const;
};

enum class StepType { length, keywords, punctuation, lexical, judge };

struct EvaluatorStep {
  std::string evaluator_id;
  StepType type = StepType::length;
  std::optional<std::string> component;     // length steps; absent = every component
  std::optional<std::string> criterion_id;  // judge steps

  bool deterministic() const { return type != StepType::judge; }
};

struct EvaluatorPlan {
  int plan_version = 1;
  std::vector<EvaluatorStep> steps;
};

struct PromptFragments {
  std::string role;
  std::map<std::string, std::string> contextual_descriptions;  // keyed by context
  std::string instructions;
  std::string usecase_instructions;
  std::vector<std::map<std::string, std::string>> examples;  // component -> text
};

struct PersonaSpec {
  std::string cohort;
  std::string description;
};

enum class FormatRuleId {
  serial_comma_removal,
  ampersand_substitution,
  terminal_punctuation_strip,
  whitespace_collapse,
};

struct FormatRule {
  FormatRuleId rule_id = FormatRuleId::whitespace_collapse;
  Json parameters = Json::object();
};

struct UseCaseSpec {
  std::string usecase_id;
  std::string context;
  CopyStructure structure;
  ConstraintSet constraints;
  EvaluatorPlan evaluator_plan;
  PromptFragments prompt_fragments;
  std::optional<PersonaSpec> persona;
  /// Empty means the builtin "brand-default-v1" ruleset.
  std::vector<FormatRule> format_rules;
  /// Substituted for "{campaign_name}" in copies and prompts when present.
  std::string campaign_name;

  const std::string& context_description() const;
};

struct CopyDraft {
  std::string copy_id;
  std::string usecase_id;
  std::map<std::string, std::string> components;
  bool formatted = false;

  /// Components in structure order joined with a single space.
  std::string joined(const CopyStructure& structure) const;
};

struct FeedbackRecord {
  std::string reason_code;
  Json details = Json::object();
  std::string narrative;

  static FeedbackRecord pass();
  bool is_pass() const;
};

struct EvaluationOutcome {
  std::string evaluator_id;
  bool pass = true;
  FeedbackRecord feedback = FeedbackRecord::pass();
  std::string scope = "copy";  // "copy" or a component name

  static EvaluationOutcome passed(std::string evaluator_id, std::string scope = "copy");
  static EvaluationOutcome failed(std::string evaluator_id, FeedbackRecord feedback,
                                  std::string scope = "copy");
};

enum class ProviderKind { http, mock };

struct ProviderConfig {
  ProviderKind provider_kind = ProviderKind::mock;
  std::string model_id = "default";
  double temperature = 0.7;
  int max_output_tokens = 1024;
  std::string endpoint;        // http
  std::string credential_env;  // name of the environment variable holding the API key
  std::string transcript_path; // mock
  int timeout_ms = 30000;
  int attempts = 3;
  std::vector<int> backoff_ms = {1000, 4000};
  int max_concurrency = 4;
};

struct Violation {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every invariant of the use-case schema. Violations are data.
ValidationReport validate_usecase(const UseCaseSpec& spec);

/// Checks a draft against the structure it claims to follow.
ValidationReport validate_draft(const CopyDraft& draft, const CopyStructure& structure);

std::string validate_provider(const ProviderConfig& config);

UseCaseSpec load_usecase(const std::string& path);

void to_json(Json& j, const CopyStructure& v);
void from_json(const Json& j, CopyStructure& v);
void to_json(Json& j, const LengthConstraint& v);
void from_json(const Json& j, LengthConstraint& v);
void to_json(Json& j, const LexicalPref& v);
void from_json(const Json& j, LexicalPref& v);
void to_json(Json& j, const FewShotExample& v);
void from_json(const Json& j, FewShotExample& v);
void to_json(Json& j, const JudgedCriterion& v);
void from_json(const Json& j, JudgedCriterion& v);
void to_json(Json& j, const ConstraintSet& v);
void from_json(const Json& j, ConstraintSet& v);
void to_json(Json& j, const EvaluatorStep& v);
void from_json(const Json& j, EvaluatorStep& v);
void to_json(Json& j, const EvaluatorPlan& v);
void from_json(const Json& j, EvaluatorPlan& v);
void to_json(Json& j, const PromptFragments& v);
void from_json(const Json& j, PromptFragments& v);
void to_json(Json& j, const PersonaSpec& v);
void from_json(const Json& j, PersonaSpec& v);
void to_json(Json& j, const FormatRule& v);
void from_json(const Json& j, FormatRule& v);
void to_json(Json& j, const UseCaseSpec& v);
void from_json(const Json& j, UseCaseSpec& v);
void to_json(Json& j, const CopyDraft& v);
void from_json(const Json& j, CopyDraft& v);
void to_json(Json& j, const FeedbackRecord& v);
void from_json(const Json& j, FeedbackRecord& v);
void to_json(Json& j, const EvaluationOutcome& v);
void from_json(const Json& j, EvaluationOutcome& v);
void to_json(Json& j, const ProviderConfig& v);
void from_json(const Json& j, ProviderConfig& v);
void to_json(Json& j, const Violation& v);
void to_json(Json& j, const ValidationReport& v);

// Enum mappings reject unknown strings instead of defaulting.
void to_json(Json& j, const CriterionKind& v);
void from_json(const Json& j, CriterionKind& v);
void to_json(Json& j, const StepType& v);
void from_json(const Json& j, StepType& v);
void to_json(Json& j, const FormatRuleId& v);
void from_json(const Json& j, FormatRuleId& v);
void to_json(Json& j, const ProviderKind& v);
void from_json(const Json& j, ProviderKind& v);

}  // namespace copygen
