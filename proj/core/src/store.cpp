#include "copygen/store.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>

#include <fcntl.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

namespace copygen {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kEventNames = {{
    {EventKind::CopyGenerated, "CopyGenerated"},
    {EventKind::CopyFormatted, "CopyFormatted"},
    {EventKind::EvaluationRecorded, "EvaluationRecorded"},
    {EventKind::RefinementRequested, "RefinementRequested"},
    {EventKind::CopyRefined, "CopyRefined"},
    {EventKind::CopyDiscarded, "CopyDiscarded"},
    {EventKind::SentToHumanReview, "SentToHumanReview"},
    {EventKind::HumanReviewRecorded, "HumanReviewRecorded"},
}};

constexpr std::array<std::pair<CopyState, std::string_view>, 7> kStateNames = {{
    {CopyState::generating, "generating"},
    {CopyState::evaluating, "evaluating"},
    {CopyState::refining, "refining"},
    {CopyState::pending_human_review, "pending_human_review"},
    {CopyState::accepted, "accepted"},
    {CopyState::discarded, "discarded"},
    {CopyState::human_rejected, "human_rejected"},
}};

constexpr std::string_view kLogSuffix = ".events.jsonl";

[[noreturn]] void violation(const CopyLineage& l, const LineageEvent& e, const std::string& why) {
  throw SequenceViolation(to_string(e.kind) + " on copy '" + e.copy_id + "' in state " +
                          (l.events.empty() ? std::string("<new>") : to_string(l.state)) + ": " + why);
}

std::map<std::string, std::string> components_of(const CopyLineage& l, const LineageEvent& e) {
  auto it = e.payload.find("components");
  if (it == e.payload.end() || !it->is_object() || it->empty()) violation(l, e, "payload.components missing");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : it->items()) {
    if (!v.is_string()) violation(l, e, "component '" + k + "' is not a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

std::string string_field(const Json& payload, const char* key) {
  auto it = payload.find(key);
  return (it != payload.end() && it->is_string()) ? it->get<std::string>() : std::string();
}

}  // namespace

std::string to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return std::string(name);
  }
  return "unknown";
}

std::string to_string(CopyState state) {
  for (const auto& [s, name] : kStateNames) {
    if (s == state) return std::string(name);
  }
  return "unknown";
}

std::optional<CopyState> copy_state_from_string(std::string_view s) {
  for (const auto& [state, name] : kStateNames) {
    if (name == s) return state;
  }
  return std::nullopt;
}

bool is_terminal(CopyState state) {
  return state == CopyState::pending_human_review || state == CopyState::accepted ||
         state == CopyState::discarded || state == CopyState::human_rejected;
}

bool passed_evaluations(CopyState state) {
  return state == CopyState::pending_human_review || state == CopyState::accepted ||
         state == CopyState::human_rejected;
}

void to_json(Json& j, const EventKind& v) { j = to_string(v); }

void from_json(const Json& j, EventKind& v) {
  const auto s = j.get<std::string>();
  for (const auto& [k, name] : kEventNames) {
    if (name == s) {
      v = k;
      return;
    }
  }
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

void to_json(Json& j, const LineageEvent& v) {
  j = Json{{"event_id", v.event_id}, {"timestamp", v.timestamp}, {"copy_id", v.copy_id},
           {"job_id", v.job_id},     {"kind", v.kind},           {"payload", v.payload},
           {"plan_version", v.plan_version}};
}

void from_json(const Json& j, LineageEvent& v) {
  j.at("event_id").get_to(v.event_id);
  v.timestamp = j.value("timestamp", std::string());
  j.at("copy_id").get_to(v.copy_id);
  j.at("job_id").get_to(v.job_id);
  j.at("kind").get_to(v.kind);
  v.payload = j.value("payload", Json::object());
  v.plan_version = j.value("plan_version", 1);
}

std::vector<EvaluationOutcome> CopyLineage::evaluations() const {
  std::vector<EvaluationOutcome> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::EvaluationRecorded) out.push_back(e.payload.at("outcome").get<EvaluationOutcome>());
  }
  return out;
}

bool CopyLineage::passed_first_evaluation() const {
  for (const auto& e : events) {
    if (e.kind == EventKind::EvaluationRecorded && !e.payload.at("outcome").at("pass").get<bool>()) return false;
    if (e.kind == EventKind::SentToHumanReview) return true;
  }
  return false;
}

std::optional<EvaluationOutcome> CopyLineage::first_failure() const {
  for (const auto& e : events) {
    if (e.kind == EventKind::EvaluationRecorded && !e.payload.at("outcome").at("pass").get<bool>()) {
      return e.payload.at("outcome").get<EvaluationOutcome>();
    }
  }
  return std::nullopt;
}

std::optional<EvaluationOutcome> CopyLineage::last_failure() const {
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if (it->kind == EventKind::EvaluationRecorded && !it->payload.at("outcome").at("pass").get<bool>()) {
      return it->payload.at("outcome").get<EvaluationOutcome>();
    }
  }
  return std::nullopt;
}

void to_json(Json& j, const CopyLineage& v) {
  j = Json{{"copy_id", v.copy_id},
           {"job_id", v.job_id},
           {"usecase_id", v.usecase_id},
           {"refine_count", v.refine_count},
           {"max_refines", v.max_refines},
           {"state", to_string(v.state)},
           {"components", v.components},
           {"events", v.events}};
  if (!v.discard_reason.empty()) j["discard_reason"] = v.discard_reason;
  if (v.review) j["review"] = *v.review;
}

void to_json(Json& j, const LineageSummary& v) {
  j = Json{{"copy_id", v.copy_id},
           {"job_id", v.job_id},
           {"usecase_id", v.usecase_id},
           {"state", to_string(v.state)},
           {"refine_count", v.refine_count},
           {"max_refines", v.max_refines},
           {"components", v.components}};
}

void apply_event(CopyLineage& lineage, const LineageEvent& e) {
  const CopyLineage& l = lineage;
  if (e.copy_id.empty()) violation(l, e, "empty copy_id");
  if (!e.payload.is_object()) violation(l, e, "payload must be an object");

  if (l.events.empty()) {
    if (e.kind != EventKind::CopyGenerated) violation(l, e, "a lineage must start with CopyGenerated");
    if (e.job_id.empty()) violation(l, e, "empty job_id");
    const auto usecase = string_field(e.payload, "usecase_id");
    if (usecase.empty()) violation(l, e, "payload.usecase_id missing");
    auto mr = e.payload.find("max_refines");
    if (mr == e.payload.end() || !mr->is_number_integer() || mr->get<int>() < 0) {
      violation(l, e, "payload.max_refines must be a non-negative integer");
    }
    auto comps = components_of(l, e);
    lineage.copy_id = e.copy_id;
    lineage.job_id = e.job_id;
    lineage.usecase_id = usecase;
    lineage.max_refines = mr->get<int>();
    lineage.components = std::move(comps);
    lineage.state = CopyState::generating;
    lineage.events.push_back(e);
    return;
  }

  if (e.copy_id != l.copy_id) violation(l, e, "event belongs to another copy");
  if (e.job_id != l.job_id) violation(l, e, "job_id changed within a lineage");
  if (e.event_id <= l.events.back().event_id) violation(l, e, "event_id not increasing");

  CopyLineage next = l;
  switch (e.kind) {
    case EventKind::CopyGenerated:
      violation(l, e, "copy already generated");

    case EventKind::CopyFormatted:
      if (l.state != CopyState::generating) violation(l, e, "nothing to format");
      next.components = components_of(l, e);
      next.state = CopyState::evaluating;
      next.round_failed = false;
      next.evaluations_in_round = 0;
      break;

    case EventKind::EvaluationRecorded: {
      if (l.state != CopyState::evaluating) violation(l, e, "copy is not being evaluated");
      if (l.round_failed) violation(l, e, "evaluation after a failure in the same round");
      auto it = e.payload.find("outcome");
      if (it == e.payload.end() || !it->is_object()) violation(l, e, "payload.outcome missing");
      EvaluationOutcome outcome;
      try {
        outcome = it->get<EvaluationOutcome>();
      } catch (const std::exception& ex) {
        violation(l, e, std::string("malformed outcome: ") + ex.what());
      }
      if (outcome.pass != outcome.feedback.is_pass()) violation(l, e, "verdict and feedback disagree");
      next.round_failed = !outcome.pass;
      ++next.evaluations_in_round;
      break;
    }

    case EventKind::RefinementRequested:
      if (l.state != CopyState::evaluating || !l.round_failed) violation(l, e, "no failed evaluation to refine");
      if (l.refine_count >= l.max_refines) violation(l, e, "refine budget exhausted");
      next.state = CopyState::refining;
      break;

    case EventKind::CopyRefined:
      if (l.state != CopyState::refining) violation(l, e, "no refinement was requested");
      next.components = components_of(l, e);
      ++next.refine_count;
      next.state = CopyState::generating;
      break;

    case EventKind::SentToHumanReview:
      if (l.state != CopyState::evaluating || l.round_failed || l.evaluations_in_round == 0) {
        violation(l, e, "copy has not passed a full evaluation round");
      }
      next.state = CopyState::pending_human_review;
      break;

    case EventKind::CopyDiscarded: {
      const auto reason = string_field(e.payload, "reason");
      if (reason == discard_reason::kRefineBudgetExhausted) {
        if (l.state != CopyState::evaluating || !l.round_failed) violation(l, e, "last evaluation did not fail");
        if (l.refine_count != l.max_refines) violation(l, e, "refine budget not exhausted");
      } else if (reason == discard_reason::kProviderFailure || reason == discard_reason::kParseFailure) {
        if (is_terminal(l.state)) violation(l, e, "copy already terminal");
      } else {
        violation(l, e, "unknown discard reason '" + reason + "'");
      }
      next.discard_reason = reason;
      next.state = CopyState::discarded;
      break;
    }

    case EventKind::HumanReviewRecorded: {
      if (l.state != CopyState::pending_human_review) violation(l, e, "copy is not awaiting review");
      const auto verdict = string_field(e.payload, "verdict");
      if (verdict == "approve") {
        next.state = CopyState::accepted;
      } else if (verdict == "reject") {
        next.state = CopyState::human_rejected;
      } else {
        violation(l, e, "verdict must be approve or reject");
      }
      next.review = e.payload;
      break;
    }
  }
  next.events.push_back(e);
  lineage = std::move(next);
}

CopyLineage fold_events(const std::vector<LineageEvent>& events) {
  CopyLineage lineage;
  for (const auto& e : events) apply_event(lineage, e);
  return lineage;
}

std::string now_rfc3339() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// ---------------------------------------------------------------------------
// EventStore

EventStore::EventStore() = default;

EventStore::EventStore(const std::filesystem::path& dir) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StorageFailure("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > kLogSuffix.size() && name.ends_with(kLogSuffix)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  writers_enabled_ = false;
  for (const auto& f : files) load_file(f);
  writers_enabled_ = true;
}

EventStore::~EventStore() {
  for (auto& [job, fp] : writers_) std::fclose(fp);
}

std::filesystem::path EventStore::log_path(const std::filesystem::path& dir, const std::string& job_id) {
  return dir / (job_id + std::string(kLogSuffix));
}

void EventStore::load_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StorageFailure("cannot read " + file.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t complete_end = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail: never acknowledged
    const std::string_view line(content.data() + pos, nl - pos);
    ++line_no;
    const auto where = file.string() + ":" + std::to_string(line_no);
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw StorageFailure(where + ": malformed JSON line");
    if (line_no == 1) {
      if (!j.is_object() || j.value("schema", std::string()) != kLineageSchema) {
        throw StorageFailure(where + ": missing lineage/1 schema header");
      }
    } else {
      try {
        append_locked(j.get<LineageEvent>());
      } catch (const SequenceViolation& e) {
        throw StorageFailure(where + ": " + e.what());
      } catch (const Json::exception& e) {
        throw StorageFailure(where + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw StorageFailure(where + ": " + e.what());
      }
    }
    pos = nl + 1;
    complete_end = pos;
  }
  if (complete_end < content.size()) {
    spdlog::warn("{}: dropping {} bytes of torn trailing line", file.string(), content.size() - complete_end);
    std::filesystem::resize_file(file, complete_end);
  }
}

std::FILE* EventStore::writer_for(const std::string& job_id) {
  if (auto it = writers_.find(job_id); it != writers_.end()) return it->second;
  const auto path = log_path(*dir_, job_id);
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::FILE* fp = std::fopen(path.c_str(), "ab");
  if (!fp) throw StorageFailure("cannot open " + path.string() + " for append");
  if (fresh) {
    const std::string header = Json{{"schema", kLineageSchema}}.dump() + "\n";
    if (std::fwrite(header.data(), 1, header.size(), fp) != header.size() || std::fflush(fp) != 0) {
      std::fclose(fp);
      throw StorageFailure("cannot write header to " + path.string());
    }
  }
  writers_[job_id] = fp;
  return fp;
}

std::uint64_t EventStore::append_locked(LineageEvent event) {
  if (event.event_id == 0) event.event_id = last_event_id_ + 1;
  if (event_ids_.contains(event.event_id)) {
    throw SequenceViolation("duplicate event_id " + std::to_string(event.event_id));
  }
  if (event.timestamp.empty()) event.timestamp = now_rfc3339();

  auto it = copies_.find(event.copy_id);
  CopyLineage candidate = it == copies_.end() ? CopyLineage{} : it->second;
  apply_event(candidate, event);

  if (dir_ && writers_enabled_) {
    std::FILE* fp = writer_for(event.job_id);
    const std::string line = Json(event).dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), fp) != line.size() || std::fflush(fp) != 0 ||
        ::fsync(::fileno(fp)) != 0) {
      throw StorageFailure("append to job log " + event.job_id + " failed");
    }
  }
  copies_[event.copy_id] = std::move(candidate);
  event_ids_.insert(event.event_id);
  last_event_id_ = std::max(last_event_id_, event.event_id);
  return event.event_id;
}

std::uint64_t EventStore::append(LineageEvent event) {
  std::unique_lock lock(mu_);
  return append_locked(std::move(event));
}

void EventStore::append_all(std::vector<LineageEvent> events) {
  std::unique_lock lock(mu_);
  for (auto& e : events) append_locked(std::move(e));
}

CopyLineage EventStore::replay(const std::string& copy_id) const {
  std::shared_lock lock(mu_);
  auto it = copies_.find(copy_id);
  if (it == copies_.end()) throw NotFound("unknown copy '" + copy_id + "'");
  // Fold from scratch so replay never depends on the cached index.
  return fold_events(it->second.events);
}

bool EventStore::contains(const std::string& copy_id) const {
  std::shared_lock lock(mu_);
  return copies_.contains(copy_id);
}

std::vector<LineageSummary> EventStore::query(const LineageFilter& filter) const {
  std::shared_lock lock(mu_);
  std::vector<LineageSummary> out;
  for (const auto& [id, l] : copies_) {
    if (filter.job_id && l.job_id != *filter.job_id) continue;
    if (filter.state && l.state != *filter.state) continue;
    if (filter.usecase_id && l.usecase_id != *filter.usecase_id) continue;
    out.push_back({l.copy_id, l.job_id, l.usecase_id, l.state, l.refine_count, l.max_refines, l.components});
  }
  return out;
}

std::vector<CopyLineage> EventStore::lineages(const std::optional<std::string>& job_id) const {
  std::shared_lock lock(mu_);
  std::vector<CopyLineage> out;
  for (const auto& [id, l] : copies_) {
    if (!job_id || l.job_id == *job_id) out.push_back(l);
  }
  return out;
}

std::vector<std::string> EventStore::jobs() const {
  std::shared_lock lock(mu_);
  std::set<std::string> ids;
  for (const auto& [id, l] : copies_) ids.insert(l.job_id);
  return {ids.begin(), ids.end()};
}

std::map<std::string, std::vector<std::string>> EventStore::human_rejections_by_reason(
    const std::optional<std::string>& job_id) const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, l] : copies_) {
    if (job_id && l.job_id != *job_id) continue;
    if (l.state != CopyState::human_rejected || !l.review) continue;
    auto code = string_field(*l.review, "reason_code");
    out[code.empty() ? "unspecified" : code].push_back(id);
  }
  return out;
}

}  // namespace copygen
