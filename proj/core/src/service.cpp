#include "copygen/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "copygen/diversity.hpp"
#include "copygen/metrics.hpp"
#include "copygen/taxonomy.hpp"

namespace copygen {

namespace detail {
std::string_view openapi_asset();
}

struct Service::Server {
  httplib::Server http;
};

namespace {

ApiResponse json_response(int status, Json body) { return ApiResponse{status, std::move(body), {}, "application/json"}; }

ApiResponse error(int status, const std::string& message, Json extra = Json::object()) {
  Json body{{"error", message}};
  for (auto& [k, v] : extra.items()) body[k] = v;
  return json_response(status, std::move(body));
}

std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<Json> parse_body(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace

Json openapi_document() {
  static const Json doc = Json::parse(detail::openapi_asset());
  return doc;
}

void from_json(const Json& j, ServiceConfig& v) {
  v.data_dir = j.value("data_dir", std::string());
  v.usecase_dir = j.value("usecase_dir", std::string());
  v.bind_address = j.value("bind_address", std::string("127.0.0.1"));
  v.port = j.value("port", 8080);
  if (j.contains("token") && j["token"].is_string()) v.token = j["token"].get<std::string>();
  v.ui_dir = j.value("ui_dir", std::string());
  v.workers = j.value("workers", 2);
  if (j.contains("providers")) {
    for (const auto& [name, cfg] : j["providers"].items()) v.providers[name] = cfg.get<ProviderConfig>();
  }
}

ServiceConfig load_service_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Json j;
  in >> j;
  auto cfg = j.get<ServiceConfig>();
  // Relative paths resolve against the config file's directory.
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(cfg.data_dir);
  resolve(cfg.usecase_dir);
  resolve(cfg.ui_dir);
  for (auto& [name, provider] : cfg.providers) {
    if (!provider.transcript_path.empty() && std::filesystem::path(provider.transcript_path).is_relative()) {
      provider.transcript_path = (base / provider.transcript_path).string();
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  store_ = config_.data_dir.empty() ? std::make_unique<EventStore>()
                                    : std::make_unique<EventStore>(config_.data_dir / "jobs");
  std::vector<std::filesystem::path> dirs;
  if (!config_.usecase_dir.empty()) dirs.push_back(config_.usecase_dir);
  if (!config_.data_dir.empty() && std::filesystem::is_directory(config_.data_dir / "usecases")) {
    dirs.push_back(config_.data_dir / "usecases");
  }
  for (const auto& dir : dirs) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        auto spec = load_usecase(f.string());
        usecases_[spec.usecase_id] = std::move(spec);
      } catch (const std::exception& e) {
        spdlog::warn("skipping use case {}: {}", f.string(), e.what());
      }
    }
  }
  for (const auto& job : store_->jobs()) {
    JobRecord rec;
    rec.job_id = job;
    rec.status = "completed";
    const auto lineages = store_->lineages(job);
    if (!lineages.empty()) rec.usecase_id = lineages.front().usecase_id;
    rec.done = rec.total = static_cast<int>(lineages.size());
    jobs_[job] = std::move(rec);
  }
}

Service::~Service() {
  stop();
  job_threads_.clear();  // joins
}

std::optional<UseCaseSpec> Service::find_usecase(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = usecases_.find(id);
  if (it == usecases_.end()) return std::nullopt;
  return it->second;
}

std::string Service::next_job_id() {
  while (true) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%04d", ++job_counter_);
    std::lock_guard lock(mu_);
    if (!jobs_.contains(buf)) return buf;
  }
}

ApiResponse Service::handle(const ApiRequest& r) {
  if (config_.token && r.path.rfind("/api/", 0) == 0) {
    auto it = r.headers.find(std::string(kTokenHeader));
    if (it == r.headers.end() || it->second != *config_.token) return error(401, "missing or wrong token");
  }
  static const std::regex usecase_re("^/api/usecases/([^/]+)$");
  static const std::regex job_re("^/api/jobs/([^/]+)$");
  static const std::regex copy_re("^/api/copies/([^/]+)$");
  static const std::regex review_re("^/api/copies/([^/]+)/review$");
  static const std::regex report_re("^/api/reports/([^/]+)$");
  std::smatch m;
  const auto& p = r.path;
  try {
    if (r.method == "GET") {
      if (p == "/api/health") return json_response(200, {{"status", "ok"}});
      if (p == "/api/openapi.json") return json_response(200, openapi_document());
      if (p == "/api/taxonomy") {
        Json reasons = Json::array();
        for (const auto& info : reason_taxonomy()) {
          const char* source = info.source == ReasonSource::evaluator ? "evaluator"
                               : info.source == ReasonSource::judge   ? "judge"
                                                                      : "review";
          reasons.push_back({{"code", info.code}, {"source", source}, {"description", info.description}});
        }
        return json_response(200, {{"version", reason::kTaxonomyVersion},
                                   {"reasons", reasons},
                                   {"review_reason_codes", review_reason_codes()}});
      }
      if (p == "/api/usecases") return list_usecases();
      if (std::regex_match(p, m, usecase_re)) return get_usecase(m[1]);
      if (p == "/api/jobs") return list_jobs();
      if (std::regex_match(p, m, job_re)) return get_job(m[1]);
      if (p == "/api/copies") return list_copies(r);
      if (std::regex_match(p, m, copy_re)) return get_copy(m[1]);
      if (p == "/api/select") return select(r);
      if (std::regex_match(p, m, report_re)) return report(m[1], r);
    } else if (r.method == "POST") {
      if (p == "/api/usecases") return register_usecase(r);
      if (p == "/api/jobs") return submit_job(r);
      if (std::regex_match(p, m, review_re)) return review_copy(m[1], r);
    }
  } catch (const StorageFailure& e) {
    return error(500, e.what());
  }
  return error(404, "no route for " + r.method + " " + p);
}

ApiResponse Service::register_usecase(const ApiRequest& r) {
  auto body = parse_body(r.body);
  if (!body) return error(422, "body is not JSON");
  UseCaseSpec spec;
  try {
    spec = body->get<UseCaseSpec>();
  } catch (const std::exception& e) {
    return error(422, std::string("malformed use case: ") + e.what());
  }
  const auto report = validate_usecase(spec);
  if (!report.ok()) {
    return error(422, "use case failed validation", Json{{"violations", Json(report)["violations"]}});
  }
  if (!config_.data_dir.empty()) {
    const auto dir = config_.data_dir / "usecases";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / (spec.usecase_id + ".json")) << Json(spec).dump(2) << "\n";
  }
  const auto id = spec.usecase_id;
  {
    std::lock_guard lock(mu_);
    usecases_[id] = std::move(spec);
  }
  return json_response(201, {{"usecase_id", id}});
}

ApiResponse Service::list_usecases() {
  std::lock_guard lock(mu_);
  Json ids = Json::array();
  for (const auto& [id, spec] : usecases_) ids.push_back(id);
  return json_response(200, {{"usecases", ids}});
}

ApiResponse Service::get_usecase(const std::string& id) {
  auto spec = find_usecase(id);
  if (!spec) return error(404, "unknown use case '" + id + "'");
  return json_response(200, Json(*spec));
}

ApiResponse Service::submit_job(const ApiRequest& r) {
  auto body = parse_body(r.body);
  if (!body || !body->is_object()) return error(422, "body must be a JSON object");
  JobRequest req;
  std::string usecase_id;
  std::string provider_name = "default";
  try {
    usecase_id = body->at("usecase_id").get<std::string>();
    req.total = body->at("total").get<int>();
    req.batch_size = body->value("batch_size", 10);
    req.max_refines = body->value("max_refines", 1);
    provider_name = body->value("provider", provider_name);
    req.job_id = body->value("job_id", std::string());
  } catch (const Json::exception& e) {
    return error(422, std::string("malformed job request: ") + e.what());
  }
  req.workers = config_.workers;
  if (req.max_refines > kMaxApiRefines) {
    return error(422, "max_refines (J) must be at most " + std::to_string(kMaxApiRefines));
  }
  auto spec = find_usecase(usecase_id);
  if (!spec) return error(404, "unknown use case '" + usecase_id + "'");
  auto provider = config_.providers.find(provider_name);
  if (provider == config_.providers.end()) return error(422, "unknown provider profile '" + provider_name + "'");
  if (auto err = validate_provider(provider->second); !err.empty()) return error(422, err);
  {
    std::lock_guard lock(mu_);
    if (!req.job_id.empty() && jobs_.contains(req.job_id)) return error(409, "job '" + req.job_id + "' exists");
  }
  if (req.job_id.empty()) req.job_id = next_job_id();
  if (auto err = validate_job_request(req); !err.empty()) return error(422, err);

  std::unique_ptr<Gateway> gateway;
  try {
    gateway = make_gateway(provider->second);
  } catch (const std::exception& e) {
    return error(422, std::string("provider unavailable: ") + e.what());
  }
  {
    std::lock_guard lock(mu_);
    JobRecord rec;
    rec.job_id = req.job_id;
    rec.usecase_id = usecase_id;
    rec.total = req.total;
    jobs_[req.job_id] = std::move(rec);
    job_threads_.emplace_back([this, req, spec = *spec, gw = std::shared_ptr<Gateway>(std::move(gateway))] {
      {
        std::lock_guard lock(mu_);
        jobs_[req.job_id].status = "running";
      }
      try {
        auto summary = run_job(spec, req, *gw, *store_, [this, id = req.job_id](int done, int total) {
          std::lock_guard lock(mu_);
          jobs_[id].done = done;
          jobs_[id].total = total;
        });
        std::lock_guard lock(mu_);
        jobs_[req.job_id].summary = std::move(summary);
        jobs_[req.job_id].status = "completed";
      } catch (const std::exception& e) {
        spdlog::error("job {} failed: {}", req.job_id, e.what());
        std::lock_guard lock(mu_);
        jobs_[req.job_id].status = "failed";
        jobs_[req.job_id].error = e.what();
      }
    });
  }
  return json_response(202, {{"job_id", req.job_id}, {"status", "queued"}});
}

ApiResponse Service::list_jobs() {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, rec] : jobs_) ids.push_back(id);
  }
  Json jobs = Json::array();
  for (const auto& id : ids) jobs.push_back(get_job(id).body);
  return json_response(200, {{"jobs", jobs}});
}

ApiResponse Service::get_job(const std::string& id) {
  JobRecord rec;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return error(404, "unknown job '" + id + "'");
    rec = it->second;
  }
  Json body{{"job_id", rec.job_id},
            {"usecase_id", rec.usecase_id},
            {"status", rec.status},
            {"progress", {{"done", rec.done}, {"total", rec.total}}}};
  if (!rec.error.empty()) body["error"] = rec.error;
  const auto lineages = store_->lineages(id);
  Json states = Json::object();
  for (const auto& l : lineages) states[to_string(l.state)] = states.value(to_string(l.state), 0) + 1;
  body["states"] = states;
  body["copies"] = lineages.size();
  if (!lineages.empty()) body["rates"] = success_rate(lineages);
  if (rec.summary) body["summary"] = *rec.summary;
  return json_response(200, body);
}

ApiResponse Service::list_copies(const ApiRequest& r) {
  LineageFilter filter;
  if (auto it = r.query.find("job_id"); it != r.query.end() && !it->second.empty()) filter.job_id = it->second;
  if (auto it = r.query.find("usecase_id"); it != r.query.end() && !it->second.empty()) filter.usecase_id = it->second;
  if (auto it = r.query.find("state"); it != r.query.end() && !it->second.empty()) {
    filter.state = copy_state_from_string(it->second);
    if (!filter.state) return error(422, "unknown state '" + it->second + "'");
  }
  return json_response(200, {{"copies", store_->query(filter)}});
}

ApiResponse Service::get_copy(const std::string& id) {
  try {
    const auto lineage = store_->replay(id);
    Json body = lineage;
    body["evaluations"] = lineage.evaluations();
    return json_response(200, body);
  } catch (const NotFound& e) {
    return error(404, e.what());
  }
}

ApiResponse Service::review_copy(const std::string& id, const ApiRequest& r) {
  auto body = parse_body(r.body);
  if (!body || !body->is_object()) return error(422, "body must be a JSON object");
  const auto verdict = body->value("verdict", std::string());
  if (verdict != "approve" && verdict != "reject") return error(422, "verdict must be approve or reject");
  Json payload{{"verdict", verdict}};
  if (body->contains("reason_code")) {
    if (!(*body)["reason_code"].is_string()) return error(422, "reason_code must be a string");
    const auto code = (*body)["reason_code"].get<std::string>();
    const auto codes = review_reason_codes();
    if (std::find(codes.begin(), codes.end(), code) == codes.end()) {
      return error(422, "unknown review reason_code '" + code + "'");
    }
    payload["reason_code"] = code;
  }
  if (body->contains("note")) {
    if (!(*body)["note"].is_string()) return error(422, "note must be a string");
    payload["note"] = (*body)["note"];
  }
  CopyLineage lineage;
  try {
    lineage = store_->replay(id);
  } catch (const NotFound& e) {
    return error(404, e.what());
  }
  LineageEvent event;
  event.copy_id = id;
  event.job_id = lineage.job_id;
  event.kind = EventKind::HumanReviewRecorded;
  event.payload = payload;
  event.plan_version = lineage.events.back().plan_version;
  try {
    store_->append(std::move(event));
  } catch (const SequenceViolation& e) {
    return error(409, e.what(), Json{{"state", to_string(store_->replay(id).state)}});
  }
  return json_response(200, {{"copy_id", id}, {"state", to_string(store_->replay(id).state)}});
}

ApiResponse Service::select(const ApiRequest& r) {
  auto job = r.query.find("job_id");
  auto k_it = r.query.find("k");
  if (job == r.query.end() || job->second.empty()) return error(422, "job_id is required");
  if (k_it == r.query.end()) return error(422, "k is required");
  const auto k = parse_int(k_it->second);
  if (!k || *k < 1) return error(422, "k must be a positive integer");
  const auto lineages = store_->lineages(job->second);
  if (lineages.empty()) return error(404, "unknown job '" + job->second + "'");

  const auto spec = find_usecase(lineages.front().usecase_id);
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  for (const auto& l : lineages) {
    if (l.state != CopyState::pending_human_review && l.state != CopyState::accepted) continue;
    CopyDraft d;
    d.components = l.components;
    std::string joined;
    if (spec) {
      joined = d.joined(spec->structure);
    } else {
      for (const auto& [name, value] : l.components) joined += (joined.empty() ? "" : " ") + value;
    }
    ids.push_back(l.copy_id);
    texts.push_back(std::move(joined));
  }
  Json chosen = Json::array();
  if (!texts.empty()) {
    for (auto i : select_diverse(texts, static_cast<std::size_t>(*k))) chosen.push_back(ids[i]);
  }
  return json_response(200, {{"job_id", job->second}, {"k", *k}, {"candidates", texts.size()}, {"copy_ids", chosen}});
}

ApiResponse Service::report(const std::string& job_id, const ApiRequest& r) {
  const auto lineages = store_->lineages(job_id);
  if (lineages.empty()) return error(404, "unknown job '" + job_id + "'");
  const auto rep = build_report(lineages, job_id);
  if (auto it = r.query.find("format"); it != r.query.end() && it->second == "text") {
    return ApiResponse{200, Json(), render_report(rep), "text/plain; charset=utf-8"};
  }
  return json_response(200, Json(rep));
}

void Service::wait_for_jobs() {
  while (true) {
    {
      std::lock_guard lock(mu_);
      const bool busy = std::any_of(jobs_.begin(), jobs_.end(), [](const auto& kv) {
        return kv.second.status == "queued" || kv.second.status == "running";
      });
      if (!busy) return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

// ---------------------------------------------------------------------------
// Transport

namespace {

void bridge(Service& service, const httplib::Request& req, httplib::Response& res) {
  ApiRequest r;
  r.method = req.method;
  r.path = req.path;
  r.body = req.body;
  for (const auto& [k, v] : req.params) r.query[k] = v;
  for (const auto& [k, v] : req.headers) r.headers[k] = v;
  auto out = service.handle(r);
  res.status = out.status;
  if (out.content_type == "application/json") {
    res.set_content(out.body.dump(), "application/json");
  } else {
    res.set_content(out.text, out.content_type);
  }
}

}  // namespace

int Service::start() {
  if (server_) throw std::logic_error("service already started");
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  http.Get(R"(/api/.*)", [this](const httplib::Request& q, httplib::Response& s) { bridge(*this, q, s); });
  http.Post(R"(/api/.*)", [this](const httplib::Request& q, httplib::Response& s) { bridge(*this, q, s); });
  if (!config_.ui_dir.empty() && !http.set_mount_point("/", config_.ui_dir.string())) {
    spdlog::warn("review UI directory {} not found; not serving it", config_.ui_dir.string());
  }
  int port = config_.port;
  if (port == 0) {
    port = http.bind_to_any_port(config_.bind_address);
  } else if (!http.bind_to_port(config_.bind_address, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw std::runtime_error("cannot bind " + config_.bind_address + ":" + std::to_string(config_.port));
  }
  server_thread_ = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  spdlog::info("listening on {}:{}", config_.bind_address, port);
  return port;
}

void Service::listen() {
  start();
  server_thread_.join();
}

void Service::stop() {
  if (server_) server_->http.stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace copygen
