#include "doctest.h"

#include <fstream>
#include <unistd.h>

#include <httplib.h>

#include "copygen/service.hpp"
#include "copygen/taxonomy.hpp"
#include "fixtures.hpp"

using namespace copygen;
namespace fs = std::filesystem;

namespace {

ApiResponse call(Service& s, const std::string& method, const std::string& path, const Json& body = nullptr,
                 std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = method;
  r.path = path;
  r.query = std::move(query);
  if (!body.is_null()) r.body = body.dump();
  return s.handle(r);
}

ServiceConfig base_config() {
  ServiceConfig c;
  c.usecase_dir = fixtures::config_dir() / "usecases";
  c.port = 0;
  return c;
}

// Loads the ablation fixture job into the service's store.
void load_ablation(Service& s) {
  const auto row = fixtures::ablation_row();
  fixtures::run(fixtures::build_row(row, row.name), s.store(), 4);
}

std::string first_in_state(Service& s, const std::string& job, const std::string& state) {
  const auto r = call(s, "GET", "/api/copies", nullptr, {{"job_id", job}, {"state", state}});
  REQUIRE(r.status == 200);
  REQUIRE(!r.body["copies"].empty());
  return r.body["copies"][0]["copy_id"];
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("copygen-service-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("health, schema and taxonomy") {
  Service s(base_config());
  CHECK(call(s, "GET", "/api/health").status == 200);
  const auto doc = call(s, "GET", "/api/openapi.json");
  CHECK(doc.body["openapi"].get<std::string>().rfind("3.0", 0) == 0);
  CHECK(doc.body["paths"].contains("/api/copies/{id}/review"));
  const auto tax = call(s, "GET", "/api/taxonomy");
  CHECK(tax.body["version"] == "reasons/1");
  CHECK(!tax.body["review_reason_codes"].empty());
  bool has_length = false;
  for (const auto& r : tax.body["reasons"]) has_length |= r["code"] == "length.exceeded";
  CHECK(has_length);
  CHECK(call(s, "GET", "/api/nothing").status == 404);
  CHECK(call(s, "DELETE", "/api/jobs").status == 404);
}

TEST_CASE("use case registration") {
  Service s(base_config());
  const auto list = call(s, "GET", "/api/usecases");
  CHECK(list.body["usecases"].size() == 6);
  auto spec = Json(fixtures::load_config("campaign-a-free-delivery"));
  spec["usecase_id"] = "fresh";
  CHECK(call(s, "POST", "/api/usecases", spec).status == 201);
  CHECK(call(s, "GET", "/api/usecases/fresh").body["usecase_id"] == "fresh");
  spec["constraints"]["judged_criteria"].push_back({{"criterion_id", "c"}, {"kind", "coherence"}, {"rubric_text", "x"}});
  const auto bad = call(s, "POST", "/api/usecases", spec);
  CHECK(bad.status == 422);
  CHECK(!bad.body["violations"].empty());
  ApiRequest garbage{"POST", "/api/usecases", {}, {}, "{nope"};
  CHECK(s.handle(garbage).status == 422);
  CHECK(call(s, "GET", "/api/usecases/missing").status == 404);
}

TEST_CASE("report, copies and review on the ablation job") {
  Service s(base_config());
  load_ablation(s);
  const auto rep = call(s, "GET", "/api/reports/campaign-a-persona");
  REQUIRE(rep.status == 200);
  const auto dumped = rep.body.dump();
  CHECK(dumped.find("24.76") != std::string::npos);
  CHECK(dumped.find("38.33") != std::string::npos);
  const auto text = call(s, "GET", "/api/reports/campaign-a-persona", nullptr, {{"format", "text"}});
  CHECK(text.content_type.rfind("text/plain", 0) == 0);
  CHECK(text.text.find("38.33") != std::string::npos);
  CHECK(call(s, "GET", "/api/reports/none").status == 404);

  const auto pending = first_in_state(s, "campaign-a-persona", "pending_human_review");
  const auto discarded = first_in_state(s, "campaign-a-persona", "discarded");
  CHECK(call(s, "GET", "/api/copies", nullptr, {{"state", "bogus"}}).status == 422);

  SUBCASE("approve") {
    const auto r = call(s, "POST", "/api/copies/" + pending + "/review", {{"verdict", "approve"}});
    CHECK(r.status == 200);
    CHECK(call(s, "GET", "/api/copies/" + pending).body["state"] == "accepted");
    CHECK(call(s, "POST", "/api/copies/" + pending + "/review", {{"verdict", "approve"}}).status == 409);
  }
  SUBCASE("reject with a reason round-trips") {
    const auto code = review_reason_codes().front();
    CHECK(call(s, "POST", "/api/copies/" + pending + "/review",
               {{"verdict", "reject"}, {"reason_code", code}, {"note", "too pushy"}})
              .status == 200);
    const auto copy = call(s, "GET", "/api/copies/" + pending).body;
    CHECK(copy["state"] == "human_rejected");
    CHECK(copy["review"]["reason_code"] == code);
    CHECK(copy["review"]["note"] == "too pushy");
    CHECK(!copy["evaluations"].empty());
  }
  SUBCASE("review on a discarded copy conflicts") {
    const auto r = call(s, "POST", "/api/copies/" + discarded + "/review", {{"verdict", "approve"}});
    CHECK(r.status == 409);
    CHECK(r.body["state"] == "discarded");
  }
  SUBCASE("malformed reviews") {
    CHECK(call(s, "POST", "/api/copies/" + pending + "/review", {{"verdict", "maybe"}}).status == 422);
    CHECK(call(s, "POST", "/api/copies/" + pending + "/review", {{"verdict", "reject"}, {"reason_code", "nope"}})
              .status == 422);
    CHECK(call(s, "POST", "/api/copies/missing/review", {{"verdict", "approve"}}).status == 404);
  }
  SUBCASE("selection") {
    const auto r = call(s, "GET", "/api/select", nullptr, {{"job_id", "campaign-a-persona"}, {"k", "5"}});
    REQUIRE(r.status == 200);
    CHECK(r.body["copy_ids"].size() == 5);
    CHECK(r.body["candidates"] == 161);
    CHECK(call(s, "GET", "/api/select", nullptr, {{"job_id", "campaign-a-persona"}, {"k", "0"}}).status == 422);
    CHECK(call(s, "GET", "/api/select", nullptr, {{"job_id", "nope"}, {"k", "2"}}).status == 404);
  }
}

TEST_CASE("jobs persisted before startup are listed") {
  TempDir tmp;
  {
    EventStore store(tmp.path / "jobs");
    const auto row = fixtures::ablation_row();
    fixtures::run(fixtures::build_row(row, row.name), store, 4);
  }
  auto cfg = base_config();
  cfg.data_dir = tmp.path;
  Service s(cfg);
  const auto job = call(s, "GET", "/api/jobs/campaign-a-persona");
  CHECK(job.status == 200);
  CHECK(job.body["copies"] == 420);
  CHECK(job.body["rates"]["with_refinement"].dump() == "38.33");
  CHECK(call(s, "GET", "/api/jobs").body.dump().find("campaign-a-persona") != std::string::npos);
}

TEST_CASE("GET routes do not mutate the store") {
  Service s(base_config());
  load_ablation(s);
  const auto before = Json(s.store().lineages()).dump();
  for (const char* path : {"/api/jobs", "/api/copies", "/api/reports/campaign-a-persona", "/api/taxonomy"}) {
    call(s, "GET", path);
  }
  call(s, "GET", "/api/select", nullptr, {{"job_id", "campaign-a-persona"}, {"k", "3"}});
  CHECK(Json(s.store().lineages()).dump() == before);
}

TEST_CASE("jobs run asynchronously against a mock provider") {
  TempDir tmp;
  const auto fixture = fixtures::build_row(fixtures::scripted_row(), "unused");
  const auto transcript = tmp.path / "t.json";
  std::ofstream(transcript) << Json(fixture.transcript).dump();

  auto cfg = base_config();
  cfg.data_dir = tmp.path / "data";
  ProviderConfig mock;
  mock.provider_kind = ProviderKind::mock;
  mock.transcript_path = transcript.string();
  mock.attempts = 1;
  cfg.providers["default"] = mock;
  {
    Service s(cfg);
    const auto r = call(s, "POST", "/api/jobs",
                        {{"usecase_id", "campaign-a-free-delivery"}, {"total", 10}, {"batch_size", 5}, {"max_refines", 1},
                         {"job_id", "api-job"}});
    REQUIRE(r.status == 202);
    CHECK(r.body["job_id"] == "api-job");
    s.wait_for_jobs();
    const auto job = call(s, "GET", "/api/jobs/api-job");
    CHECK(job.body["status"] == "completed");
    CHECK(job.body["summary"]["first_pass_rate"] == "40.00");
    CHECK(job.body["summary"]["success_rate"] == "80.00");
    CHECK(call(s, "POST", "/api/jobs", {{"usecase_id", "campaign-a-free-delivery"}, {"total", 1}, {"job_id", "api-job"}})
              .status == 409);
    CHECK(call(s, "POST", "/api/jobs", {{"usecase_id", "campaign-a-free-delivery"}, {"total", 1}, {"max_refines", 3}})
              .status == 422);
    CHECK(call(s, "POST", "/api/jobs", {{"usecase_id", "campaign-a-free-delivery"}, {"total", 0}}).status == 422);
    CHECK(call(s, "POST", "/api/jobs", {{"usecase_id", "nope"}, {"total", 1}}).status == 404);
    CHECK(call(s, "POST", "/api/jobs", {{"usecase_id", "campaign-a-free-delivery"}, {"total", 1}, {"provider", "x"}})
              .status == 422);
  }
  // A restarted service finds the persisted job.
  Service again(cfg);
  CHECK(call(again, "GET", "/api/jobs/api-job").body["copies"] == 10);
}

TEST_CASE("shared token") {
  auto cfg = base_config();
  cfg.token = "s3cret";
  Service s(cfg);
  CHECK(call(s, "GET", "/api/health").status == 401);
  ApiRequest r{"GET", "/api/health", {}, {{std::string(kTokenHeader), "s3cret"}}, ""};
  CHECK(s.handle(r).status == 200);
}

TEST_CASE("real socket round trip") {
  Service s(base_config());
  load_ablation(s);
  const int port = s.start();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  auto tax = client.Get("/api/taxonomy");
  REQUIRE(tax);
  CHECK(tax->status == 200);
  CHECK(Json::parse(tax->body)["version"] == "reasons/1");

  auto report = client.Get("/api/reports/campaign-a-persona");
  REQUIRE(report);
  CHECK(report->body.find("38.33") != std::string::npos);

  const auto discarded = first_in_state(s, "campaign-a-persona", "discarded");
  auto review = client.Post("/api/copies/" + discarded + "/review", R"({"verdict":"approve"})", "application/json");
  REQUIRE(review);
  CHECK(review->status == 409);

  auto copies = client.Get("/api/copies?job_id=campaign-a-persona&state=pending_human_review");
  REQUIRE(copies);
  CHECK(Json::parse(copies->body)["copies"].size() == 161);
  s.stop();
}
