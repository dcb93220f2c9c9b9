#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "copygen/gateway.hpp"
#include "copygen/model.hpp"
#include "copygen/refine.hpp"
#include "copygen/store.hpp"

// HTTP/JSON facade over the pipeline, the store and the reports.
namespace copygen {

inline constexpr std::string_view kTokenHeader = "X-Copygen-Token";
inline constexpr int kMaxApiRefines = 2;

struct ServiceConfig {
  /// Job logs and registered use cases; empty keeps everything in memory.
  std::filesystem::path data_dir;
  /// Use-case documents (*.json) registered at startup.
  std::filesystem::path usecase_dir;
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> token;
  /// Static review UI bundle mounted at "/".
  std::filesystem::path ui_dir;
  /// Provider profiles selectable per job; "default" is used when a job names none.
  std::map<std::string, ProviderConfig> providers;
  int workers = 2;
};

void from_json(const Json& j, ServiceConfig& v);
ServiceConfig load_service_config(const std::string& path);

/// Published request/response schemas (OpenAPI 3.0).
Json openapi_document();

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  Json body;
  std::string text;  // non-JSON payloads (text reports)
  std::string content_type = "application/json";
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Routes one request; transport independent.
  ApiResponse handle(const ApiRequest& request);

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void listen();
  void stop();

  /// Blocks until every submitted job has finished.
  void wait_for_jobs();

  EventStore& store() { return *store_; }

 private:
  struct JobRecord {
    std::string job_id;
    std::string usecase_id;
    std::string status = "queued";  // queued | running | completed | failed
    std::string error;
    int done = 0;
    int total = 0;
    std::optional<JobSummary> summary;
  };

  ApiResponse register_usecase(const ApiRequest& r);
  ApiResponse list_usecases();
  ApiResponse get_usecase(const std::string& id);
  ApiResponse submit_job(const ApiRequest& r);
  ApiResponse list_jobs();
  ApiResponse get_job(const std::string& id);
  ApiResponse list_copies(const ApiRequest& r);
  ApiResponse get_copy(const std::string& id);
  ApiResponse review_copy(const std::string& id, const ApiRequest& r);
  ApiResponse select(const ApiRequest& r);
  ApiResponse report(const std::string& job_id, const ApiRequest& r);

  std::optional<UseCaseSpec> find_usecase(const std::string& id) const;
  std::string next_job_id();

  ServiceConfig config_;
  std::unique_ptr<EventStore> store_;
  mutable std::mutex mu_;
  std::map<std::string, UseCaseSpec> usecases_;
  std::map<std::string, JobRecord> jobs_;
  std::vector<std::jthread> job_threads_;
  std::atomic<int> job_counter_{0};

  struct Server;
  std::unique_ptr<Server> server_;
  std::thread server_thread_;
};

}  // namespace copygen
