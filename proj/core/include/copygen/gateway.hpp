#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "copygen/model.hpp"

// One abstraction over the text-completion provider. Generation, refinement
// and judging all go through the same Gateway, so one ProviderConfig serves
// every role.
namespace copygen {

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what, bool retryable = false)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class ProviderTimeout : public ProviderError {
 public:
  explicit ProviderTimeout(const std::string& what) : ProviderError(what, true) {}
};

class ProviderRejected : public ProviderError {
 public:
  ProviderRejected(int status, const std::string& what)
      : ProviderError(what, status == 429 || status >= 500), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TranscriptExhausted : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

/// Strict transcript whose next entry does not match the request.
class TranscriptMismatch : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

namespace tags {
inline constexpr std::string_view kGeneration = "generation";
inline constexpr std::string_view kRefinement = "refinement";
inline std::string judge(const std::string& criterion_id) { return "judge:" + criterion_id; }
}  // namespace tags

struct CompletionRequest {
  std::string prompt_text;
  std::string request_tag;  // generation | refinement | judge:<criterion_id>
  std::string model_id;
  double temperature = 0.7;
  int max_output_tokens = 1024;
};

/// One completion attempt. Implementations throw ProviderError subclasses.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
};

struct TranscriptEntry {
  /// Exact tag, "judge:*" for any judge request, or "*" for anything.
  std::string tag;
  std::optional<std::string> contains;  // substring the prompt must contain
  std::string response;
  /// Scripted failure instead of a response: "timeout" or "rejected:<status>".
  std::optional<std::string> error;

  bool matches(const CompletionRequest& request) const;
};

struct MockTranscript {
  std::vector<TranscriptEntry> entries;
  bool strict = true;
};

void to_json(Json& j, const TranscriptEntry& v);
void from_json(const Json& j, TranscriptEntry& v);
/// Accepts a bare entry array (strict) or {"strict": bool, "entries": [...]}.
void from_json(const Json& j, MockTranscript& v);
void to_json(Json& j, const MockTranscript& v);
MockTranscript load_transcript(const std::string& path);

/// Replays a transcript. Strict mode: every request must match the next
/// unconsumed entry. Lenient mode: the first unconsumed matching entry wins.
class MockProvider final : public LlmProvider {
 public:
  explicit MockProvider(MockTranscript transcript);
  std::string complete(const CompletionRequest& request) override;

  std::size_t consumed() const;
  std::size_t remaining() const;
  std::vector<CompletionRequest> requests() const;

 private:
  MockTranscript transcript_;
  std::vector<bool> used_;
  std::vector<CompletionRequest> seen_;
  mutable std::mutex mu_;
};

/// Chat-completion style JSON POST; wire format documented in
/// docs/provider-protocol.md. Plain http only.
class HttpProvider final : public LlmProvider {
 public:
  explicit HttpProvider(ProviderConfig config);
  std::string complete(const CompletionRequest& request) override;

 private:
  ProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

struct AuditRecord {
  std::string request_tag;
  double latency_ms = 0;
  std::string outcome;  // "ok" or the error class name
  int attempts = 0;
};

using AuditSink = std::function<void(const AuditRecord&)>;

/// Appends one JSON line per record; thread-safe.
AuditSink jsonl_audit_sink(const std::string& path);

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::unique_ptr<LlmProvider> provider, ProviderConfig config, AuditSink audit = {});

  /// Retries retryable errors up to config.attempts with config.backoff_ms
  /// between attempts, bounded by config.max_concurrency in-flight calls.
  /// Emits exactly one audit record per call.
  std::string complete(const std::string& prompt_text, const std::string& request_tag);

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  const ProviderConfig& config() const { return config_; }
  LlmProvider& provider() { return *provider_; }

 private:
  std::unique_ptr<LlmProvider> provider_;
  ProviderConfig config_;
  AuditSink audit_;
  Sleeper sleeper_;
  std::counting_semaphore<1024> slots_;
};

/// Builds a mock or http gateway from configuration.
std::unique_ptr<Gateway> make_gateway(const ProviderConfig& config, AuditSink audit = {});

}  // namespace copygen
