#include "copygen/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace copygen {

namespace {

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const ProviderTimeout*>(&e)) return "ProviderTimeout";
  if (auto* r = dynamic_cast<const ProviderRejected*>(&e)) {
    return "ProviderRejected(" + std::to_string(r->status()) + ")";
  }
  if (dynamic_cast<const TranscriptExhausted*>(&e)) return "TranscriptExhausted";
  if (dynamic_cast<const TranscriptMismatch*>(&e)) return "TranscriptMismatch";
  return "ProviderError";
}

[[noreturn]] void throw_scripted(const std::string& error) {
  if (error == "timeout") throw ProviderTimeout("scripted timeout");
  if (error.starts_with("rejected:")) {
    const int status = std::stoi(error.substr(9));
    throw ProviderRejected(status, "scripted rejection " + std::to_string(status));
  }
  throw ProviderError("scripted error: " + error);
}

}  // namespace

bool TranscriptEntry::matches(const CompletionRequest& request) const {
  const bool tag_ok = tag == "*" || tag == request.request_tag ||
                      (tag == "judge:*" && request.request_tag.starts_with("judge:"));
  if (!tag_ok) return false;
  return !contains || request.prompt_text.find(*contains) != std::string::npos;
}

void to_json(Json& j, const TranscriptEntry& v) {
  j = Json{{"tag", v.tag}, {"response", v.response}};
  if (v.contains) j["contains"] = *v.contains;
  if (v.error) j["error"] = *v.error;
}

void from_json(const Json& j, TranscriptEntry& v) {
  j.at("tag").get_to(v.tag);
  v.response = j.value("response", "");
  v.contains.reset();
  v.error.reset();
  if (auto it = j.find("contains"); it != j.end() && !it->is_null()) v.contains = it->get<std::string>();
  if (auto it = j.find("error"); it != j.end() && !it->is_null()) v.error = it->get<std::string>();
  if (!v.error && !j.contains("response")) throw std::invalid_argument("transcript entry needs response or error");
}

void from_json(const Json& j, MockTranscript& v) {
  if (j.is_array()) {
    v.strict = true;
    j.get_to(v.entries);
    return;
  }
  v.strict = j.value("strict", true);
  j.at("entries").get_to(v.entries);
}

void to_json(Json& j, const MockTranscript& v) {
  j = Json{{"strict", v.strict}, {"entries", v.entries}};
}

MockTranscript load_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transcript " + path);
  return Json::parse(in).get<MockTranscript>();
}

// ---------------------------------------------------------------------------

MockProvider::MockProvider(MockTranscript transcript)
    : transcript_(std::move(transcript)), used_(transcript_.entries.size(), false) {}

std::string MockProvider::complete(const CompletionRequest& request) {
  std::lock_guard lock(mu_);
  seen_.push_back(request);
  const auto& entries = transcript_.entries;
  std::size_t pick = entries.size();
  if (transcript_.strict) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (used_[i]) continue;
      if (!entries[i].matches(request)) {
        throw TranscriptMismatch("request '" + request.request_tag + "' does not match transcript entry " +
                                 std::to_string(i) + " ('" + entries[i].tag + "')");
      }
      pick = i;
      break;
    }
  } else {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!used_[i] && entries[i].matches(request)) {
        pick = i;
        break;
      }
    }
  }
  if (pick == entries.size()) {
    throw TranscriptExhausted("no transcript entry left for '" + request.request_tag + "'");
  }
  used_[pick] = true;
  if (entries[pick].error) throw_scripted(*entries[pick].error);
  return entries[pick].response;
}

std::size_t MockProvider::consumed() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), true));
}

std::size_t MockProvider::remaining() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), false));
}

std::vector<CompletionRequest> MockProvider::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw std::invalid_argument("endpoint must be an http:// URL: " + url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : url.substr(path_begin);
}

std::string HttpProvider::complete(const CompletionRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.credential_env.empty()) {
    if (const char* key = std::getenv(config_.credential_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const Json body = {
      {"model", request.model_id},
      {"messages", Json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
      {"metadata", {{"request_tag", request.request_tag}}},
  };
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderTimeout("http provider unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProviderRejected(res->status, "http provider returned status " + std::to_string(res->status));
  }
  const Json reply = Json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw ProviderRejected(res->status, "http provider returned non-JSON body");
  try {
    if (reply.contains("choices")) return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    return reply.at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw ProviderRejected(res->status, std::string("unexpected response shape: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

AuditSink jsonl_audit_sink(const std::string& path) {
  auto out = std::make_shared<std::ofstream>(path, std::ios::app);
  if (!*out) throw std::runtime_error("cannot open audit log " + path);
  auto mu = std::make_shared<std::mutex>();
  return [out, mu](const AuditRecord& r) {
    const Json line = {{"request_tag", r.request_tag},
                       {"latency_ms", r.latency_ms},
                       {"outcome", r.outcome},
                       {"attempts", r.attempts}};
    std::lock_guard lock(*mu);
    *out << line.dump() << '\n';
    out->flush();
  };
}

Gateway::Gateway(std::unique_ptr<LlmProvider> provider, ProviderConfig config, AuditSink audit)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      audit_(std::move(audit)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      slots_(std::clamp(config_.max_concurrency, 1, 1024)) {
  if (!provider_) throw std::invalid_argument("gateway needs a provider");
}

std::string Gateway::complete(const std::string& prompt_text, const std::string& request_tag) {
  if (prompt_text.empty()) throw std::invalid_argument("prompt_text must be non-empty");
  const CompletionRequest request{prompt_text, request_tag, config_.model_id, config_.temperature,
                                  config_.max_output_tokens};
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& slots;
    ~Release() { slots.release(); }
  } release{slots_};

  const auto start = std::chrono::steady_clock::now();
  int attempt = 0;
  auto emit = [&](std::string outcome) {
    AuditRecord record{request_tag,
                       std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                           .count(),
                       std::move(outcome), attempt};
    if (audit_) {
      audit_(record);
    } else {
      spdlog::debug("llm call tag={} outcome={} attempts={} latency_ms={:.1f}", record.request_tag,
                    record.outcome, record.attempts, record.latency_ms);
    }
  };

  std::string text;
  try {
    while (true) {
      ++attempt;
      try {
        text = provider_->complete(request);
        break;
      } catch (const ProviderError& e) {
        if (!e.retryable() || attempt >= config_.attempts) throw;
        spdlog::warn("llm call tag={} attempt {} failed: {}", request_tag, attempt, e.what());
        if (config_.provider_kind == ProviderKind::http && !config_.backoff_ms.empty()) {
          const auto i = std::min<std::size_t>(attempt - 1, config_.backoff_ms.size() - 1);
          sleeper_(std::chrono::milliseconds(config_.backoff_ms[i]));
        }
      }
    }
  } catch (const ProviderError& e) {
    emit(error_name(e));
    throw;
  } catch (...) {
    emit("error");
    throw;
  }
  emit("ok");
  return text;
}

std::unique_ptr<Gateway> make_gateway(const ProviderConfig& config, AuditSink audit) {
  if (const auto problem = validate_provider(config); !problem.empty()) {
    throw std::invalid_argument("invalid provider config: " + problem);
  }
  std::unique_ptr<LlmProvider> provider;
  if (config.provider_kind == ProviderKind::mock) {
    provider = std::make_unique<MockProvider>(load_transcript(config.transcript_path));
  } else {
    provider = std::make_unique<HttpProvider>(config);
  }
  return std::make_unique<Gateway>(std::move(provider), config, std::move(audit));
}

}  // namespace copygen
