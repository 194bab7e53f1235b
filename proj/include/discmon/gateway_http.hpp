#pragma once

// Remote chat-completions backend and gateway construction from a config file.

#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "discmon/gateway.hpp"
#include "discmon/mock_rules.hpp"

namespace discmon {

// Speaks the OpenAI-style /v1/chat/completions protocol.
class ChatCompletionsBackend final : public Backend {
 public:
  ChatCompletionsBackend(std::string base_url, std::string api_key,
                         std::string path = "/v1/chat/completions")
      : base_url_(std::move(base_url)), api_key_(std::move(api_key)), path_(std::move(path)) {}

  CompletionResult send(const CompletionRequest& request, const ModelConfig& config) override {
    httplib::Client client(base_url_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config.request_timeout);
    const auto sec = timeout.count() / 1'000'000;
    const auto usec = timeout.count() % 1'000'000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    nlohmann::json body = {
        {"model", config.model_id},
        {"temperature", config.temperature},
        {"max_tokens", config.max_output_tokens},
        {"messages",
         {{{"role", "system"}, {"content", request.system}}, {{"role", "user"}, {"content", request.user}}}},
    };
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const auto latency =
        std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - started);
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write ||
          err == httplib::Error::ConnectionTimeout)
        throw BackendError(FailureKind::kTimeout, "request timed out: " + httplib::to_string(err));
      throw BackendError(FailureKind::kServerError, "transport failure: " + httplib::to_string(err));
    }
    const int status = res->status;
    if (status == 429) throw BackendError(FailureKind::kRateLimited, "HTTP 429: " + res->body, status);
    if (status == 401 || status == 403)
      throw BackendError(FailureKind::kAuthentication, "HTTP " + std::to_string(status), status);
    if (status == 400 || status == 404 || status == 413 || status == 422)
      throw BackendError(FailureKind::kInvalidRequest, "HTTP " + std::to_string(status) + ": " + res->body,
                         status);
    if (status == 408 || status == 504)
      throw BackendError(FailureKind::kTimeout, "HTTP " + std::to_string(status), status);
    if (status >= 500) throw BackendError(FailureKind::kServerError, "HTTP " + std::to_string(status), status);
    if (status != 200)
      throw BackendError(FailureKind::kRejected, "HTTP " + std::to_string(status) + ": " + res->body, status);

    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
      throw BackendError(FailureKind::kRejected, "malformed completion payload", status);
    const auto& message = j["choices"][0]["message"];
    if (!message.contains("content") || !message["content"].is_string())
      throw BackendError(FailureKind::kRejected, "completion has no text content", status);

    CompletionResult result;
    result.text = message["content"].get<std::string>();
    result.latency = latency;
    if (j.contains("usage")) {
      result.usage.prompt_tokens = j["usage"].value("prompt_tokens", size_t{0});
      result.usage.completion_tokens = j["usage"].value("completion_tokens", size_t{0});
    }
    return result;
  }

 private:
  std::string base_url_;
  std::string api_key_;
  std::string path_;
};

struct GatewaySetup {
  std::shared_ptr<Gateway> gateway;
  ModelConfig model;
};

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.model_id = j.value("model_id", m.model_id);
  m.temperature = j.value("temperature", m.temperature);
  m.max_output_tokens = j.value("max_output_tokens", m.max_output_tokens);
  m.request_timeout = Millis(j.value("request_timeout_ms", m.request_timeout.count()));
  m.validate();
  return m;
}

// Config object:
// {
//   "backend": "mock" | "cassette" | "chat-completions",
//   "base_url": "https://api.openai.com", "api_key_env": "DISCMON_API_KEY",
//   "cassette": "path", "cassette_mode": "replay" | "record",
//   "model": {"model_id": ..., "temperature": 0, "max_output_tokens": 512, "request_timeout_ms": 60000},
//   "retry": {"max_retries": 3, "initial_backoff_ms": 500, "multiplier": 2, "max_backoff_ms": 30000},
//   "requests_per_minute": 60, "context_budget_tokens": 16384
// }
// Cassette record mode wraps the chat-completions backend.
inline GatewaySetup make_gateway(const nlohmann::json& cfg) {
  GatewayOptions options;
  if (cfg.contains("retry")) {
    const auto& r = cfg["retry"];
    options.retry.max_retries = r.value("max_retries", options.retry.max_retries);
    options.retry.initial_backoff = Millis(r.value("initial_backoff_ms", options.retry.initial_backoff.count()));
    options.retry.multiplier = r.value("multiplier", options.retry.multiplier);
    options.retry.max_backoff = Millis(r.value("max_backoff_ms", options.retry.max_backoff.count()));
  }
  options.requests_per_minute = cfg.value("requests_per_minute", options.requests_per_minute);
  options.context_budget_tokens = cfg.value("context_budget_tokens", options.context_budget_tokens);
  const auto model = model_config_from_json(cfg.value("model", nlohmann::json::object()));

  auto remote = [&]() -> std::shared_ptr<Backend> {
    const auto env = cfg.value("api_key_env", std::string("DISCMON_API_KEY"));
    const char* key = std::getenv(env.c_str());
    return std::make_shared<ChatCompletionsBackend>(cfg.value("base_url", std::string("https://api.openai.com")),
                                                    key ? key : "");
  };

  const auto kind = cfg.value("backend", std::string("mock"));
  std::shared_ptr<Backend> backend;
  if (kind == "mock") {
    backend = std::make_shared<MockBackend>(default_mock_rule());
  } else if (kind == "chat-completions") {
    backend = remote();
  } else if (kind == "cassette") {
    const auto mode = cfg.value("cassette_mode", std::string("replay")) == "record"
                          ? CassetteBackend::Mode::kRecord
                          : CassetteBackend::Mode::kReplay;
    backend = std::make_shared<CassetteBackend>(cfg.at("cassette").get<std::string>(), mode,
                                                mode == CassetteBackend::Mode::kRecord ? remote() : nullptr);
  } else {
    throw std::invalid_argument("unknown backend '" + kind + "'");
  }
  return {std::make_shared<Gateway>(std::move(backend), options), model};
}

inline GatewaySetup make_gateway_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gateway config " + path);
  return make_gateway(nlohmann::json::parse(in));
}

}  // namespace discmon
