#pragma once

// Completion-model gateway: backend seam, retries with exponential backoff,
// token-bucket admission, mock and cassette backends, and summarization.

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include <json.hpp>

#include "discmon/common.hpp"
#include "discmon/dossier.hpp"
#include "discmon/ingestion.hpp"

namespace discmon {

using Millis = std::chrono::milliseconds;

struct ModelConfig {
  std::string model_id = "mock";
  double temperature = 0.0;
  int max_output_tokens = 512;
  Millis request_timeout{60'000};

  void validate() const {
    if (model_id.empty()) throw ContractViolation("ModelConfig: empty model_id");
    if (!(temperature >= 0.0)) throw ContractViolation("ModelConfig: temperature must be >= 0");
    if (max_output_tokens < 1) throw ContractViolation("ModelConfig: max_output_tokens must be >= 1");
    if (request_timeout.count() <= 0) throw ContractViolation("ModelConfig: request_timeout must be > 0");
  }
};

struct CompletionRequest {
  std::string system;
  std::string user;

  bool operator==(const CompletionRequest&) const = default;
};

struct Usage {
  size_t prompt_tokens = 0;
  size_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  Usage usage;
  Millis latency{0};
  int attempts = 1;
};

// Failure of a single backend call.
enum class FailureKind {
  kRateLimited,
  kTimeout,
  kServerError,
  kAuthentication,
  kInvalidRequest,
  kRejected,
};

inline bool is_retryable(FailureKind k) {
  return k == FailureKind::kRateLimited || k == FailureKind::kTimeout || k == FailureKind::kServerError;
}

inline std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::kRateLimited: return "rate_limited";
    case FailureKind::kTimeout: return "timeout";
    case FailureKind::kServerError: return "server_error";
    case FailureKind::kAuthentication: return "authentication";
    case FailureKind::kInvalidRequest: return "invalid_request";
    case FailureKind::kRejected: return "rejected";
  }
  return "rejected";
}

class BackendError : public std::runtime_error {
 public:
  BackendError(FailureKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  FailureKind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  FailureKind kind_;
  int status_;
};

// Final outcome of Gateway::complete when it does not succeed.
enum class GatewayErrorKind {
  kRateLimitExhausted,
  kTimeout,
  kBackendRejection,
  kAuthentication,
  kInvalidRequest,
};

inline std::string_view to_string(GatewayErrorKind k) {
  switch (k) {
    case GatewayErrorKind::kRateLimitExhausted: return "rate_limit_exhausted";
    case GatewayErrorKind::kTimeout: return "timeout";
    case GatewayErrorKind::kBackendRejection: return "backend_rejection";
    case GatewayErrorKind::kAuthentication: return "authentication";
    case GatewayErrorKind::kInvalidRequest: return "invalid_request";
  }
  return "backend_rejection";
}

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, int attempts, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " after " + std::to_string(attempts) +
                           " attempt(s): " + what),
        kind_(kind),
        attempts_(attempts) {}
  GatewayErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  GatewayErrorKind kind_;
  int attempts_;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One attempt. Throws BackendError on failure.
  virtual CompletionResult send(const CompletionRequest& request, const ModelConfig& config) = 0;
};

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(Millis d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_for(Millis d) override { std::this_thread::sleep_for(d); }
};

// Virtual time: sleeping advances the clock instantly and is recorded.
class ManualClock final : public Clock {
 public:
  time_point now() override {
    std::lock_guard lock(mu_);
    return now_;
  }
  void sleep_for(Millis d) override {
    std::lock_guard lock(mu_);
    sleeps_.push_back(d);
    now_ += d;
  }
  void advance(Millis d) {
    std::lock_guard lock(mu_);
    now_ += d;
  }
  std::vector<Millis> sleeps() const {
    std::lock_guard lock(mu_);
    return sleeps_;
  }

 private:
  mutable std::mutex mu_;
  time_point now_{};
  std::vector<Millis> sleeps_;
};

struct RetryPolicy {
  int max_retries = 3;  // attempts = 1 + max_retries at most
  Millis initial_backoff{500};
  double multiplier = 2.0;
  Millis max_backoff{30'000};

  // Delay before retry number `retry` (0-based). Nondecreasing in `retry`.
  Millis delay(int retry) const {
    const double d = double(initial_backoff.count()) * std::pow(multiplier, retry);
    const double capped = std::min(d, double(max_backoff.count()));
    return Millis(static_cast<Millis::rep>(capped));
  }
};

// Token bucket admission. Callers block (via the clock) until a token is
// available; admission is serialized by the bucket's mutex.
class TokenBucket {
 public:
  TokenBucket(double requests_per_minute, std::shared_ptr<Clock> clock)
      : rate_per_ms_(requests_per_minute / 60'000.0),
        capacity_(std::max(1.0, requests_per_minute / 60.0)),
        tokens_(capacity_),
        clock_(std::move(clock)),
        last_(clock_->now()) {}

  void acquire() {
    std::lock_guard lock(mu_);
    refill();
    if (tokens_ < 1.0) {
      const auto wait = Millis(static_cast<Millis::rep>(std::ceil((1.0 - tokens_) / rate_per_ms_)));
      clock_->sleep_for(wait);
      refill();
    }
    tokens_ = std::max(0.0, tokens_ - 1.0);
  }

 private:
  void refill() {
    const auto now = clock_->now();
    const auto elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
    last_ = now;
  }

  std::mutex mu_;
  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::shared_ptr<Clock> clock_;
  Clock::time_point last_;
};

struct GatewayOptions {
  RetryPolicy retry;
  double requests_per_minute = 0.0;  // 0 disables the limiter
  size_t context_budget_tokens = 16'384;
};

inline std::string request_fingerprint(const CompletionRequest& r, const ModelConfig& c) {
  auto h = fnv1a64(c.model_id);
  h = fnv1a64(std::string_view("\0", 1), h);
  h = fnv1a64(r.system, h);
  h = fnv1a64(std::string_view("\0", 1), h);
  h = fnv1a64(r.user, h);
  return hex64(h);
}

// Thread-safe; share one instance across callers.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {},
                   std::shared_ptr<Clock> clock = std::make_shared<SystemClock>())
      : backend_(std::move(backend)), options_(options), clock_(std::move(clock)) {
    if (options_.retry.max_retries < 0) throw ContractViolation("RetryPolicy: negative max_retries");
    if (options_.requests_per_minute > 0)
      limiter_ = std::make_unique<TokenBucket>(options_.requests_per_minute, clock_);
  }

  CompletionResult complete(const CompletionRequest& request, const ModelConfig& config) {
    config.validate();
    if (trim(request.user).empty() && trim(request.system).empty())
      throw GatewayError(GatewayErrorKind::kInvalidRequest, 0, "empty request text");
    const auto prompt_tokens = estimate_tokens(request.system) + estimate_tokens(request.user);
    if (prompt_tokens + size_t(config.max_output_tokens) > options_.context_budget_tokens)
      throw GatewayError(GatewayErrorKind::kInvalidRequest, 0,
                         "request needs ~" + std::to_string(prompt_tokens) + " prompt tokens + " +
                             std::to_string(config.max_output_tokens) +
                             " output tokens, over the context budget of " +
                             std::to_string(options_.context_budget_tokens));

    const int max_attempts = options_.retry.max_retries + 1;
    for (int attempt = 1;; ++attempt) {
      if (limiter_) limiter_->acquire();
      try {
        auto result = backend_->send(request, config);
        result.attempts = attempt;
        return result;
      } catch (const BackendError& e) {
        if (!is_retryable(e.kind()) || attempt >= max_attempts)
          throw GatewayError(final_kind(e.kind()), attempt, e.what());
        clock_->sleep_for(options_.retry.delay(attempt - 1));
      }
    }
  }

  const GatewayOptions& options() const { return options_; }

 private:
  static GatewayErrorKind final_kind(FailureKind k) {
    switch (k) {
      case FailureKind::kRateLimited: return GatewayErrorKind::kRateLimitExhausted;
      case FailureKind::kTimeout: return GatewayErrorKind::kTimeout;
      case FailureKind::kAuthentication: return GatewayErrorKind::kAuthentication;
      case FailureKind::kInvalidRequest: return GatewayErrorKind::kInvalidRequest;
      case FailureKind::kServerError:
      case FailureKind::kRejected: return GatewayErrorKind::kBackendRejection;
    }
    return GatewayErrorKind::kBackendRejection;
  }

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<TokenBucket> limiter_;
};

// Deterministic backend: fingerprint table first, then the fallback rule.
// Scripted faults are consumed one per call before any lookup.
class MockBackend final : public Backend {
 public:
  using Rule = std::function<std::string(const CompletionRequest&, const ModelConfig&)>;

  MockBackend() = default;
  explicit MockBackend(Rule rule) : rule_(std::move(rule)) {}

  void add_response(const std::string& fingerprint, std::string text) {
    std::lock_guard lock(mu_);
    table_[fingerprint] = std::move(text);
  }
  void add_response(const CompletionRequest& r, const ModelConfig& c, std::string text) {
    add_response(request_fingerprint(r, c), std::move(text));
  }
  void set_rule(Rule rule) {
    std::lock_guard lock(mu_);
    rule_ = std::move(rule);
  }
  void script_faults(std::vector<FailureKind> faults) {
    std::lock_guard lock(mu_);
    faults_.insert(faults_.end(), faults.begin(), faults.end());
  }
  int calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  CompletionResult send(const CompletionRequest& request, const ModelConfig& config) override {
    std::string text;
    {
      std::lock_guard lock(mu_);
      ++calls_;
      if (!faults_.empty()) {
        const auto f = faults_.front();
        faults_.pop_front();
        throw BackendError(f, "scripted fault: " + std::string(to_string(f)));
      }
      if (auto it = table_.find(request_fingerprint(request, config)); it != table_.end())
        text = it->second;
      else if (rule_)
        text = rule_(request, config);
      else
        throw BackendError(FailureKind::kRejected, "mock has no response for this request");
    }
    CompletionResult r;
    r.text = std::move(text);
    r.usage = {estimate_tokens(request.system) + estimate_tokens(request.user), estimate_tokens(r.text)};
    return r;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> table_;
  Rule rule_;
  std::deque<FailureKind> faults_;
  int calls_ = 0;
};

// Recorded-fixture backend over a cassette file of one JSON object per line:
// {"fingerprint": ..., "model_id": ..., "response": ...}. Replay serves only
// recorded entries; record forwards misses to `inner` and appends them.
class CassetteBackend final : public Backend {
 public:
  enum class Mode { kReplay, kRecord };

  CassetteBackend(std::string path, Mode mode, std::shared_ptr<Backend> inner = nullptr)
      : path_(std::move(path)), mode_(mode), inner_(std::move(inner)) {
    if (mode_ == Mode::kRecord && !inner_)
      throw ContractViolation("CassetteBackend: record mode needs an inner backend");
    std::ifstream in(path_);
    if (!in && mode_ == Mode::kReplay) throw std::runtime_error("cannot open cassette " + path_);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line);
      entries_[j.at("fingerprint").get<std::string>()] = j.at("response").get<std::string>();
    }
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  CompletionResult send(const CompletionRequest& request, const ModelConfig& config) override {
    const auto fp = request_fingerprint(request, config);
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(fp); it != entries_.end()) {
        CompletionResult r;
        r.text = it->second;
        r.usage = {estimate_tokens(request.system) + estimate_tokens(request.user),
                   estimate_tokens(r.text)};
        return r;
      }
    }
    if (mode_ == Mode::kReplay)
      throw BackendError(FailureKind::kRejected, "cassette " + path_ + " has no entry " + fp);
    auto result = inner_->send(request, config);
    std::lock_guard lock(mu_);
    entries_[fp] = result.text;
    std::ofstream out(path_, std::ios::app);
    out << nlohmann::json{{"fingerprint", fp}, {"model_id", config.model_id}, {"response", result.text}}
               .dump()
        << '\n';
    return result;
  }

 private:
  mutable std::mutex mu_;
  std::string path_;
  Mode mode_;
  std::shared_ptr<Backend> inner_;
  std::map<std::string, std::string> entries_;
};

inline constexpr std::string_view kSummarySystemPrompt =
    "You summarize Korean corporate timely disclosures for financial analysts. "
    "Respond in English regardless of the language of the disclosure. "
    "Write a single sentence (at most a short paragraph) that keeps the key figures, "
    "dates and counterparties. Output only the summary.";

inline CompletionRequest build_summary_request(const Disclosure& d) {
  std::string user;
  user += "Company: " + d.company_name + "\n";
  user += "Date: " + to_string(d.disclosed_at.date) + "\n";
  user += "Time: " + time_string(d.disclosed_at) + "\n";
  user += "Title: " + d.title + "\n";
  user += "Body:\n" + d.body + "\n";
  return {std::string(kSummarySystemPrompt), std::move(user)};
}

// Whitespace runs (including newlines) collapse to one space.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

inline DisclosureSummary summarize(const Disclosure& d, Gateway& gateway, const ModelConfig& config) {
  if (trim(d.body).empty()) throw ContractViolation("summarize: disclosure body is empty");
  auto result = gateway.complete(build_summary_request(d), config);
  auto text = collapse_whitespace(result.text);
  if (text.empty())
    throw GatewayError(GatewayErrorKind::kBackendRejection, result.attempts, "empty summary");
  return {d.disclosed_at, d.title, std::move(text)};
}

}  // namespace discmon
