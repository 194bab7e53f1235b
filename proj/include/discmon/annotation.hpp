#pragma once

// Human annotation backend: per-rater task queues over the dossier store,
// an fsync'd append-only submission log, and consensus export.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "discmon/dossier.hpp"
#include "discmon/evaluation.hpp"
#include "discmon/metrics.hpp"

namespace discmon {

struct RaterConfig {
  std::string id;
  std::string token;
  std::optional<std::vector<CompanyMonth>> assigned;  // default: every task in store order
};

struct AnnotationConfig {
  std::vector<RaterConfig> raters;
  std::string admin_token;
  size_t required_raters = 2;
};

// {"raters": [{"id": "expert-a", "token": "...", "assigned": [{"company_id":..,"month":..}]}],
//  "admin_token": "...", "required_raters": 2}
inline AnnotationConfig annotation_config_from_json(const nlohmann::json& j) {
  AnnotationConfig c;
  for (const auto& r : j.at("raters")) {
    RaterConfig rc{r.at("id").get<std::string>(), r.value("token", std::string{}), std::nullopt};
    if (r.contains("assigned")) {
      rc.assigned.emplace();
      for (const auto& k : r["assigned"]) rc.assigned->push_back(company_month_from_json(k));
    }
    c.raters.push_back(std::move(rc));
  }
  c.admin_token = j.value("admin_token", std::string{});
  c.required_raters = j.value("required_raters", size_t{2});
  return c;
}

enum class AnnotationErrorCode { kNotFound, kValidation, kNotAssigned, kUnauthorized, kIncomplete, kStorage };

inline std::string_view to_string(AnnotationErrorCode c) {
  switch (c) {
    case AnnotationErrorCode::kNotFound: return "not_found";
    case AnnotationErrorCode::kValidation: return "validation_error";
    case AnnotationErrorCode::kNotAssigned: return "not_assigned";
    case AnnotationErrorCode::kUnauthorized: return "unauthorized";
    case AnnotationErrorCode::kIncomplete: return "incomplete_coverage";
    case AnnotationErrorCode::kStorage: return "storage_error";
  }
  return "storage_error";
}

class AnnotationError : public std::runtime_error {
 public:
  AnnotationError(AnnotationErrorCode code, const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(what), code_(code), details_(std::move(details)) {}
  AnnotationErrorCode code() const { return code_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  AnnotationErrorCode code_;
  std::vector<std::string> details_;
};

struct RatingSubmission {
  std::string rater_id;
  std::string company_id;
  YearMonth month;
  int score = 0;
  std::string submitted_at;  // set by the service when empty

  CompanyMonth key() const { return {company_id, month}; }
};

struct Progress {
  size_t completed = 0;
  size_t total = 0;
  bool operator==(const Progress&) const = default;
};

struct NextTask {
  const MonthlyDossier* dossier = nullptr;  // nullptr: all assigned tasks completed
  Progress progress;
  bool done() const { return dossier == nullptr; }
};

struct ExportResult {
  std::vector<HumanAssessment> assessments;
  std::optional<double> kappa;  // expert 1 vs expert 2
  double agreement = 0.0;
  std::vector<std::string> raters;  // expert order
};

inline std::string utc_now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const RatingSubmission& s) {
  return {{"rater_id", s.rater_id},
          {"company_id", s.company_id},
          {"month", to_string(s.month)},
          {"score", s.score},
          {"submitted_at", s.submitted_at}};
}

// Thread-safe. Every accepted submission is fsync'd to the log before the
// call returns; on construction the log is replayed to rebuild state.
class AnnotationService {
 public:
  using NowFn = std::function<std::string()>;

  AnnotationService(std::vector<MonthlyDossier> tasks, AnnotationConfig config, std::string log_path,
                    NowFn now = utc_now_iso8601)
      : tasks_(std::move(tasks)), config_(std::move(config)), log_path_(std::move(log_path)), now_(std::move(now)) {
    for (size_t i = 0; i < tasks_.size(); ++i)
      if (!task_index_.emplace(tasks_[i].key(), i).second)
        throw ContractViolation("AnnotationService: duplicate task " + to_string(tasks_[i].key()));
    for (const auto& rc : config_.raters) {
      Session s;
      if (rc.assigned) {
        for (const auto& k : *rc.assigned) {
          if (!task_index_.contains(k))
            throw ContractViolation("AnnotationService: rater " + rc.id + " assigned unknown task " + to_string(k));
          s.assigned.push_back(k);
        }
      } else {
        for (const auto& t : tasks_) s.assigned.push_back(t.key());
      }
      s.assigned_set = {s.assigned.begin(), s.assigned.end()};
      s.started_at = now_();
      if (!sessions_.emplace(rc.id, std::move(s)).second)
        throw ContractViolation("AnnotationService: duplicate rater " + rc.id);
      rater_order_.push_back(rc.id);
    }
    replay();
    fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open submission log " + log_path_ + ": " + std::strerror(errno));
  }

  ~AnnotationService() {
    if (fd_ >= 0) ::close(fd_);
  }
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  bool authenticate(const std::string& rater_id, const std::string& token) const {
    for (const auto& rc : config_.raters)
      if (rc.id == rater_id) return rc.token.empty() || rc.token == token;
    return false;
  }

  bool is_admin(const std::string& token) const { return !config_.admin_token.empty() && token == config_.admin_token; }

  bool has_rater(const std::string& rater_id) const { return sessions_.contains(rater_id); }

  // The first assigned-but-uncompleted task in assignment order.
  NextTask next_task(const std::string& rater_id) const {
    std::lock_guard lock(mu_);
    const auto& s = session(rater_id);
    NextTask out{nullptr, progress_of(s)};
    for (const auto& k : s.assigned)
      if (!s.scores.contains(k)) {
        out.dossier = &tasks_[task_index_.at(k)];
        break;
      }
    return out;
  }

  Progress progress(const std::string& rater_id) const {
    std::lock_guard lock(mu_);
    return progress_of(session(rater_id));
  }

  Progress submit(RatingSubmission sub) {
    std::lock_guard lock(mu_);
    auto& s = session(sub.rater_id);
    validate(s, sub);
    if (sub.submitted_at.empty()) sub.submitted_at = now_();
    append_durably(to_json(sub).dump() + "\n");
    apply(s, sub);
    return progress_of(s);
  }

  // Submission history (including overwritten scores) for one rater.
  std::vector<RatingSubmission> audit_trail(const std::string& rater_id) const {
    std::lock_guard lock(mu_);
    session(rater_id);
    std::vector<RatingSubmission> out;
    for (const auto& a : audit_)
      if (a.rater_id == rater_id) out.push_back(a);
    return out;
  }

  std::string started_at(const std::string& rater_id) const {
    std::lock_guard lock(mu_);
    return session(rater_id).started_at;
  }

  // One assessment per task, in store order. Requires every task to be scored
  // by exactly `required_raters` raters (two for consensus).
  ExportResult export_assessments() const {
    std::lock_guard lock(mu_);
    if (config_.required_raters != 2)
      throw AnnotationError(AnnotationErrorCode::kValidation, "consensus export is defined for exactly two raters");
    std::vector<std::string> missing;
    ExportResult out;
    std::set<std::string> raters_used;
    std::vector<int> e1, e2;
    for (const auto& t : tasks_) {
      const auto key = t.key();
      std::vector<std::pair<std::string, int>> scored;
      for (const auto& id : rater_order_) {
        const auto& s = sessions_.at(id);
        if (auto it = s.scores.find(key); it != s.scores.end())
          scored.emplace_back(id, it->second);
        else if (s.assigned_set.contains(key))
          missing.push_back(id + " " + to_string(key));
      }
      if (scored.size() > 2) {
        missing.push_back("more than two raters scored " + to_string(key));
        continue;
      }
      if (scored.size() < 2) {
        if (scored.size() + count_assigned_missing(key) < 2)
          missing.push_back("fewer than two raters assigned " + to_string(key));
        continue;
      }
      if (!missing.empty()) continue;
      out.assessments.push_back(HumanAssessment::from_experts(t.company_id, t.month, scored[0].second, scored[1].second));
      e1.push_back(scored[0].second);
      e2.push_back(scored[1].second);
      raters_used.insert(scored[0].first);
      raters_used.insert(scored[1].first);
    }
    if (!missing.empty())
      throw AnnotationError(AnnotationErrorCode::kIncomplete,
                            "incomplete coverage: " + std::to_string(missing.size()) + " missing rating(s)", missing);
    for (const auto& id : rater_order_)
      if (raters_used.contains(id)) out.raters.push_back(id);
    if (!e1.empty()) {
      out.kappa = cohens_kappa<int>(e1, e2);
      out.agreement = concordance_rate<int>(e1, e2);
    }
    return out;
  }

  const std::vector<MonthlyDossier>& tasks() const { return tasks_; }

 private:
  struct Session {
    std::vector<CompanyMonth> assigned;
    std::set<CompanyMonth> assigned_set;
    std::map<CompanyMonth, int> scores;  // latest score per task
    std::string started_at;
  };

  const Session& session(const std::string& rater_id) const {
    auto it = sessions_.find(rater_id);
    if (it == sessions_.end()) throw AnnotationError(AnnotationErrorCode::kNotFound, "unknown rater '" + rater_id + "'");
    return it->second;
  }
  Session& session(const std::string& rater_id) {
    return const_cast<Session&>(std::as_const(*this).session(rater_id));
  }

  static Progress progress_of(const Session& s) { return {s.scores.size(), s.assigned.size()}; }

  size_t count_assigned_missing(const CompanyMonth& key) const {
    size_t n = 0;
    for (const auto& [id, s] : sessions_)
      if (s.assigned_set.contains(key) && !s.scores.contains(key)) ++n;
    return n;
  }

  static void validate(const Session& s, const RatingSubmission& sub) {
    if (!is_valid_score(sub.score))
      throw AnnotationError(AnnotationErrorCode::kValidation,
                            "score must be an integer from 1 to 5, got " + std::to_string(sub.score));
    if (!s.assigned_set.contains(sub.key()))
      throw AnnotationError(AnnotationErrorCode::kNotAssigned,
                            "task " + to_string(sub.key()) + " is not assigned to rater " + sub.rater_id);
  }

  void apply(Session& s, const RatingSubmission& sub) {
    s.scores[sub.key()] = sub.score;
    audit_.push_back(sub);
  }

  void replay() {
    std::ifstream in(log_path_);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw AnnotationError(AnnotationErrorCode::kStorage,
                              "corrupt submission log " + log_path_ + " at line " + std::to_string(line_no));
      RatingSubmission sub;
      sub.rater_id = j.at("rater_id").get<std::string>();
      sub.company_id = j.at("company_id").get<std::string>();
      auto month = parse_year_month(j.at("month").get<std::string>());
      if (!month) throw AnnotationError(AnnotationErrorCode::kStorage, "bad month in submission log");
      sub.month = *month;
      sub.score = j.at("score").get<int>();
      sub.submitted_at = j.value("submitted_at", std::string{});
      auto& s = session(sub.rater_id);
      validate(s, sub);
      apply(s, sub);
    }
  }

  void append_durably(const std::string& line) {
    size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw AnnotationError(AnnotationErrorCode::kStorage, std::string("log write failed: ") + std::strerror(errno));
      }
      written += static_cast<size_t>(n);
    }
    if (::fsync(fd_) != 0)
      throw AnnotationError(AnnotationErrorCode::kStorage, std::string("log fsync failed: ") + std::strerror(errno));
  }

  mutable std::mutex mu_;
  std::vector<MonthlyDossier> tasks_;
  std::map<CompanyMonth, size_t> task_index_;
  AnnotationConfig config_;
  std::string log_path_;
  NowFn now_;
  std::map<std::string, Session> sessions_;
  std::vector<std::string> rater_order_;
  std::vector<RatingSubmission> audit_;
  int fd_ = -1;
};

}  // namespace discmon
