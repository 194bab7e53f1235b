#pragma once

// HTTP binding of AnnotationService:
//   GET  /tasks/next?rater=<id>     next dossier + rubric + progress
//   POST /ratings                   {"rater_id","company_id","month","score"}
//   GET  /progress?rater=<id>
//   GET  /export                    admin token; consensus + kappa + agreement
// Rater endpoints take "Authorization: Bearer <rater token>". Errors are
// {"error": {"code": ..., "message": ..., "details": [...]}}.

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "discmon/annotation.hpp"
#include "discmon/rating.hpp"

namespace discmon {

namespace detail {

inline int http_status(AnnotationErrorCode c) {
  switch (c) {
    case AnnotationErrorCode::kNotFound: return 404;
    case AnnotationErrorCode::kValidation: return 422;
    case AnnotationErrorCode::kNotAssigned: return 403;
    case AnnotationErrorCode::kUnauthorized: return 401;
    case AnnotationErrorCode::kIncomplete: return 409;
    case AnnotationErrorCode::kStorage: return 500;
  }
  return 500;
}

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                       const std::vector<std::string>& details = {}) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}, {"details", details}}}});
}

inline std::string bearer_token(const httplib::Request& req) {
  const auto h = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  return h.starts_with(kPrefix) ? h.substr(kPrefix.size()) : std::string{};
}

inline nlohmann::json progress_json(const Progress& p) { return {{"completed", p.completed}, {"total", p.total}}; }

inline nlohmann::json task_json(const MonthlyDossier& d) {
  auto rows = nlohmann::json::array();
  for (const auto& e : d.entries)
    rows.push_back({{"date", to_string(e.disclosed_at.date)},
                    {"time", time_string(e.disclosed_at)},
                    {"title", e.title},
                    {"summary", e.summary},
                    {"details", dossier_details(e)}});
  return {{"company_id", d.company_id}, {"company_name", d.company_name}, {"month", to_string(d.month)}, {"rows", rows}};
}

inline nlohmann::json rubric_json(const Rubric& r) {
  auto criteria = nlohmann::json::array();
  for (const auto& [score, text] : r.criteria)
    criteria.push_back({{"score", score}, {"label", std::string(score_label(score))}, {"text", text}});
  return {{"version", r.version}, {"preamble", r.preamble}, {"criteria", criteria}};
}

}  // namespace detail

// Registers the API on `server`. `service` and `rubric` must outlive it.
inline void register_annotation_routes(httplib::Server& server, AnnotationService& service, const Rubric& rubric) {
  using detail::send_error, detail::send_json, detail::progress_json;

  // Resolves and authenticates the rater; writes an error response on failure.
  auto authorize = [&service](const httplib::Request& req, httplib::Response& res,
                              const std::string& rater) -> bool {
    if (rater.empty()) {
      send_error(res, 422, "validation_error", "missing rater");
      return false;
    }
    if (!service.has_rater(rater)) {
      send_error(res, 404, "not_found", "unknown rater '" + rater + "'");
      return false;
    }
    if (!service.authenticate(rater, detail::bearer_token(req))) {
      send_error(res, 401, "unauthorized", "token does not match rater '" + rater + "'");
      return false;
    }
    return true;
  };

  server.Get("/tasks/next", [&, authorize](const httplib::Request& req, httplib::Response& res) {
    const auto rater = req.get_param_value("rater");
    if (!authorize(req, res, rater)) return;
    const auto next = service.next_task(rater);
    if (next.done()) {
      send_json(res, 200, {{"status", "done"}, {"progress", progress_json(next.progress)}});
      return;
    }
    send_json(res, 200,
              {{"status", "task"},
               {"task", detail::task_json(*next.dossier)},
               {"rubric", detail::rubric_json(rubric)},
               {"progress", progress_json(next.progress)}});
  });

  server.Get("/progress", [&, authorize](const httplib::Request& req, httplib::Response& res) {
    const auto rater = req.get_param_value("rater");
    if (!authorize(req, res, rater)) return;
    send_json(res, 200, {{"rater_id", rater}, {"progress", progress_json(service.progress(rater))}});
  });

  server.Post("/ratings", [&, authorize](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      send_error(res, 400, "bad_request", "body must be a JSON object");
      return;
    }
    const auto rater = body.value("rater_id", std::string{});
    if (!authorize(req, res, rater)) return;
    RatingSubmission sub;
    sub.rater_id = rater;
    sub.company_id = body.value("company_id", std::string{});
    auto month = parse_year_month(body.value("month", std::string{}));
    if (sub.company_id.empty() || !month) {
      send_error(res, 422, "validation_error", "company_id and month (YYYY-MM) are required");
      return;
    }
    sub.month = *month;
    if (!body.contains("score") || !body["score"].is_number_integer()) {
      send_error(res, 422, "validation_error", "score must be an integer from 1 to 5");
      return;
    }
    sub.score = body["score"].get<int>();
    try {
      const auto p = service.submit(sub);
      send_json(res, 200, {{"status", "ok"}, {"progress", progress_json(p)}});
    } catch (const AnnotationError& e) {
      send_error(res, detail::http_status(e.code()), to_string(e.code()), e.what(), e.details());
    }
  });

  server.Get("/export", [&](const httplib::Request& req, httplib::Response& res) {
    if (!service.is_admin(detail::bearer_token(req))) {
      send_error(res, 401, "unauthorized", "export requires the admin token");
      return;
    }
    try {
      const auto ex = service.export_assessments();
      auto assessments = nlohmann::json::array();
      for (const auto& h : ex.assessments) assessments.push_back(to_json(h));
      send_json(res, 200,
                {{"assessments", assessments},
                 {"raters", ex.raters},
                 {"kappa", ex.kappa ? nlohmann::json(*ex.kappa) : nlohmann::json()},
                 {"agreement", ex.agreement}});
    } catch (const AnnotationError& e) {
      send_error(res, detail::http_status(e.code()), to_string(e.code()), e.what(), e.details());
    }
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const AnnotationError& e) {
      send_error(res, detail::http_status(e.code()), to_string(e.code()), e.what(), e.details());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  });
}

}  // namespace discmon
