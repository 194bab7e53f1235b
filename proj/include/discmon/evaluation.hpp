#pragma once

// Joins model ratings with human consensus, applies the adjustment
// conditions and renders the summary grid, per-company and histogram outputs.

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "discmon/adjustment.hpp"
#include "discmon/dossier.hpp"
#include "discmon/metrics.hpp"
#include "discmon/rating.hpp"

namespace discmon {

struct HumanAssessment {
  std::string company_id;
  YearMonth month;
  std::array<int, 2> expert_scores{3, 3};
  int consensus = 3;

  static HumanAssessment from_experts(std::string company_id, YearMonth month, int e1, int e2) {
    return {std::move(company_id), month, {e1, e2}, aggregate_human(e1, e2)};
  }

  CompanyMonth key() const { return {company_id, month}; }
  bool operator==(const HumanAssessment&) const = default;
};

inline nlohmann::json to_json(const HumanAssessment& h) {
  return {{"company_id", h.company_id},
          {"month", to_string(h.month)},
          {"expert_scores", {h.expert_scores[0], h.expert_scores[1]}},
          {"consensus", h.consensus}};
}

inline HumanAssessment human_from_json(const nlohmann::json& j) {
  auto month = parse_year_month(j.at("month").get<std::string>());
  if (!month) throw std::invalid_argument("invalid assessment month");
  const auto& scores = j.at("expert_scores");
  if (!scores.is_array() || scores.size() != 2) throw std::invalid_argument("expected exactly two expert scores");
  auto h = HumanAssessment::from_experts(j.at("company_id").get<std::string>(), *month, scores[0].get<int>(),
                                         scores[1].get<int>());
  if (j.contains("consensus") && j["consensus"].get<int>() != h.consensus)
    throw std::invalid_argument("consensus does not match expert scores for " + to_string(h.key()));
  return h;
}

class JoinError : public std::runtime_error {
 public:
  explicit JoinError(std::vector<std::string> offending)
      : std::runtime_error(describe(offending)), offending_(std::move(offending)) {}
  const std::vector<std::string>& offending() const { return offending_; }

 private:
  static std::string describe(const std::vector<std::string>& keys) {
    std::string s = "ratings and assessments do not join (" + std::to_string(keys.size()) + " problem(s)):";
    for (size_t i = 0; i < keys.size() && i < 20; ++i) s += " " + keys[i] + ";";
    return s;
  }
  std::vector<std::string> offending_;
};

struct Histogram {
  std::array<size_t, 5> counts{};

  void add(int score) { ++counts.at(static_cast<size_t>(score - 1)); }
  size_t total() const { return std::accumulate(counts.begin(), counts.end(), size_t{0}); }
  bool operator==(const Histogram&) const = default;
};

struct EvaluationInput {
  std::vector<SentimentRating> ratings;  // unadjusted
  std::vector<RatingFailure> failures;
  std::vector<HumanAssessment> humans;
  std::vector<Condition> conditions{kAllConditions.begin(), kAllConditions.end()};
  Condition per_company_condition = Condition::kC2;
  std::vector<CompanyMonth> skipped_months;
  std::map<std::string, std::string> company_names;
};

struct EvaluationReport {
  std::vector<Condition> conditions;
  std::vector<std::string> models;
  std::map<std::pair<Condition, std::string>, AgreementSummary> per_condition;
  Condition per_company_condition = Condition::kC2;
  std::map<std::pair<std::string, std::string>, AgreementSummary> per_company;  // (model, company)
  std::map<std::string, Histogram> distributions;                                // "human", "<model>/<C>"
  std::vector<CompanyMonth> skipped_months;
  std::vector<RatingFailure> failures;
  std::map<std::string, std::string> company_names;
};

inline std::string distribution_source(const std::string& model, Condition c) {
  return model + "/" + std::string(to_string(c));
}

inline EvaluationReport run_evaluation(const EvaluationInput& in) {
  std::vector<std::string> problems;
  std::map<CompanyMonth, const HumanAssessment*> humans;
  for (const auto& h : in.humans)
    if (!humans.emplace(h.key(), &h).second) problems.push_back("duplicate assessment " + to_string(h.key()));

  // model -> key -> rating (nullptr marks a recorded failure)
  std::map<std::string, std::map<CompanyMonth, const SentimentRating*>> by_model;
  for (const auto& r : in.ratings) {
    if (r.condition != Condition::kC1 || r.original_score)
      problems.push_back("already adjusted rating " + r.model_id + ":" + to_string(r.key()));
    if (!by_model[r.model_id].emplace(r.key(), &r).second)
      problems.push_back("duplicate rating " + r.model_id + ":" + to_string(r.key()));
  }
  for (const auto& f : in.failures)
    if (!by_model[f.model_id].emplace(f.key(), nullptr).second)
      problems.push_back("duplicate rating " + f.model_id + ":" + to_string(f.key()));

  for (const auto& [model, keyed] : by_model) {
    for (const auto& [key, r] : keyed)
      if (!humans.contains(key)) problems.push_back("rating without assessment " + model + ":" + to_string(key));
    for (const auto& [key, h] : humans)
      if (!keyed.contains(key)) problems.push_back("assessment without rating " + model + ":" + to_string(key));
  }
  if (!problems.empty()) throw JoinError(std::move(problems));

  EvaluationReport report;
  report.conditions = in.conditions;
  report.per_company_condition = in.per_company_condition;
  report.skipped_months = in.skipped_months;
  std::sort(report.skipped_months.begin(), report.skipped_months.end());
  report.failures = in.failures;
  std::sort(report.failures.begin(), report.failures.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.company_id, a.month) < std::tie(b.model_id, b.company_id, b.month);
  });
  report.company_names = in.company_names;

  auto& human_hist = report.distributions["human"];
  for (const auto& [key, h] : humans) human_hist.add(h->consensus);

  for (const auto& [model, keyed] : by_model) {
    report.models.push_back(model);
    auto paired = [&](Condition c) {
      PairedScores p;
      for (const auto& [key, r] : keyed)
        if (r) p.push_back(humans.at(key)->consensus, apply_condition(r->score, c));
      return p;
    };
    for (auto c : in.conditions) {
      const auto p = paired(c);
      auto& hist = report.distributions[distribution_source(model, c)];
      for (int s : p.model()) hist.add(s);
      if (p.empty()) continue;
      report.per_condition[{c, model}] = summarize_agreement(p);
    }
    std::map<std::string, PairedScores> per_company;
    for (const auto& [key, r] : keyed)
      if (r)
        per_company[key.company_id].push_back(humans.at(key)->consensus,
                                              apply_condition(r->score, in.per_company_condition));
    for (const auto& [company, p] : per_company) report.per_company[{model, company}] = summarize_agreement(p);
  }
  return report;
}

// Two decimals, halves rounded away from zero.
inline std::string format_fixed2(double v) {
  const double scaled = std::abs(v) * 100.0;
  const auto units = static_cast<long long>(std::floor(scaled + 0.5 + 1e-9));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", (v < 0 && units != 0) ? "-" : "", units / 100, units % 100);
  return buf;
}

inline std::string format_stat(const std::optional<double>& v) { return v ? format_fixed2(*v) : "NaN"; }

namespace detail {

inline std::string pad_right(std::string s, size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

inline std::string pad_left(std::string s, size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

inline std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

}  // namespace detail

// Grid of condition x model x (concordance, spearman, kendall).
inline std::string render_table_text(const EvaluationReport& r) {
  using detail::pad_left, detail::pad_right;
  size_t model_w = 5;
  for (const auto& m : r.models) model_w = std::max(model_w, m.size());
  std::ostringstream out;
  out << pad_right("Condition", 13) << pad_right("Model", model_w + 2) << pad_left("Concordance", 11)
      << pad_left("Spearman", 10) << pad_left("Kendall", 9) << pad_left("n", 7) << '\n';
  for (auto c : r.conditions) {
    for (const auto& m : r.models) {
      auto it = r.per_condition.find({c, m});
      if (it == r.per_condition.end()) continue;
      const auto& s = it->second;
      out << pad_right("Condition " + std::to_string(condition_number(c)), 13) << pad_right(m, model_w + 2)
          << pad_left(format_fixed2(s.concordance), 11) << pad_left(format_stat(s.spearman), 10)
          << pad_left(format_stat(s.kendall), 9) << pad_left(std::to_string(s.n), 7) << '\n';
    }
  }
  if (!r.skipped_months.empty()) {
    out << "\nSkipped months (no timely disclosures): " << r.skipped_months.size() << '\n';
    for (const auto& k : r.skipped_months) out << "  " << to_string(k) << '\n';
  }
  if (!r.failures.empty()) {
    out << "\nExcluded (no parseable model rating): " << r.failures.size() << '\n';
    for (const auto& f : r.failures) out << "  " << f.model_id << " " << to_string(f.key()) << ": " << f.error << '\n';
  }
  return out.str();
}

// Per-company grid at the per-company condition.
inline std::string render_per_company_text(const EvaluationReport& r) {
  using detail::pad_left, detail::pad_right;
  size_t name_w = 12;
  auto name_of = [&](const std::string& id) {
    auto it = r.company_names.find(id);
    return it == r.company_names.end() ? id : it->second;
  };
  for (const auto& [key, s] : r.per_company) name_w = std::max(name_w, name_of(key.second).size());
  std::ostringstream out;
  for (const auto& m : r.models) {
    out << "Model " << m << ", Condition " << condition_number(r.per_company_condition) << '\n';
    out << pad_right("Company Name", name_w + 2) << pad_left("Concordance", 11) << pad_left("Spearman", 10)
        << pad_left("Kendall", 9) << pad_left("n", 5) << '\n';
    for (const auto& [key, s] : r.per_company) {
      if (key.first != m) continue;
      out << pad_right(name_of(key.second), name_w + 2) << pad_left(format_fixed2(s.concordance), 11)
          << pad_left(format_stat(s.spearman), 10) << pad_left(format_stat(s.kendall), 9)
          << pad_left(std::to_string(s.n), 5) << '\n';
    }
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json summary_json(const AgreementSummary& s) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {{"n", s.n}, {"concordance", s.concordance}, {"spearman", opt(s.spearman)}, {"kendall", opt(s.kendall)}};
}

// One JSON record per line: condition summaries, then per-company summaries.
inline std::string render_structured(const EvaluationReport& r) {
  std::string out;
  for (auto c : r.conditions)
    for (const auto& m : r.models)
      if (auto it = r.per_condition.find({c, m}); it != r.per_condition.end()) {
        auto j = summary_json(it->second);
        j["kind"] = "condition";
        j["condition"] = std::string(to_string(c));
        j["model_id"] = m;
        out += j.dump() + "\n";
      }
  for (const auto& [key, s] : r.per_company) {
    auto j = summary_json(s);
    j["kind"] = "company";
    j["condition"] = std::string(to_string(r.per_company_condition));
    j["model_id"] = key.first;
    j["company_id"] = key.second;
    out += j.dump() + "\n";
  }
  return out;
}

// Histogram data: file name -> records, one {"source","score","count"} per line.
inline std::map<std::string, std::string> render_histograms(const EvaluationReport& r) {
  std::map<std::string, std::string> files;
  for (const auto& [source, h] : r.distributions) {
    std::string body;
    for (int s = 1; s <= 5; ++s)
      body += nlohmann::json{{"source", source}, {"score", s}, {"count", h.counts[size_t(s - 1)]}}.dump() + "\n";
    files[detail::file_safe(source) + ".records"] = std::move(body);
  }
  return files;
}

enum class ReportFormat { kTableText, kStructuredRecords, kHistogramData };

// Documents keyed by relative output path.
inline std::map<std::string, std::string> render_report(const EvaluationReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::kTableText:
      return {{"report.txt", render_table_text(r)}, {"per_company.txt", render_per_company_text(r)}};
    case ReportFormat::kStructuredRecords:
      return {{"report.records", render_structured(r)}};
    case ReportFormat::kHistogramData: {
      std::map<std::string, std::string> out;
      for (auto& [name, body] : render_histograms(r)) out["distributions/" + name] = std::move(body);
      return out;
    }
  }
  return {};
}

}  // namespace discmon
