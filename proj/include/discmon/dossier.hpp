#pragma once

// Company-month grouping, recency cap and dossier rendering.

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "discmon/common.hpp"

namespace discmon {

inline constexpr size_t kDefaultRecencyCap = 15;

struct DisclosureSummary {
  Timestamp disclosed_at;
  std::string title;
  std::string summary;

  bool operator==(const DisclosureSummary&) const = default;
};

// A summary tagged with the company it belongs to.
struct CompanySummary {
  std::string company_id;
  std::string company_name;
  DisclosureSummary item;

  bool operator==(const CompanySummary&) const = default;
};

struct CompanyMonth {
  std::string company_id;
  YearMonth month;

  friend auto operator<=>(const CompanyMonth&, const CompanyMonth&) = default;
};

inline std::string to_string(const CompanyMonth& key) {
  return key.company_id + "/" + to_string(key.month);
}

struct MonthlyDossier {
  std::string company_id;
  std::string company_name;
  YearMonth month;
  std::vector<DisclosureSummary> entries;  // ascending by disclosed_at, 1..cap

  CompanyMonth key() const { return {company_id, month}; }
  bool operator==(const MonthlyDossier&) const = default;
};

// Buckets by (company, calendar month). Each bucket is sorted ascending by
// timestamp; equal timestamps keep input order.
inline std::map<CompanyMonth, std::vector<CompanySummary>> group_by_company_month(
    const std::vector<CompanySummary>& items) {
  std::map<CompanyMonth, std::vector<CompanySummary>> buckets;
  for (const auto& it : items)
    buckets[{it.company_id, it.item.disclosed_at.year_month()}].push_back(it);
  for (auto& [key, bucket] : buckets)
    std::stable_sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
      return a.item.disclosed_at < b.item.disclosed_at;
    });
  return buckets;
}

inline const Timestamp& timestamp_of(const DisclosureSummary& s) { return s.disclosed_at; }
inline const Timestamp& timestamp_of(const CompanySummary& s) { return s.item.disclosed_at; }

// Keeps the most recent `limit` entries: the suffix of length min(size, limit).
template <typename T>
std::vector<T> cap_most_recent(const std::vector<T>& entries, size_t limit = kDefaultRecencyCap) {
  if (limit == 0) throw ContractViolation("cap_most_recent: limit must be positive");
  auto unsorted = std::adjacent_find(entries.begin(), entries.end(), [](const T& a, const T& b) {
    return timestamp_of(b) < timestamp_of(a);
  });
  if (unsorted != entries.end())
    throw ContractViolation("cap_most_recent: entries are not sorted by timestamp");
  const auto keep = std::min(limit, entries.size());
  return std::vector<T>(entries.end() - static_cast<std::ptrdiff_t>(keep), entries.end());
}

// Returns nullopt for an empty month (no dossier, no rating query).
inline std::optional<MonthlyDossier> build_dossier(std::string company_id, YearMonth month,
                                                   std::vector<DisclosureSummary> entries,
                                                   std::string company_name = {},
                                                   size_t limit = kDefaultRecencyCap) {
  if (entries.empty()) return std::nullopt;
  if (entries.size() > limit)
    throw ContractViolation("build_dossier: " + std::to_string(entries.size()) +
                            " entries exceed the cap of " + std::to_string(limit));
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].disclosed_at.year_month() != month)
      throw ContractViolation("build_dossier: entry dated " + to_string(entries[i].disclosed_at) +
                              " is outside " + to_string(month));
    if (trim(entries[i].summary).empty())
      throw ContractViolation("build_dossier: empty summary at row " + std::to_string(i));
    if (i > 0 && entries[i].disclosed_at < entries[i - 1].disclosed_at)
      throw ContractViolation("build_dossier: entries are not sorted");
  }
  if (company_name.empty()) company_name = company_id;
  return MonthlyDossier{std::move(company_id), std::move(company_name), month, std::move(entries)};
}

// The "Details" cell: title followed by the summary.
inline std::string dossier_details(const DisclosureSummary& s) {
  return s.title.empty() ? s.summary : s.title + ": " + s.summary;
}

// Canonical prompt payload: one paragraph per entry with Date/Time/Details labels.
inline std::string render_dossier(const MonthlyDossier& d) {
  std::string out;
  out += "Company: " + d.company_name;
  if (d.company_name != d.company_id) out += " (" + d.company_id + ")";
  out += "\nMonth: " + to_string(d.month) + "\n";
  for (const auto& e : d.entries) {
    out += "\nDate: " + to_string(e.disclosed_at.date);
    out += "\nTime: " + time_string(e.disclosed_at);
    out += "\nDetails: " + dossier_details(e) + "\n";
  }
  return out;
}

struct DossierBuildResult {
  std::vector<MonthlyDossier> dossiers;  // sorted by (company_id, month)
  std::vector<CompanyMonth> skipped;     // company-months with no timely disclosure
  size_t dropped_by_cap = 0;
};

// group -> cap -> build over a period. Without an explicit period, the range
// spans the earliest to the latest month seen in the input. The company
// universe is every company present in the input plus `extra_companies`.
inline DossierBuildResult build_dossiers(const std::vector<CompanySummary>& items,
                                         size_t cap = kDefaultRecencyCap,
                                         std::optional<std::pair<YearMonth, YearMonth>> period = {},
                                         const std::vector<std::string>& extra_companies = {}) {
  DossierBuildResult out;
  auto buckets = group_by_company_month(items);
  std::map<std::string, std::string> companies;
  for (const auto& it : items) companies.emplace(it.company_id, it.company_name);
  for (const auto& c : extra_companies) companies.emplace(c, c);
  if (!period && !buckets.empty()) {
    auto [lo, hi] = std::minmax_element(buckets.begin(), buckets.end(), [](auto& a, auto& b) {
      return a.first.month < b.first.month;
    });
    period = std::pair{lo->first.month, hi->first.month};
  }
  if (!period) return out;
  for (const auto& [company_id, company_name] : companies) {
    for (const auto& month : month_range(period->first, period->second)) {
      auto it = buckets.find({company_id, month});
      if (it == buckets.end()) {
        out.skipped.push_back({company_id, month});
        continue;
      }
      auto capped = cap_most_recent(it->second, cap);
      out.dropped_by_cap += it->second.size() - capped.size();
      std::vector<DisclosureSummary> entries;
      entries.reserve(capped.size());
      for (auto& c : capped) entries.push_back(c.item);
      out.dossiers.push_back(
          *build_dossier(company_id, month, std::move(entries), company_name, cap));
    }
  }
  return out;
}

inline nlohmann::json to_json(const DisclosureSummary& s) {
  return {{"date", to_string(s.disclosed_at.date)},
          {"time", time_string(s.disclosed_at)},
          {"title", s.title},
          {"summary", s.summary}};
}

inline DisclosureSummary summary_from_json(const nlohmann::json& j) {
  auto date = parse_date(j.at("date").get<std::string>());
  auto hm = parse_time(j.value("time", std::string("00:00")));
  if (!date || !hm) throw std::invalid_argument("invalid summary timestamp");
  return {{*date, hm->first, hm->second},
          j.value("title", std::string{}),
          j.at("summary").get<std::string>()};
}

inline nlohmann::json to_json(const CompanySummary& s) {
  auto j = to_json(s.item);
  j["company_id"] = s.company_id;
  j["company_name"] = s.company_name;
  return j;
}

inline CompanySummary company_summary_from_json(const nlohmann::json& j) {
  auto id = j.at("company_id").get<std::string>();
  auto name = j.value("company_name", id);
  return {id, name, summary_from_json(j)};
}

inline nlohmann::json to_json(const MonthlyDossier& d) {
  auto rows = nlohmann::json::array();
  for (const auto& e : d.entries) rows.push_back(to_json(e));
  return {{"company_id", d.company_id},
          {"company_name", d.company_name},
          {"month", to_string(d.month)},
          {"entries", rows}};
}

inline MonthlyDossier dossier_from_json(const nlohmann::json& j) {
  auto month = parse_year_month(j.at("month").get<std::string>());
  if (!month) throw std::invalid_argument("invalid dossier month");
  std::vector<DisclosureSummary> entries;
  for (const auto& e : j.at("entries")) entries.push_back(summary_from_json(e));
  auto d = build_dossier(j.at("company_id").get<std::string>(), *month, std::move(entries),
                         j.value("company_name", std::string{}));
  if (!d) throw std::invalid_argument("dossier record has no entries");
  return *d;
}

inline nlohmann::json to_json(const CompanyMonth& k) {
  return {{"company_id", k.company_id}, {"month", to_string(k.month)}};
}

inline CompanyMonth company_month_from_json(const nlohmann::json& j) {
  auto month = parse_year_month(j.at("month").get<std::string>());
  if (!month) throw std::invalid_argument("invalid month");
  return {j.at("company_id").get<std::string>(), *month};
}

}  // namespace discmon
