#pragma once

// Disclosure feed parsing, periodic-report filtering and token estimates.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "discmon/common.hpp"

namespace discmon {

enum class ReportType {
  kTimely,
  kFairReport,
  kBusinessReport,
  kSemiAnnualReport,
  kQuarterlyReport,
  kOtherPeriodic,
};

inline std::string_view to_string(ReportType t) {
  switch (t) {
    case ReportType::kTimely: return "timely";
    case ReportType::kFairReport: return "fair_report";
    case ReportType::kBusinessReport: return "business_report";
    case ReportType::kSemiAnnualReport: return "semi_annual_report";
    case ReportType::kQuarterlyReport: return "quarterly_report";
    case ReportType::kOtherPeriodic: return "other_periodic";
  }
  return "timely";
}

inline std::optional<ReportType> parse_report_type(std::string_view s) {
  for (auto t : {ReportType::kTimely, ReportType::kFairReport, ReportType::kBusinessReport,
                 ReportType::kSemiAnnualReport, ReportType::kQuarterlyReport,
                 ReportType::kOtherPeriodic})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

struct Disclosure {
  std::string company_id;
  std::string company_name;
  Timestamp disclosed_at;
  std::string title;
  std::string body;
  std::string category;
  ReportType report_type = ReportType::kTimely;

  bool operator==(const Disclosure&) const = default;
};

// One entry as delivered by a source adapter. `malformed` is set when the
// adapter could not even split the entry into fields.
struct RawEntry {
  std::map<std::string, std::string> fields;
  std::optional<std::string> malformed;
};

struct FeedDocument {
  std::string source_id;
  std::vector<RawEntry> records;  // feed order
};

class FeedFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EntryError {
  size_t index = 0;  // zero-based position in the feed
  std::string message;
};

struct ParseResult {
  std::vector<Disclosure> records;
  std::vector<EntryError> errors;
  size_t entry_count = 0;
};

// Maps category / title keywords to report types. Rules are tried in order
// against the category first, then the title; no hit means timely.
class ReportTypeClassifier {
 public:
  struct Rule {
    std::string keyword;  // matched case-insensitively (ASCII folding)
    ReportType type;
  };

  ReportTypeClassifier() : rules_(default_rules()) {}
  explicit ReportTypeClassifier(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  static std::vector<Rule> default_rules() {
    return {
        {"semi-annual report", ReportType::kSemiAnnualReport},
        {"semiannual report", ReportType::kSemiAnnualReport},
        {"half-year report", ReportType::kSemiAnnualReport},
        {"반기보고서", ReportType::kSemiAnnualReport},
        {"quarterly report", ReportType::kQuarterlyReport},
        {"분기보고서", ReportType::kQuarterlyReport},
        {"business report", ReportType::kBusinessReport},
        {"annual report", ReportType::kBusinessReport},
        {"사업보고서", ReportType::kBusinessReport},
        {"fair report", ReportType::kFairReport},
        {"fair disclosure", ReportType::kFairReport},
        {"공정공시", ReportType::kFairReport},
        {"audit report", ReportType::kOtherPeriodic},
        {"감사보고서", ReportType::kOtherPeriodic},
    };
  }

  // {"rules": [{"keyword": "...", "type": "quarterly_report"}, ...]}
  static ReportTypeClassifier from_json(const nlohmann::json& j) {
    std::vector<Rule> rules;
    for (const auto& r : j.at("rules")) {
      auto type = parse_report_type(r.at("type").get<std::string>());
      if (!type) throw std::invalid_argument("unknown report type: " + r.at("type").dump());
      rules.push_back({r.at("keyword").get<std::string>(), *type});
    }
    return ReportTypeClassifier(std::move(rules));
  }

  ReportType classify(std::string_view category, std::string_view title) const {
    const auto cat = to_lower_ascii(category);
    for (const auto& r : rules_)
      if (cat.find(to_lower_ascii(r.keyword)) != std::string::npos) return r.type;
    const auto ttl = to_lower_ascii(title);
    for (const auto& r : rules_)
      if (ttl.find(to_lower_ascii(r.keyword)) != std::string::npos) return r.type;
    return ReportType::kTimely;
  }

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

struct FeedOptions {
  ReportTypeClassifier classifier;
  std::string zone = "Asia/Seoul";
  int utc_offset_minutes = 9 * 60;
};

// Splits a raw document into entries. Implement this to plug in another source.
class FeedAdapter {
 public:
  virtual ~FeedAdapter() = default;
  virtual FeedDocument read(std::string_view raw, std::string source_id) const = 0;
};

// One JSON object per line; blank lines are ignored.
class JsonLinesFeedAdapter final : public FeedAdapter {
 public:
  FeedDocument read(std::string_view raw, std::string source_id) const override {
    if (!is_valid_utf8(raw)) throw FeedFormatError("feed is not valid UTF-8");
    FeedDocument doc{std::move(source_id), {}};
    size_t pos = 0;
    while (pos <= raw.size()) {
      auto nl = raw.find('\n', pos);
      if (nl == std::string_view::npos) nl = raw.size();
      auto line = trim(raw.substr(pos, nl - pos));
      pos = nl + 1;
      if (line.empty()) continue;
      RawEntry entry;
      auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.is_object()) {
        entry.malformed = "entry is not a JSON object";
      } else {
        for (const auto& [key, value] : j.items()) {
          if (value.is_string())
            entry.fields[key] = value.get<std::string>();
          else if (!value.is_null())
            entry.fields[key] = value.dump();
        }
      }
      doc.records.push_back(std::move(entry));
    }
    return doc;
  }
};

enum class FeedFormat { kJsonLines };

inline std::optional<FeedFormat> parse_feed_format(std::string_view tag) {
  if (tag == "jsonl" || tag == "json-lines") return FeedFormat::kJsonLines;
  return std::nullopt;
}

// Normalizes adapter output into disclosures; never drops an entry silently.
inline ParseResult normalize_feed(const FeedDocument& doc, const FeedOptions& options = {}) {
  ParseResult out;
  out.entry_count = doc.records.size();
  for (size_t i = 0; i < doc.records.size(); ++i) {
    const auto& e = doc.records[i];
    if (e.malformed) {
      out.errors.push_back({i, *e.malformed});
      continue;
    }
    auto field = [&](const char* key) -> std::string {
      auto it = e.fields.find(key);
      return it == e.fields.end() ? std::string{} : std::string(trim(it->second));
    };
    std::vector<std::string> missing;
    for (const char* key : {"company_id", "date", "title"})
      if (field(key).empty()) missing.emplace_back(key);
    if (!missing.empty()) {
      std::string msg = "missing required field(s):";
      for (const auto& m : missing) msg += " " + m;
      out.errors.push_back({i, msg});
      continue;
    }
    auto date = parse_date(field("date"));
    if (!date) {
      out.errors.push_back({i, "invalid date '" + field("date") + "'"});
      continue;
    }
    Timestamp ts{*date, 0, 0};
    if (auto t = field("time"); !t.empty()) {
      auto hm = parse_time(t);
      if (!hm) {
        out.errors.push_back({i, "invalid time '" + t + "'"});
        continue;
      }
      ts.hour = hm->first;
      ts.minute = hm->second;
    }
    Disclosure d;
    d.company_id = field("company_id");
    d.company_name = field("company_name");
    if (d.company_name.empty()) d.company_name = d.company_id;
    d.disclosed_at = ts;
    d.title = field("title");
    d.body = field("body");
    d.category = field("category");
    d.report_type = options.classifier.classify(d.category, d.title);
    out.records.push_back(std::move(d));
  }
  return out;
}

inline ParseResult parse_feed(std::string_view raw, const FeedAdapter& adapter,
                              const FeedOptions& options = {}, std::string source_id = {}) {
  return normalize_feed(adapter.read(raw, std::move(source_id)), options);
}

inline ParseResult parse_feed(std::string_view raw, FeedFormat format,
                              const FeedOptions& options = {}, std::string source_id = {}) {
  switch (format) {
    case FeedFormat::kJsonLines:
      return parse_feed(raw, JsonLinesFeedAdapter{}, options, std::move(source_id));
  }
  throw FeedFormatError("unsupported feed format");
}

inline std::vector<Disclosure> filter_timely(const std::vector<Disclosure>& items) {
  std::vector<Disclosure> out;
  std::copy_if(items.begin(), items.end(), std::back_inserter(out),
               [](const Disclosure& d) { return d.report_type == ReportType::kTimely; });
  return out;
}

// Number of Unicode code points (UTF-8 lead bytes).
inline size_t count_code_points(std::string_view text) {
  return static_cast<size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

// ceil(code points / 4). Statistics and budget warnings only.
inline size_t estimate_tokens(std::string_view text) { return (count_code_points(text) + 3) / 4; }

struct TokenStats {
  size_t documents = 0;
  size_t total_tokens = 0;
  size_t max_tokens = 0;

  double mean() const { return documents == 0 ? 0.0 : double(total_tokens) / double(documents); }
};

// Token statistics split into timely and periodic disclosures.
inline std::pair<TokenStats, TokenStats> token_statistics(const std::vector<Disclosure>& items) {
  TokenStats timely, periodic;
  for (const auto& d : items) {
    auto& s = d.report_type == ReportType::kTimely ? timely : periodic;
    const auto n = estimate_tokens(d.title) + estimate_tokens(d.body);
    ++s.documents;
    s.total_tokens += n;
    s.max_tokens = std::max(s.max_tokens, n);
  }
  return {timely, periodic};
}

inline nlohmann::json to_json(const Disclosure& d) {
  return {{"company_id", d.company_id},
          {"company_name", d.company_name},
          {"date", to_string(d.disclosed_at.date)},
          {"time", time_string(d.disclosed_at)},
          {"title", d.title},
          {"body", d.body},
          {"category", d.category},
          {"report_type", std::string(to_string(d.report_type))}};
}

inline Disclosure disclosure_from_json(const nlohmann::json& j) {
  Disclosure d;
  d.company_id = j.at("company_id").get<std::string>();
  d.company_name = j.value("company_name", d.company_id);
  auto date = parse_date(j.at("date").get<std::string>());
  auto hm = parse_time(j.value("time", std::string("00:00")));
  if (!date || !hm) throw std::invalid_argument("invalid disclosure timestamp");
  d.disclosed_at = {*date, hm->first, hm->second};
  d.title = j.at("title").get<std::string>();
  d.body = j.value("body", std::string{});
  d.category = j.value("category", std::string{});
  auto rt = parse_report_type(j.value("report_type", std::string("timely")));
  if (!rt) throw std::invalid_argument("invalid report_type");
  d.report_type = *rt;
  return d;
}

}  // namespace discmon
