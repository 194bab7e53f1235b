#pragma once

// Deterministic synthetic corpora: a multi-company disclosure feed with
// skipped months, and the skewed human/model fixture.

#include <array>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "discmon/dossier.hpp"
#include "discmon/evaluation.hpp"
#include "discmon/rating.hpp"

namespace discmon::synthetic {

struct FeedSpec {
  size_t companies = 50;
  YearMonth first{2022, 1};
  YearMonth last{2023, 5};
  size_t empty_slots = 35;  // company-months with no timely disclosure
  size_t max_per_month = 24;
  uint64_t seed = 20230628;
};

struct Feed {
  std::string jsonl;
  std::vector<CompanyMonth> empty_slots;  // sorted
  size_t timely_count = 0;
  size_t periodic_count = 0;
};

inline std::string company_id(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "K%03zu", i + 1);
  return buf;
}

namespace detail {

struct Event {
  const char* title;
  const char* sentence;
};

inline constexpr std::array<Event, 12> kEvents = {{
    {"Single Sales and Supply Contract", "The company signed a supply contract worth %d billion KRW, a record order that supports revenue growth."},
    {"Cash Dividend Decision", "The board approved a cash dividend of %d KRW per share, an increase from the prior year."},
    {"Treasury Stock Acquisition", "The company decided a buyback of %d billion KRW of treasury stock."},
    {"Facility Investment", "The company announced an expansion of production capacity with a %d billion KRW investment."},
    {"Preliminary Earnings", "Operating profit rose %d percent year on year on record sales."},
    {"Additional Listing", "The company additionally listed %d registered common shares following a bond conversion."},
    {"Change of Largest Shareholder", "The shareholding of the largest shareholder changed by %d shares."},
    {"Board Resolution", "The board held its regular meeting on day %d and resolved routine agenda items."},
    {"Lawsuit Filing", "A lawsuit seeking %d billion KRW in damages was filed against the company."},
    {"Provision of Collateral", "The company provided collateral of %d billion KRW for an affiliate's debt amid liquidity concern."},
    {"Preliminary Earnings", "Operating profit showed a decline of %d percent with a net loss for the quarter."},
    {"Bond Warning", "A bond of the company was designated for investment warning after a price decrease of %d percent."},
}};

inline constexpr std::array<const char*, 4> kPeriodicTitles = {"Quarterly Report", "Semi-Annual Report",
                                                               "Business Report", "Audit Report"};

}  // namespace detail

// One JSON record per line in the feed file layout. Periodic reports are
// interleaved (including in the empty slots, which therefore vanish only
// after filtering).
inline Feed make_feed(const FeedSpec& spec = {}) {
  std::mt19937_64 rng(spec.seed);
  auto pick = [&](uint64_t n) { return static_cast<size_t>(rng() % n); };
  const auto months = month_range(spec.first, spec.last);

  Feed feed;
  std::set<CompanyMonth> empty;
  while (empty.size() < std::min(spec.empty_slots, spec.companies * months.size()))
    empty.insert({company_id(pick(spec.companies)), months[pick(months.size())]});
  feed.empty_slots.assign(empty.begin(), empty.end());

  std::vector<std::pair<Timestamp, nlohmann::json>> records;
  for (size_t c = 0; c < spec.companies; ++c) {
    const auto id = company_id(c);
    const auto name = "Synthetic Industries " + std::to_string(c + 1);
    // Each company leans positive, neutral or negative.
    const size_t lean = pick(3);
    for (const auto& m : months) {
      const bool is_empty = empty.contains({id, m});
      const size_t timely = is_empty ? 0 : 1 + pick(spec.max_per_month);
      const size_t periodic = (m.month % 3 == 0 || is_empty) ? 1 : 0;
      for (size_t k = 0; k < timely + periodic; ++k) {
        Timestamp ts{{m.year, m.month, 1 + int(pick(size_t(days_in_month(m.year, m.month))))},
                     8 + int(pick(10)), int(pick(60))};
        nlohmann::json j = {{"company_id", id},
                            {"company_name", name},
                            {"date", to_string(ts.date)},
                            {"time", time_string(ts)}};
        if (k >= timely) {
          const auto* title = detail::kPeriodicTitles[pick(detail::kPeriodicTitles.size())];
          j["title"] = std::string(title) + " (" + to_string(m) + ")";
          j["category"] = title;
          j["body"] = std::string(title) + " for the period. " + std::string(400 + pick(400), 'x');
          ++feed.periodic_count;
        } else {
          size_t e = pick(detail::kEvents.size());
          if (lean == 0 && e >= 8 && pick(2) == 0) e = pick(5);
          if (lean == 2 && e < 5 && pick(2) == 0) e = 8 + pick(4);
          char body[256];
          std::snprintf(body, sizeof body, detail::kEvents[e].sentence, int(2 + pick(300)));
          j["title"] = detail::kEvents[e].title;
          j["category"] = "timely";
          j["body"] = std::string(body) + " Details follow in the attached filing.";
          ++feed.timely_count;
        }
        records.emplace_back(ts, std::move(j));
      }
    }
  }
  // Feed order: chronological, as a disclosure system would publish.
  std::stable_sort(records.begin(), records.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (auto& [ts, j] : records) feed.jsonl += j.dump() + "\n";
  return feed;
}

// Two synthetic experts reading the same dossier: keyword tally plus
// rater-specific deterministic noise, pulled strongly towards neutral.
inline HumanAssessment simulate_experts(const MonthlyDossier& d) {
  int pos = 0, neg = 0;
  for (const auto& e : d.entries) {
    const auto s = to_lower_ascii(e.summary);
    for (auto w : {"record", "increase", "buyback", "expansion", "rose"})
      if (s.find(w) != std::string::npos) ++pos;
    for (auto w : {"lawsuit", "concern", "loss", "warning"})
      if (s.find(w) != std::string::npos) ++neg;
  }
  const int net = pos - neg;
  const int base = net >= 6 ? 5 : net >= 3 ? 4 : net <= -6 ? 1 : net <= -3 ? 2 : 3;
  auto expert = [&](std::string_view rater) {
    const auto h = fnv1a64(std::string(rater) + to_string(d.key()));
    const int jitter = (h % 7 == 0) ? 1 : (h % 7 == 1) ? -1 : 0;
    return std::clamp(base + jitter, 1, 5);
  };
  return HumanAssessment::from_experts(d.company_id, d.month, expert("expert-a"), expert("expert-b"));
}

struct SkewedFixture {
  std::vector<HumanAssessment> humans;
  std::vector<SentimentRating> ratings;
};

// 815 items, 615 human consensus scores of 3; the model over-rates
// positives (+1 above human where human >= 4) and drifts up on neutrals.
inline SkewedFixture make_skewed_fixture(const std::string& model_id = "skewed-model") {
  // (human consensus, model score, count)
  static constexpr std::array<std::tuple<int, int, int>, 10> kCells = {{
      {1, 1, 35}, {1, 2, 5}, {2, 2, 75}, {2, 3, 5}, {3, 3, 430},
      {3, 4, 150}, {3, 2, 35}, {4, 5, 50}, {4, 4, 10}, {5, 5, 20},
  }};
  SkewedFixture f;
  size_t item = 0;
  for (const auto& [human, model, count] : kCells) {
    for (int k = 0; k < count; ++k, ++item) {
      const auto company = company_id(item % 50);
      const YearMonth month{2022 + int((item / 50) / 12), 1 + int((item / 50) % 12)};
      // Every fourth item the experts split by one point; floor keeps `human`.
      const int e2 = (item % 4 == 0 && human < 5) ? human + 1 : human;
      f.humans.push_back(HumanAssessment::from_experts(company, month, human, e2));
      SentimentRating r;
      r.company_id = company;
      r.month = month;
      r.score = model;
      r.rationale = "Synthetic rationale for score " + std::to_string(model) + ".";
      r.model_id = model_id;
      r.raw_response = render_rating(model, r.rationale);
      f.ratings.push_back(std::move(r));
    }
  }
  return f;
}

}  // namespace discmon::synthetic
