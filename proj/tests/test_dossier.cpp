#include <random>
#include <set>

#include <gtest/gtest.h>

#include "discmon/dossier.hpp"
#include "fixtures.hpp"

using namespace discmon;

namespace {

CompanySummary item(const std::string& company, Timestamp ts, const std::string& title = "t") {
  return {company, company, {ts, title, "Summary of " + title + "."}};
}

Timestamp at(int y, int m, int d, int hh = 9, int mm = 0) { return {{y, m, d}, hh, mm}; }

std::vector<DisclosureSummary> june_days(int first, int last) {
  std::vector<DisclosureSummary> out;
  for (int d = first; d <= last; ++d) out.push_back({at(2023, 6, d), "day " + std::to_string(d), "s"});
  return out;
}

// Entry i survives when fewer than `limit` entries come after it.
template <typename T>
std::vector<T> oracle_cap(const std::vector<T>& v, size_t limit) {
  std::vector<T> out;
  for (size_t i = 0; i < v.size(); ++i)
    if (v.size() - i - 1 < limit) out.push_back(v[i]);
  return out;
}

}  // namespace

TEST(GroupByCompanyMonth, Partition) {
  EXPECT_TRUE(group_by_company_month({}).empty());
  const auto b = group_by_company_month({item("A", at(2023, 6, 30)), item("A", at(2023, 7, 1)), item("B", at(2023, 6, 2))});
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.count({"A", {2023, 6}}), 1u);
  EXPECT_EQ(b.count({"A", {2023, 7}}), 1u);
}

TEST(GroupByCompanyMonth, CjcgvJuneIsOneBucket) {
  const auto b = group_by_company_month(fixtures::cjcgv_summaries());
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b.begin()->first, (CompanyMonth{"079160", {2023, 6}}));
  EXPECT_EQ(b.begin()->second.size(), 7u);
}

TEST(GroupByCompanyMonth, SortsAndKeepsFeedOrderOnTies) {
  const auto b = group_by_company_month({item("A", at(2023, 6, 9), "late"), item("A", at(2023, 6, 1), "x"),
                                         item("A", at(2023, 6, 1), "y")});
  const auto& v = b.at({"A", {2023, 6}});
  EXPECT_EQ(v[0].item.title, "x");
  EXPECT_EQ(v[1].item.title, "y");
  EXPECT_EQ(v[2].item.title, "late");
}

TEST(CapMostRecent, KeepsSecondHalfOfJune) {
  const auto capped = cap_most_recent(june_days(1, 30), 15);
  ASSERT_EQ(capped.size(), 15u);
  EXPECT_EQ(capped.front().disclosed_at.date, (Date{2023, 6, 16}));
  EXPECT_EQ(capped.back().disclosed_at.date, (Date{2023, 6, 30}));
}

TEST(CapMostRecent, UnderLimitIsIdentity) {
  const auto seven = june_days(1, 7);
  EXPECT_EQ(cap_most_recent(seven, 15), seven);
}

TEST(CapMostRecent, SixteenDropsTheFirst) {
  const auto sixteen = june_days(1, 16);
  const auto capped = cap_most_recent(sixteen, 15);
  EXPECT_EQ(capped, oracle_cap(sixteen, 15));
  EXPECT_EQ(capped, std::vector<DisclosureSummary>(sixteen.begin() + 1, sixteen.end()));
}

TEST(CapMostRecent, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 300; ++round) {
    std::vector<DisclosureSummary> v;
    for (size_t i = 0; i < rng() % 40; ++i) v.push_back({at(2023, 6, 1 + int(rng() % 30)), std::to_string(i), "s"});
    std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.disclosed_at < b.disclosed_at; });
    const size_t limit = 1 + rng() % 20;
    ASSERT_EQ(cap_most_recent(v, limit), oracle_cap(v, limit));
  }
}

TEST(CapMostRecent, RejectsUnsortedInput) {
  auto v = june_days(1, 5);
  std::swap(v[1], v[3]);
  EXPECT_THROW(cap_most_recent(v, 15), ContractViolation);
  EXPECT_THROW(cap_most_recent(june_days(1, 3), 0), ContractViolation);
}

TEST(BuildDossier, CjcgvJune) {
  const auto d = fixtures::cjcgv_dossier();
  EXPECT_EQ(d.entries.size(), 7u);
  EXPECT_EQ(to_string(d.entries.front().disclosed_at), "2023-06-13 16:30");
  EXPECT_EQ(d.company_name, "CJ CGV");
  const auto text = render_dossier(d);
  EXPECT_TRUE(text.starts_with("Company: CJ CGV (079160)\nMonth: 2023-06\n"));
  EXPECT_NE(text.find("\nDate: 2023-06-13\nTime: 16:30\nDetails: Additional Listing (Domestic CB Conversion): "),
            std::string::npos);
  size_t rows = 0;
  for (size_t p = text.find("\nDate: "); p != std::string::npos; p = text.find("\nDate: ", p + 1)) ++rows;
  EXPECT_EQ(rows, 7u);
}

TEST(BuildDossier, EdgeCases) {
  EXPECT_FALSE(build_dossier("A", {2023, 6}, {}).has_value());
  const auto one = build_dossier("A", {2023, 6}, june_days(4, 4));
  ASSERT_TRUE(one.has_value());
  EXPECT_EQ(one->entries.size(), 1u);
  EXPECT_EQ(one->company_name, "A");

  auto two_months = june_days(29, 30);
  two_months.push_back({at(2023, 7, 1), "july", "s"});
  EXPECT_THROW(build_dossier("A", {2023, 6}, two_months), ContractViolation);
  EXPECT_THROW(build_dossier("A", {2023, 6}, june_days(1, 16)), ContractViolation);
  auto unsorted = june_days(1, 3);
  std::swap(unsorted[0], unsorted[2]);
  EXPECT_THROW(build_dossier("A", {2023, 6}, unsorted), ContractViolation);
  auto blank = june_days(1, 1);
  blank[0].summary = "  ";
  EXPECT_THROW(build_dossier("A", {2023, 6}, blank), ContractViolation);
}

TEST(BuildDossiers, ListsSkippedMonths) {
  const auto r = build_dossiers({item("A", at(2023, 4, 2)), item("A", at(2023, 6, 2)), item("B", at(2023, 5, 9))});
  ASSERT_EQ(r.dossiers.size(), 3u);
  EXPECT_EQ(r.skipped, (std::vector<CompanyMonth>{{"A", {2023, 5}}, {"B", {2023, 4}}, {"B", {2023, 6}}}));
  const auto wider = build_dossiers({item("A", at(2023, 4, 2))}, 15, std::pair{YearMonth{2023, 3}, YearMonth{2023, 4}},
                                    {"Z"});
  EXPECT_EQ(wider.dossiers.size(), 1u);
  EXPECT_EQ(wider.skipped, (std::vector<CompanyMonth>{{"A", {2023, 3}}, {"Z", {2023, 3}}, {"Z", {2023, 4}}}));
  EXPECT_TRUE(build_dossiers({}).dossiers.empty());
}

TEST(BuildDossiers, LosesOnlyTheOldestAndNeverDuplicates) {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 50; ++round) {
    std::vector<CompanySummary> items;
    for (size_t i = 0; i < 1 + rng() % 200; ++i)
      items.push_back(item(std::string(1, char('A' + rng() % 3)), at(2023, 1 + int(rng() % 3), 1 + int(rng() % 28),
                                                                      int(rng() % 24), int(rng() % 60)),
                           std::to_string(i)));
    const auto r = build_dossiers(items, 15);
    std::set<std::string> kept;
    size_t total = 0;
    for (const auto& d : r.dossiers) {
      ASSERT_LE(d.entries.size(), 15u);
      for (const auto& e : d.entries) kept.insert(d.company_id + "|" + e.title);
      total += d.entries.size();
    }
    ASSERT_EQ(kept.size(), total);
    ASSERT_EQ(total + r.dropped_by_cap, items.size());
    // Every dropped item is older than (or tied and earlier than) everything kept in its month.
    for (const auto& [key, bucket] : group_by_company_month(items)) {
      const auto capped = cap_most_recent(bucket, 15);
      for (size_t i = 0; i + capped.size() < bucket.size(); ++i)
        ASSERT_FALSE(kept.contains(key.company_id + "|" + bucket[i].item.title));
    }
  }
}

TEST(Dossier, JsonRoundTrip) {
  const auto d = fixtures::cjcgv_dossier();
  EXPECT_EQ(dossier_from_json(to_json(d)), d);
}
