#include <random>
#include <regex>

#include <gtest/gtest.h>

#include "discmon/ingestion.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace discmon;

namespace {

std::string feed_line(const std::string& company, const std::string& date, const std::string& title,
                      const std::string& category = "timely") {
  return nlohmann::json{{"company_id", company}, {"company_name", company}, {"date", date}, {"time", "09:00"},
                        {"title", title},        {"body", "Body text."},   {"category", category}}
             .dump();
}

Disclosure with_type(ReportType t, const std::string& title) {
  Disclosure d;
  d.company_id = "X";
  d.title = title;
  d.report_type = t;
  return d;
}

}  // namespace

TEST(ParseFeed, EmptyDocumentYieldsNothing) {
  const auto r = parse_feed("", FeedFormat::kJsonLines);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.entry_count, 0u);
  EXPECT_EQ(parse_feed("\n  \n", FeedFormat::kJsonLines).entry_count, 0u);
}

TEST(ParseFeed, CjcgvJuneFixtureKeepsFeedOrder) {
  const auto parsed = parse_feed(read_file(fixtures::data_path("cjcgv_june2023.feed.jsonl")), FeedFormat::kJsonLines);
  ASSERT_EQ(parsed.records.size(), 7u);
  EXPECT_TRUE(parsed.errors.empty());
  const auto& first = parsed.records.front();
  EXPECT_EQ(to_string(first.disclosed_at), "2023-06-13 16:30");
  EXPECT_EQ(first.company_name, "CJ CGV");
  EXPECT_EQ(first.title, "Additional Listing (Domestic CB Conversion)");
  EXPECT_EQ(to_string(parsed.records.back().disclosed_at), "2023-06-30 15:50");
  EXPECT_EQ(parsed.records[1].title, "Capital Increase Decision");
  for (size_t i = 1; i < parsed.records.size(); ++i)
    EXPECT_LE(parsed.records[i - 1].disclosed_at, parsed.records[i].disclosed_at);
  for (const auto& d : parsed.records) EXPECT_EQ(d.report_type, ReportType::kTimely);
}

TEST(ParseFeed, EntryWithoutDateIsReportedNotDropped) {
  const std::string line = R"({"company_id": "A", "title": "Loan Decision", "body": "x"})";
  const auto r = parse_feed(line, FeedFormat::kJsonLines);
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].index, 0u);
  EXPECT_NE(r.errors[0].message.find("date"), std::string::npos);
}

TEST(ParseFeed, EntryErrorsCarryTheirIndex) {
  std::string feed = feed_line("A", "2023-01-02", "ok") + "\n";
  feed += R"({"date": "2023-01-02", "title": "no company"})" "\n";
  feed += "not json at all\n";
  feed += feed_line("A", "2023-02-30", "bad day") + "\n";
  feed += R"({"company_id": "A", "date": "2023-01-02", "title": ""})" "\n";
  feed += R"({"company_id": "A", "date": "2023-01-02", "time": "25:00", "title": "bad time"})" "\n";
  feed += feed_line("B", "2023-01-03", "ok too") + "\n";
  const auto r = parse_feed(feed, FeedFormat::kJsonLines);
  EXPECT_EQ(r.entry_count, 7u);
  ASSERT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.errors.size(), 5u);
  std::vector<size_t> idx;
  for (const auto& e : r.errors) idx.push_back(e.index);
  EXPECT_EQ(idx, (std::vector<size_t>{1, 2, 3, 4, 5}));
  EXPECT_NE(r.errors[0].message.find("company_id"), std::string::npos);
  EXPECT_NE(r.errors[3].message.find("title"), std::string::npos);
}

TEST(ParseFeed, InvalidUtf8IsAFormatError) {
  std::string feed = feed_line("A", "2023-01-02", "ok");
  feed += "\xC3\x28";
  EXPECT_THROW(parse_feed(feed, FeedFormat::kJsonLines), FeedFormatError);
}

TEST(ParseFeed, KoreanTextSurvives) {
  const auto line = feed_line("005930", "2023-03-15", "주요사항보고서(자기주식취득결정)");
  const auto r = parse_feed(line, FeedFormat::kJsonLines);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].title, "주요사항보고서(자기주식취득결정)");
}

TEST(ParseFeed, RecordsPlusErrorsEqualEntries) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> shapes = {
      feed_line("A", "2023-01-02", "ok"), R"({"title": "x"})", "{", feed_line("B", "2022-13-01", "bad"),
      feed_line("C", "2022-12-31", "Quarterly Report", "Quarterly Report"), "[1,2,3]"};
  for (int round = 0; round < 200; ++round) {
    std::string feed;
    const size_t n = rng() % 20;
    for (size_t i = 0; i < n; ++i) feed += shapes[rng() % shapes.size()] + "\n";
    const auto r = parse_feed(feed, FeedFormat::kJsonLines);
    ASSERT_EQ(r.records.size() + r.errors.size(), r.entry_count);
    ASSERT_EQ(r.entry_count, n);
  }
}

TEST(ParseFeed, CustomAdapterPlugsIn) {
  // Pipe-separated rows: company|date|time|title
  struct PipeAdapter : FeedAdapter {
    FeedDocument read(std::string_view raw, std::string source) const override {
      FeedDocument doc{std::move(source), {}};
      std::string s(raw);
      std::stringstream ss(s);
      std::string line;
      while (std::getline(ss, line)) {
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, '|')) cols.push_back(c);
        RawEntry e;
        if (cols.size() != 4)
          e.malformed = "expected 4 columns";
        else
          e.fields = {{"company_id", cols[0]}, {"date", cols[1]}, {"time", cols[2]}, {"title", cols[3]}};
        doc.records.push_back(std::move(e));
      }
      return doc;
    }
  };
  const auto r = parse_feed("A|2023-06-01|09:10|Loan Decision\nbroken\n", PipeAdapter{});
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].company_name, "A");
  EXPECT_EQ(time_string(r.records[0].disclosed_at), "09:10");
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].index, 1u);
}

TEST(ReportTypeClassifier, DefaultKeywords) {
  const ReportTypeClassifier c;
  EXPECT_EQ(c.classify("Quarterly Report", ""), ReportType::kQuarterlyReport);
  EXPECT_EQ(c.classify("", "Semi-Annual Report (2023.06)"), ReportType::kSemiAnnualReport);
  EXPECT_EQ(c.classify("", "사업보고서 (2022.12)"), ReportType::kBusinessReport);
  EXPECT_EQ(c.classify("Fair Disclosure", "Preliminary earnings"), ReportType::kFairReport);
  EXPECT_EQ(c.classify("timely", "Capital Increase Decision"), ReportType::kTimely);
  EXPECT_EQ(c.classify("", ""), ReportType::kTimely);
  // Category wins over title.
  EXPECT_EQ(c.classify("business report", "Quarterly report"), ReportType::kBusinessReport);
}

TEST(ReportTypeClassifier, LoadsFromJson) {
  const auto c = ReportTypeClassifier::from_json(
      nlohmann::json::parse(R"({"rules": [{"keyword": "10-Q", "type": "quarterly_report"}]})"));
  EXPECT_EQ(c.classify("", "Form 10-Q"), ReportType::kQuarterlyReport);
  EXPECT_EQ(c.classify("", "Quarterly Report"), ReportType::kTimely);
  EXPECT_THROW(ReportTypeClassifier::from_json(
                   nlohmann::json::parse(R"({"rules": [{"keyword": "x", "type": "bogus"}]})")),
               std::invalid_argument);
}

TEST(ReportTypeClassifier, SampleKeywordFileMatchesBuiltIns) {
  const auto c = ReportTypeClassifier::from_json(
      nlohmann::json::parse(read_file(std::string(DISCMON_SOURCE_DIR) + "/samples/data/report_keywords.json")));
  const ReportTypeClassifier builtin;
  for (const auto* title : {"Quarterly Report", "반기보고서", "Business Report", "Audit Report", "Loan Decision"})
    EXPECT_EQ(c.classify("", title), builtin.classify("", title)) << title;
}

TEST(FilterTimely, DropsPeriodicKeepsOrder) {
  const std::vector<Disclosure> in = {with_type(ReportType::kTimely, "a"), with_type(ReportType::kQuarterlyReport, "q"),
                                      with_type(ReportType::kTimely, "b")};
  const auto out = filter_timely(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].title, "a");
  EXPECT_EQ(out[1].title, "b");
}

TEST(FilterTimely, IdentityAndComplement) {
  const std::vector<Disclosure> timely = {with_type(ReportType::kTimely, "a"), with_type(ReportType::kTimely, "b")};
  EXPECT_EQ(filter_timely(timely), timely);
  const std::vector<Disclosure> periodic = {
      with_type(ReportType::kFairReport, "f"), with_type(ReportType::kBusinessReport, "b"),
      with_type(ReportType::kSemiAnnualReport, "s"), with_type(ReportType::kOtherPeriodic, "o")};
  EXPECT_TRUE(filter_timely(periodic).empty());
}

TEST(FilterTimely, IdempotentSublistProjection) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 100; ++round) {
    std::vector<Disclosure> in;
    for (size_t i = 0; i < rng() % 30; ++i)
      in.push_back(with_type(static_cast<ReportType>(rng() % 6), std::to_string(i)));
    const auto once = filter_timely(in);
    ASSERT_EQ(filter_timely(once), once);
    // Sublist: every output element appears in the input, in order.
    size_t j = 0;
    for (const auto& d : once) {
      while (j < in.size() && !(in[j] == d)) ++j;
      ASSERT_LT(j, in.size());
      ++j;
    }
  }
}

TEST(EstimateTokens, FourCharactersPerToken) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens(std::string(400, 'a')), 100u);
  EXPECT_EQ(estimate_tokens(std::string(401, 'a')), 101u);
  EXPECT_EQ(estimate_tokens("abc"), 1u);
  // Code points, not bytes: 8 Hangul syllables are 24 bytes.
  EXPECT_EQ(estimate_tokens("자기주식취득결정"), 2u);
}

TEST(EstimateTokens, MonotoneUnderConcatenation) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab cd.,\xEA\xB0\x80";
  auto random_text = [&] {
    std::string s;
    for (size_t i = 0; i < rng() % 50; ++i) s += alphabet.substr(rng() % 7, 1);
    if (rng() % 3 == 0) s += "\xEA\xB0\x80";
    return s;
  };
  for (int round = 0; round < 500; ++round) {
    const auto a = random_text(), b = random_text();
    ASSERT_GE(estimate_tokens(a + b), std::max(estimate_tokens(a), estimate_tokens(b)));
  }
}

TEST(EstimateTokens, OrderingAgreesWithAWordPieceTokenizer) {
  // Pre-tokenizer in the style of byte-level BPE: words, numbers, punctuation.
  const std::regex piece(R"('s|'t|'re|'ve|'m|'ll|'d| ?[A-Za-z]+| ?[0-9]{1,3}| ?[^\sA-Za-z0-9]+|\s+)");
  auto exact = [&](const std::string& s) {
    return static_cast<int>(std::distance(std::sregex_iterator(s.begin(), s.end(), piece), std::sregex_iterator()));
  };
  std::vector<std::string> texts;
  for (const auto& d : fixtures::cjcgv_disclosures()) texts.push_back(d.body);
  const std::string base = fixtures::kCjcgvRationale;
  for (size_t k = 1; texts.size() < 20; ++k) texts.push_back(base.substr(0, std::min(base.size(), k * 37)));
  std::vector<int> est, ref;
  for (const auto& t : texts) {
    est.push_back(static_cast<int>(estimate_tokens(t)));
    ref.push_back(exact(t));
  }
  const auto tau = oracle::kendall_tau_b(est, ref);
  ASSERT_TRUE(tau.has_value());
  EXPECT_GE(*tau, 0.7);
}

TEST(TokenStatistics, SplitsTimelyAndPeriodic) {
  auto a = with_type(ReportType::kTimely, "abcd");
  a.body = std::string(8, 'x');
  auto b = with_type(ReportType::kQuarterlyReport, "");
  b.body = std::string(400, 'x');
  const auto [timely, periodic] = token_statistics({a, b, a});
  EXPECT_EQ(timely.documents, 2u);
  EXPECT_EQ(timely.total_tokens, 6u);
  EXPECT_DOUBLE_EQ(timely.mean(), 3.0);
  EXPECT_EQ(periodic.max_tokens, 100u);
}

TEST(Disclosure, JsonRoundTrip) {
  for (const auto& d : fixtures::cjcgv_disclosures()) EXPECT_EQ(disclosure_from_json(to_json(d)), d);
}
