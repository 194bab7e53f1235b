#include <random>

#include <gtest/gtest.h>

#include "discmon/pipeline.hpp"
#include "discmon/rating.hpp"
#include "fixtures.hpp"
#include "parser_corpus.hpp"

using namespace discmon;

namespace {

MonthlyDossier small_dossier(int rows) {
  std::vector<DisclosureSummary> e;
  for (int i = 0; i < rows; ++i) e.push_back({{{2023, 5, 1 + i}, 10, i}, "Title " + std::to_string(i), "Summary."});
  return *build_dossier("A", {2023, 5}, e, "Alpha");
}

std::shared_ptr<MockBackend> scripted(std::vector<std::string> replies) {
  // Replies in order; the last one repeats.
  auto next = std::make_shared<size_t>(0);
  return std::make_shared<MockBackend>([replies = std::move(replies), next](const CompletionRequest&,
                                                                           const ModelConfig&) {
    const auto i = std::min((*next)++, replies.size() - 1);
    return replies[i];
  });
}

}  // namespace

TEST(RatingPrompt, ContainsRubricAndRows) {
  const auto req = build_rating_prompt(fixtures::cjcgv_dossier(), default_rubric());
  for (int s = 1; s <= 5; ++s) {
    const auto tag = std::to_string(s) + " (" + std::string(score_label(s)) + ")";
    EXPECT_NE(req.system.find(tag), std::string::npos) << tag;
    EXPECT_NE(req.system.find(default_rubric().criteria.at(s)), std::string::npos);
  }
  EXPECT_NE(req.system.find("1 (Very Negative)"), std::string::npos);
  EXPECT_NE(req.system.find("5 (Very Positive)"), std::string::npos);
  EXPECT_NE(req.system.find("Score: <integer from 1 to 5> (<label>)\nReasons:"), std::string::npos);
  size_t rows = 0;
  for (auto p = req.user.find("\nDate: 2023-06-"); p != std::string::npos; p = req.user.find("\nDate: 2023-06-", p + 1))
    ++rows;
  EXPECT_EQ(rows, 7u);
  for (const auto& e : fixtures::cjcgv_dossier().entries) EXPECT_NE(req.user.find(e.summary), std::string::npos);
}

TEST(RatingPrompt, SingleRow) {
  const auto req = build_rating_prompt(small_dossier(1), default_rubric());
  EXPECT_EQ(req.user.find("\nDate: "), req.user.rfind("\nDate: "));
}

TEST(RatingPrompt, LengthIsScaffoldPlusRows) {
  const auto& rubric = default_rubric();
  const auto base = build_rating_prompt(small_dossier(1), rubric);
  for (int k = 2; k <= 15; ++k) {
    const auto d = small_dossier(k);
    const auto req = build_rating_prompt(d, rubric);
    EXPECT_EQ(req.system, base.system);
    size_t rows = 0;
    for (const auto& e : d.entries)
      rows += std::string("\nDate: \nTime: \nDetails: \n").size() + to_string(e.disclosed_at.date).size() +
              time_string(e.disclosed_at).size() + dossier_details(e).size();
    const size_t scaffold = std::string("Company: Alpha (A)\nMonth: 2023-05\n").size();
    EXPECT_EQ(req.user.size(), scaffold + rows);
    EXPECT_EQ(req, build_rating_prompt(d, rubric));
  }
}

TEST(RatingPrompt, InjectiveOnRowChanges) {
  std::mt19937_64 rng(17);
  const auto base = fixtures::cjcgv_dossier();
  const auto base_req = build_rating_prompt(base, default_rubric());
  for (int round = 0; round < 200; ++round) {
    auto d = base;
    auto& e = d.entries[rng() % d.entries.size()];
    switch (rng() % 3) {
      case 0: e.summary += std::string(1, char('a' + rng() % 26)); break;
      case 1: e.title = "T" + std::to_string(rng() % 1000); break;
      case 2: e.disclosed_at.minute = (e.disclosed_at.minute + 1 + int(rng() % 58)) % 60; break;
    }
    if (d == base) continue;
    ASSERT_NE(build_rating_prompt(d, default_rubric()), base_req);
  }
}

TEST(Rubric, AssetMatchesBuiltIn) {
  const auto asset = load_rubric(std::string(DISCMON_SOURCE_DIR) + "/assets/rubric/five_point_v1.json");
  EXPECT_EQ(asset, default_rubric());
  EXPECT_EQ(asset.version, "five-point-v1");
  EXPECT_EQ(rubric_from_json(to_json(asset)), asset);
}

TEST(Rubric, RejectsMissingCriteria) {
  auto j = to_json(default_rubric());
  j["criteria"].erase("4");
  EXPECT_THROW(rubric_from_json(j), ContractViolation);
}

class ParserCorpus : public ::testing::TestWithParam<corpus::Case> {};

TEST_P(ParserCorpus, Parses) {
  const auto failure = corpus::check(GetParam());
  EXPECT_TRUE(failure.empty()) << GetParam().name << ": " << failure;
}

INSTANTIATE_TEST_SUITE_P(Replies, ParserCorpus, ::testing::ValuesIn(corpus::cases()),
                         [](const auto& info) { return info.param.name; });

TEST(ParseRating, CorpusHasThirtyCases) { EXPECT_GE(corpus::cases().size(), 30u); }

TEST(ParseRating, RoundTrip) {
  std::mt19937_64 rng(23);
  const std::vector<std::string> words = {"revenue", "fell", "7.5%", "(Q2)", "debt", "rose;", "outlook",
                                          "stable,", "Reasons", "score", "2023", "CJ", "-", "KRW", "경영"};
  for (int round = 0; round < 2000; ++round) {
    std::string r;
    const size_t n = 1 + rng() % 25;
    for (size_t i = 0; i < n; ++i) {
      if (i) r += (rng() % 8 == 0) ? "\n" : " ";
      r += words[rng() % words.size()];
    }
    const int s = 1 + int(rng() % 5);
    const auto got = parse_rating(render_rating(s, r));
    ASSERT_EQ(got.score, s) << r;
    ASSERT_EQ(got.rationale, r);
  }
}

TEST(ParseRating, NeverReturnsOutOfRange) {
  std::mt19937_64 rng(29);
  const std::string alphabet = "0123456789 :()/-\n|*#abcScoreRating.";
  for (int round = 0; round < 5000; ++round) {
    std::string raw;
    for (size_t i = 0; i < rng() % 40; ++i) raw += alphabet[rng() % alphabet.size()];
    try {
      ASSERT_TRUE(is_valid_score(parse_rating(raw).score)) << raw;
    } catch (const RatingParseError&) {
    }
  }
}

TEST(RateDossier, MockNeutral) {
  Gateway g(std::make_shared<MockBackend>(
      [](const CompletionRequest&, const ModelConfig&) { return std::string("3 (Neutral) Reasons: stable"); }));
  const auto r = rate_dossier(small_dossier(2), default_rubric(), g, {});
  EXPECT_EQ(r.score, 3);
  EXPECT_EQ(r.rationale, "stable");
  EXPECT_EQ(r.model_id, "mock");
  EXPECT_EQ(r.raw_response, "3 (Neutral) Reasons: stable");
  EXPECT_EQ(r.key(), (CompanyMonth{"A", {2023, 5}}));
}

TEST(RateDossier, ReasksOnceThenSucceeds) {
  auto mock = scripted({"I cannot decide.", "Score: 4 (Positive)\nReasons: orders"});
  Gateway g(mock);
  const auto r = rate_dossier(small_dossier(1), default_rubric(), g, {});
  EXPECT_EQ(r.score, 4);
  EXPECT_EQ(mock->calls(), 2);
}

TEST(RateDossier, ScoreWithoutReasonsIsReasked) {
  auto mock = scripted({"4", "Score: 4\nReasons: orders"});
  Gateway g(mock);
  EXPECT_EQ(rate_dossier(small_dossier(1), default_rubric(), g, {}).rationale, "orders");
  EXPECT_EQ(mock->calls(), 2);
}

TEST(RateDossier, TwoFailuresRaiseWithRawReplies) {
  auto mock = scripted({"garbage", "more garbage"});
  Gateway g(mock);
  try {
    rate_dossier(small_dossier(1), default_rubric(), g, {});
    FAIL();
  } catch (const RatingError& e) {
    EXPECT_EQ(e.raw_responses(), (std::vector<std::string>{"garbage", "more garbage"}));
  }
  EXPECT_EQ(mock->calls(), 2);
}

TEST(RateDossier, RecordedCjcgvReplyIsNegative) {
  Gateway g(std::make_shared<CassetteBackend>(fixtures::data_path("cjcgv.cassette.jsonl"),
                                              CassetteBackend::Mode::kReplay));
  ModelConfig c;
  c.model_id = "recorded-rater";
  const auto r = rate_dossier(fixtures::cjcgv_dossier(), default_rubric(), g, c);
  EXPECT_EQ(r.score, 2);
  EXPECT_TRUE(r.rationale.starts_with("CJ CGV is making efforts"));
  EXPECT_EQ(r.model_id, "recorded-rater");
}

TEST(RateAll, FailureIsRecordedAndRunContinues) {
  Gateway g(std::make_shared<MockBackend>([](const CompletionRequest& r, const ModelConfig&) {
    return r.user.find("Company: Bad") != std::string::npos ? std::string("???") : std::string("Score: 3\nReasons: ok");
  }));
  auto good = small_dossier(1);
  auto bad = small_dossier(2);
  bad.company_id = "B";
  bad.company_name = "Bad";
  const auto out = rate_all({good, bad, good}, default_rubric(), g, {}, 2);
  ASSERT_EQ(out.ratings.size(), 2u);
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].company_id, "B");
  EXPECT_EQ(out.failures[0].raw_responses.size(), 2u);
}

TEST(SentimentRating, JsonAndAdjustment) {
  SentimentRating r;
  r.company_id = "A";
  r.month = {2023, 5};
  r.score = 5;
  r.rationale = "why";
  r.model_id = "m";
  r.raw_response = render_rating(5, "why");
  EXPECT_EQ(rating_from_json(to_json(r)), r);
  const auto adj = adjust_rating(r, Condition::kC4);
  EXPECT_EQ(adj.score, 4);
  EXPECT_EQ(adj.original_score, 5);
  EXPECT_EQ(rating_from_json(to_json(adj)), adj);
  EXPECT_THROW(adjust_rating(adj, Condition::kC2), ContractViolation);
  RatingFailure f{"A", {2023, 5}, "m", "bad", {"x"}};
  EXPECT_TRUE(is_failure_record(to_json(f)));
  EXPECT_FALSE(is_failure_record(to_json(r)));
}
