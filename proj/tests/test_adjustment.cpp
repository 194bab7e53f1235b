#include <set>

#include <gtest/gtest.h>

#include "discmon/adjustment.hpp"

using namespace discmon;

static_assert(apply_condition(5, Condition::kC4) == 4);
static_assert(apply_condition(1, Condition::kC3) == 2);

TEST(ApplyCondition, Examples) {
  EXPECT_EQ(apply_condition(4, Condition::kC2), 3);
  EXPECT_EQ(apply_condition(3, Condition::kC4), 3);
  EXPECT_EQ(apply_condition(2, Condition::kC3), 3);
}

TEST(ApplyCondition, TruthTable) {
  // Rows are scores 1..5; worked out by hand from the two rules.
  const int expected[4][5] = {
      {1, 2, 3, 4, 5},  // C1
      {1, 2, 3, 3, 4},  // C2
      {2, 3, 3, 4, 5},  // C3
      {2, 3, 3, 3, 4},  // C4
  };
  for (auto c : kAllConditions)
    for (int s = 1; s <= 5; ++s)
      EXPECT_EQ(apply_condition(s, c), expected[condition_number(c) - 1][s - 1]) << to_string(c) << " " << s;
}

TEST(ApplyCondition, Images) {
  auto image = [](Condition c) {
    std::set<int> out;
    for (int s = 1; s <= 5; ++s) out.insert(apply_condition(s, c));
    return out;
  };
  EXPECT_EQ(image(Condition::kC1), (std::set<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(image(Condition::kC2), (std::set<int>{1, 2, 3, 4}));
  EXPECT_EQ(image(Condition::kC3), (std::set<int>{2, 3, 4, 5}));
  EXPECT_EQ(image(Condition::kC4), (std::set<int>{2, 3, 4}));
}

TEST(ApplyCondition, DirectionalProperties) {
  for (int s = 1; s <= 5; ++s) {
    EXPECT_EQ(apply_condition(s, Condition::kC1), s);
    EXPECT_LE(apply_condition(s, Condition::kC2), s);
    EXPECT_GE(apply_condition(s, Condition::kC3), s);
    EXPECT_LE(std::abs(apply_condition(s, Condition::kC4) - s), 1);
    for (auto c : kAllConditions) EXPECT_TRUE(is_valid_score(apply_condition(s, c)));
  }
}

TEST(ApplyCondition, CombinedRuleAgreesWithEitherOrder) {
  // Neither rule moves a score into the other's range, so order cannot matter.
  for (int s = 1; s <= 5; ++s) {
    const int c4 = apply_condition(s, Condition::kC4);
    EXPECT_EQ(apply_condition(apply_condition(s, Condition::kC2), Condition::kC3), c4) << s;
    EXPECT_EQ(apply_condition(apply_condition(s, Condition::kC3), Condition::kC2), c4) << s;
  }
}

TEST(ApplyCondition, RejectsOutOfRange) {
  for (int s : {0, 6, -1, 100})
    for (auto c : kAllConditions) EXPECT_THROW(apply_condition(s, c), ContractViolation);
}

TEST(Condition, TagsRoundTrip) {
  for (auto c : kAllConditions) EXPECT_EQ(parse_condition(to_string(c)), c);
  EXPECT_FALSE(parse_condition("C5").has_value());
  EXPECT_FALSE(parse_condition("c1").has_value());
}
