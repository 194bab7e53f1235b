#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "discmon/common.hpp"

namespace discmon {

// Rating adjustment conditions applied to model scores before comparison.
//   C1  no adjustment
//   C2  subtract 1 when the score is 4 or above
//   C3  add 1 when the score is 2 or below
//   C4  both rules, each tested against the original score
enum class Condition { kC1, kC2, kC3, kC4 };

inline constexpr std::array<Condition, 4> kAllConditions = {Condition::kC1, Condition::kC2,
                                                            Condition::kC3, Condition::kC4};

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kC1: return "C1";
    case Condition::kC2: return "C2";
    case Condition::kC3: return "C3";
    case Condition::kC4: return "C4";
  }
  return "C1";
}

inline int condition_number(Condition c) { return static_cast<int>(c) + 1; }

inline std::optional<Condition> parse_condition(std::string_view tag) {
  for (auto c : kAllConditions)
    if (to_string(c) == tag) return c;
  return std::nullopt;
}

inline constexpr bool is_valid_score(int s) { return s >= 1 && s <= 5; }

constexpr int apply_condition(int score, Condition c) {
  if (!is_valid_score(score)) throw ContractViolation("apply_condition: score outside 1..5");
  const bool lower_high = (c == Condition::kC2 || c == Condition::kC4) && score >= 4;
  const bool raise_low = (c == Condition::kC3 || c == Condition::kC4) && score <= 2;
  return score - (lower_high ? 1 : 0) + (raise_low ? 1 : 0);
}

}  // namespace discmon
