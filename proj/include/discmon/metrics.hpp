#pragma once

// Agreement statistics between two raters (human consensus vs. model, or
// expert vs. expert) and the two-expert consensus rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "discmon/adjustment.hpp"
#include "discmon/common.hpp"

namespace discmon {

// Paired 1..5 scores; `human[i]` and `model[i]` rate the same item.
class PairedScores {
 public:
  PairedScores() = default;
  PairedScores(std::vector<int> human, std::vector<int> model) : human_(std::move(human)), model_(std::move(model)) {
    if (human_.size() != model_.size()) throw ContractViolation("PairedScores: sides differ in length");
    for (size_t i = 0; i < human_.size(); ++i)
      if (!is_valid_score(human_[i]) || !is_valid_score(model_[i]))
        throw ContractViolation("PairedScores: value outside 1..5 at index " + std::to_string(i));
  }

  void push_back(int human, int model) {
    if (!is_valid_score(human) || !is_valid_score(model)) throw ContractViolation("PairedScores: value outside 1..5");
    human_.push_back(human);
    model_.push_back(model);
  }

  size_t size() const { return human_.size(); }
  bool empty() const { return human_.empty(); }
  std::span<const int> human() const { return human_; }
  std::span<const int> model() const { return model_; }

 private:
  std::vector<int> human_;
  std::vector<int> model_;
};

// Two-expert consensus: the mean rounded down to an integer.
inline int aggregate_human(int e1, int e2) {
  if (!is_valid_score(e1) || !is_valid_score(e2)) throw ContractViolation("aggregate_human: score outside 1..5");
  return (e1 + e2) / 2;
}

// Literal "floor to the nearest tenth" reading of the consensus mean. For two
// integer scores this is the exact mean; reporting only.
inline double floor_mean_to_tenth(int e1, int e2) {
  if (!is_valid_score(e1) || !is_valid_score(e2)) throw ContractViolation("floor_mean_to_tenth: score outside 1..5");
  return std::floor((e1 + e2) * 5.0) / 10.0;
}

template <typename T>
double concordance_rate(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw ContractViolation("concordance_rate: sides differ in length");
  if (a.empty()) throw ContractViolation("concordance_rate: empty input");
  size_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return double(same) / double(a.size());
}

inline double concordance_rate(const PairedScores& p) { return concordance_rate(p.human(), p.model()); }

// 1-based fractional ranks; ties share the mean of their positions.
template <typename T>
std::vector<double> average_ranks(std::span<const T> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && !(v[order[i]] < v[order[j + 1]])) ++j;
    const double rank = (double(i + 1) + double(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of tie-averaged ranks; nullopt when either side is constant.
template <typename T, typename U>
std::optional<double> spearman_rho(std::span<const T> a, std::span<const U> b) {
  if (a.size() != b.size()) throw ContractViolation("spearman_rho: sides differ in length");
  if (a.size() < 2) throw ContractViolation("spearman_rho: needs at least two pairs");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = (double(a.size()) + 1.0) / 2.0;  // mean rank is (n+1)/2 with or without ties
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean, db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline std::optional<double> spearman_rho(const PairedScores& p) { return spearman_rho(p.human(), p.model()); }

namespace detail {

// Counts strict inversions (i < j, v[i] > v[j]) with a merge sort.
template <typename T>
uint64_t count_inversions(std::vector<T>& v, std::vector<T>& buf, size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

template <typename It, typename Eq>
uint64_t tied_pairs(It first, It last, Eq eq) {
  uint64_t total = 0;
  while (first != last) {
    auto run_end = std::find_if_not(first, last, [&](const auto& x) { return eq(*first, x); });
    const auto t = static_cast<uint64_t>(std::distance(first, run_end));
    total += t * (t - 1) / 2;
    first = run_end;
  }
  return total;
}

}  // namespace detail

// Kendall tau-b in O(n log n); nullopt when either side is constant.
template <typename T, typename U>
std::optional<double> kendall_tau(std::span<const T> a, std::span<const U> b) {
  if (a.size() != b.size()) throw ContractViolation("kendall_tau: sides differ in length");
  if (a.size() < 2) throw ContractViolation("kendall_tau: needs at least two pairs");
  const uint64_t n = a.size();
  std::vector<std::pair<T, U>> xy;
  xy.reserve(n);
  for (size_t i = 0; i < n; ++i) xy.emplace_back(a[i], b[i]);
  std::sort(xy.begin(), xy.end());

  const uint64_t n0 = n * (n - 1) / 2;
  const uint64_t ties_a = detail::tied_pairs(xy.begin(), xy.end(), [](auto& p, auto& q) { return p.first == q.first; });
  const uint64_t ties_ab = detail::tied_pairs(xy.begin(), xy.end(), [](auto& p, auto& q) { return p == q; });

  std::vector<U> ys(n), buf(n);
  for (size_t i = 0; i < n; ++i) ys[i] = xy[i].second;
  const uint64_t discordant = detail::count_inversions(ys, buf, 0, n);  // ys is sorted afterwards
  const uint64_t ties_b = detail::tied_pairs(ys.begin(), ys.end(), [](auto& p, auto& q) { return p == q; });

  if (ties_a == n0 || ties_b == n0) return std::nullopt;
  const double numerator =
      double(static_cast<int64_t>(n0 - ties_a - ties_b + ties_ab) - 2 * static_cast<int64_t>(discordant));
  const double denominator = std::sqrt(double(n0 - ties_a) * double(n0 - ties_b));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

inline std::optional<double> kendall_tau(const PairedScores& p) { return kendall_tau(p.human(), p.model()); }

// Unweighted Cohen's kappa over the categories observed on either side;
// nullopt when chance agreement is 1.
template <typename T>
std::optional<double> cohens_kappa(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw ContractViolation("cohens_kappa: sides differ in length");
  if (a.empty()) throw ContractViolation("cohens_kappa: empty input");
  std::map<T, std::pair<uint64_t, uint64_t>> marginals;
  uint64_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    agree += a[i] == b[i] ? 1 : 0;
  }
  const uint64_t n = a.size();
  uint64_t chance = 0;  // n^2 * p_e
  for (const auto& [cat, m] : marginals) chance += m.first * m.second;
  if (chance == n * n) return std::nullopt;
  // (p_o - p_e) / (1 - p_e) scaled by n^2 in numerator and denominator.
  return (double(n * agree) - double(chance)) / (double(n * n) - double(chance));
}

inline std::optional<double> cohens_kappa(const PairedScores& p) { return cohens_kappa(p.human(), p.model()); }

struct AgreementSummary {
  size_t n = 0;
  double concordance = 0.0;
  std::optional<double> spearman;  // nullopt renders as NaN
  std::optional<double> kendall;

  bool operator==(const AgreementSummary&) const = default;
};

// Correlations stay undefined below two pairs.
inline AgreementSummary summarize_agreement(const PairedScores& p) {
  AgreementSummary s;
  s.n = p.size();
  s.concordance = concordance_rate(p);
  if (p.size() >= 2) {
    s.spearman = spearman_rho(p);
    s.kendall = kendall_tau(p);
  }
  return s;
}

}  // namespace discmon
