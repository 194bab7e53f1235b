#pragma once

// Batch stages over the gateway: summarize every disclosure, rate every
// dossier. Work is spread over worker threads; results keep input order.

#include <atomic>
#include <thread>
#include <variant>
#include <vector>

#include "discmon/dossier.hpp"
#include "discmon/gateway.hpp"
#include "discmon/ingestion.hpp"
#include "discmon/rating.hpp"

namespace discmon {

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(n, 1))));
  if (threads == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
}

}  // namespace detail

struct SummaryFailure {
  Disclosure disclosure;
  std::string error;
};

struct SummarizeOutcome {
  std::vector<CompanySummary> summaries;
  std::vector<SummaryFailure> failures;
};

inline SummarizeOutcome summarize_all(const std::vector<Disclosure>& items, Gateway& gateway,
                                      const ModelConfig& config, unsigned threads = 1) {
  std::vector<std::variant<CompanySummary, SummaryFailure>> slots(items.size());
  detail::parallel_for(items.size(), threads, [&](size_t i) {
    const auto& d = items[i];
    try {
      slots[i] = CompanySummary{d.company_id, d.company_name, summarize(d, gateway, config)};
    } catch (const std::exception& e) {
      slots[i] = SummaryFailure{d, e.what()};
    }
  });
  SummarizeOutcome out;
  for (auto& s : slots) {
    if (auto* ok = std::get_if<CompanySummary>(&s))
      out.summaries.push_back(std::move(*ok));
    else
      out.failures.push_back(std::get<SummaryFailure>(std::move(s)));
  }
  return out;
}

struct RateOutcome {
  std::vector<SentimentRating> ratings;
  std::vector<RatingFailure> failures;
};

// A failed company-month is recorded and the run continues.
inline RateOutcome rate_all(const std::vector<MonthlyDossier>& dossiers, const Rubric& rubric, Gateway& gateway,
                            const ModelConfig& config, unsigned threads = 1) {
  std::vector<std::variant<SentimentRating, RatingFailure>> slots(dossiers.size());
  detail::parallel_for(dossiers.size(), threads, [&](size_t i) {
    const auto& d = dossiers[i];
    try {
      slots[i] = rate_dossier(d, rubric, gateway, config);
    } catch (const RatingError& e) {
      slots[i] = RatingFailure{d.company_id, d.month, config.model_id, e.what(), e.raw_responses()};
    } catch (const GatewayError& e) {
      slots[i] = RatingFailure{d.company_id, d.month, config.model_id, e.what(), {}};
    }
  });
  RateOutcome out;
  for (auto& s : slots) {
    if (auto* ok = std::get_if<SentimentRating>(&s))
      out.ratings.push_back(std::move(*ok));
    else
      out.failures.push_back(std::get<RatingFailure>(std::move(s)));
  }
  return out;
}

}  // namespace discmon
