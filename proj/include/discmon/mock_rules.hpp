#pragma once

// Deterministic response rules for MockBackend.

#include <array>
#include <string>
#include <string_view>

#include "discmon/gateway.hpp"
#include "discmon/rating.hpp"

namespace discmon {

// First sentence of the text: up to and including the first '.', '!' or '?'
// that ends the text or is followed by whitespace.
inline std::string first_sentence(std::string_view text) {
  text = trim(text);
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      return collapse_whitespace(text.substr(0, i + 1));
  }
  return collapse_whitespace(text);
}

// Summarization requests: first sentence of the disclosure body.
inline std::string first_sentence_summary(const CompletionRequest& r) {
  const auto at = r.user.find("Body:\n");
  return first_sentence(at == std::string::npos ? std::string_view(r.user)
                                                : std::string_view(r.user).substr(at + 6));
}

namespace detail {

inline int count_hits(const std::string& lower, std::string_view word) {
  int hits = 0;
  for (size_t p = lower.find(word); p != std::string::npos; p = lower.find(word, p + word.size())) ++hits;
  return hits;
}

}  // namespace detail

// Rating requests: keyword tally over the Details rows, rendered in the
// canonical response format.
inline std::string lexicon_rating(const CompletionRequest& r) {
  static constexpr std::array<std::string_view, 12> kPositive = {
      "record",   "growth",   "increase", "profit",   "acquisition", "dividend",
      "contract", "award",    "expansion", "buyback", "upgrade",     "approval"};
  static constexpr std::array<std::string_view, 12> kNegative = {
      "loss",    "decline", "decrease", "lawsuit", "warning", "concern",
      "penalty", "impairment", "default", "investigation", "downgrade", "suspension"};
  int pos = 0, neg = 0, rows = 0;
  size_t p = 0;
  while ((p = r.user.find("Details: ", p)) != std::string::npos) {
    auto end = r.user.find('\n', p);
    const auto lower = to_lower_ascii(std::string_view(r.user).substr(p, end == std::string::npos ? end : end - p));
    for (auto w : kPositive) pos += detail::count_hits(lower, w);
    for (auto w : kNegative) neg += detail::count_hits(lower, w);
    ++rows;
    p = end == std::string::npos ? r.user.size() : end;
  }
  const int net = pos - neg;
  const int score = net >= 4 ? 5 : net >= 1 ? 4 : net == 0 ? 3 : net > -4 ? 2 : 1;
  return render_rating(score, std::to_string(pos) + " positive and " + std::to_string(neg) +
                                  " negative signals across " + std::to_string(rows) + " disclosures.");
}

// Routes by prompt kind: summaries, ratings, otherwise echo the user text.
inline MockBackend::Rule default_mock_rule() {
  return [](const CompletionRequest& r, const ModelConfig&) -> std::string {
    if (r.system == kSummarySystemPrompt) return first_sentence_summary(r);
    if (r.system.find("Scoring criteria:") != std::string::npos) return lexicon_rating(r);
    return r.user;
  };
}

}  // namespace discmon
