#pragma once

// Rubric prompt construction, score+rationale response parsing and the
// per-dossier rating call.

#include <array>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "discmon/adjustment.hpp"
#include "discmon/dossier.hpp"
#include "discmon/gateway.hpp"

namespace discmon {

inline constexpr std::array<std::string_view, 5> kScoreLabels = {
    "Very Negative", "Negative", "Neutral", "Positive", "Very Positive"};

inline std::string_view score_label(int score) {
  if (!is_valid_score(score)) throw ContractViolation("score_label: score outside 1..5");
  return kScoreLabels[static_cast<size_t>(score - 1)];
}

struct Rubric {
  std::string version;
  std::string preamble;
  std::map<int, std::string> criteria;  // exactly {1..5}

  void validate() const {
    if (criteria.size() != 5) throw ContractViolation("Rubric: expected exactly five criteria");
    for (int s = 1; s <= 5; ++s)
      if (!criteria.contains(s) || trim(criteria.at(s)).empty())
        throw ContractViolation("Rubric: missing criterion for score " + std::to_string(s));
  }

  bool operator==(const Rubric&) const = default;
};

inline const Rubric& default_rubric() {
  static const Rubric rubric = [] {
    Rubric r;
    r.version = "five-point-v1";
    r.preamble =
        "You are a financial analyst monitoring corporate timely disclosures. You will be given "
        "one month of disclosure summaries for a single company. Rate the company's overall "
        "situation on a scale from 1 to 5 using the criteria below, and give brief reasons for "
        "the score.";
    r.criteria = {
        {1,
         "The company's overall situation is very unfavorable, indicating a decline in revenue and "
         "profit. Financial conditions are unstable, market share is decreasing, and there are "
         "concerns about the ability of management and social responsibility. The future outlook "
         "in this situation is highly uncertain, facing threats to the company's sustainability."},
        {2,
         "The company's condition is unfavorable, but certain improvements are possible. The trend "
         "of declining revenue and profit continues, and financial conditions are unstable. Market "
         "share may vary depending on competitive situations, and evidence of innovation or growth "
         "potential is limited. The outlook for the future is not very bright."},
        {3,
         "The company's situation has not changed significantly, indicating that revenue and "
         "profit are stable. Financial conditions are stable, and competitiveness in the market is "
         "consistently maintained. Innovation and growth potential are average, and the future "
         "outlook remains stable without significant changes."},
        {4,
         "The company is showing significant revenue and growth, indicating that it is being "
         "operated well overall. Financial conditions are positive, and there is a trend of "
         "increasing market share. There are positive expectations regarding innovation and growth "
         "potential, and the outlook for the future is positive."},
        {5,
         "The company is achieving explosive revenue and profit, occupying an outstanding position "
         "in the market as a result. Financial conditions are very stable, and market share is "
         "dominant. The company possesses excellent innovation and growth potential, and the "
         "expectations for the future are very high."},
    };
    return r;
  }();
  return rubric;
}

inline nlohmann::json to_json(const Rubric& r) {
  nlohmann::json criteria = nlohmann::json::object();
  for (const auto& [score, text] : r.criteria) criteria[std::to_string(score)] = text;
  return {{"version", r.version}, {"preamble", r.preamble}, {"criteria", criteria}};
}

inline Rubric rubric_from_json(const nlohmann::json& j) {
  Rubric r;
  r.version = j.at("version").get<std::string>();
  r.preamble = j.at("preamble").get<std::string>();
  for (const auto& [key, text] : j.at("criteria").items()) r.criteria[std::stoi(key)] = text.get<std::string>();
  r.validate();
  return r;
}

inline Rubric load_rubric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rubric " + path);
  return rubric_from_json(nlohmann::json::parse(in));
}

inline constexpr std::string_view kRatingFormatInstruction =
    "Respond in exactly this format:\n"
    "Score: <integer from 1 to 5> (<label>)\n"
    "Reasons: <brief reasons for the score>";

// Rubric and output format go in the system message; the dossier is the user message.
inline CompletionRequest build_rating_prompt(const MonthlyDossier& dossier, const Rubric& rubric) {
  rubric.validate();
  std::string system = rubric.preamble + "\n\nScoring criteria:\n";
  for (const auto& [score, text] : rubric.criteria)
    system += std::to_string(score) + " (" + std::string(score_label(score)) + "): " + text + "\n";
  system += "\n";
  system += kRatingFormatInstruction;
  return {std::move(system), render_dossier(dossier)};
}

class RatingParseError : public std::runtime_error {
 public:
  enum class Kind { kUnparseable, kAmbiguous };
  RatingParseError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ParsedRating {
  int score = 0;
  std::string rationale;

  bool operator==(const ParsedRating&) const = default;
};

// Canonical response format; parse_rating inverts it.
inline std::string render_rating(int score, std::string_view rationale) {
  return "Score: " + std::to_string(score) + " (" + std::string(score_label(score)) +
         ")\nReasons: " + std::string(rationale);
}

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = std::string(text.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
    s.replace(p, from.size(), to);
}

// Drops markdown emphasis, headings and table pipes. Returns nullopt for
// lines that carry no content (table separators, table header rows).
inline std::optional<std::string> clean_line(std::string line) {
  replace_all(line, "**", "");
  replace_all(line, "__", "");
  auto t = std::string(trim(line));
  while (!t.empty() && (t.front() == '#' || t.front() == '>')) t = std::string(trim(t.substr(1)));
  if (!t.empty() && t.front() == '|') {
    if (t.find_first_not_of("|-: \t") == std::string::npos) return std::nullopt;
    // Header row: every cell is a column name.
    static const std::regex column(
        R"(((rating|sentiment)\s+)?(score|rating)|reasons?(\s+for\s+the\s+(score|rating))?|rationale)",
        std::regex::icase);
    bool header = true;
    std::stringstream cells(t);
    std::string cell;
    while (std::getline(cells, cell, '|'))
      if (!trim(cell).empty() && !std::regex_match(std::string(trim(cell)), column)) header = false;
    if (header) return std::nullopt;
    std::replace(t.begin(), t.end(), '|', ' ');
    t = std::string(trim(t));
  }
  return t;
}

inline std::string_view strip_separators(std::string_view s) {
  static constexpr std::array<std::string_view, 8> kSeps = {"\xE2\x80\x94", "\xE2\x80\x93", "-", ":",
                                                            ";",            ",",            ".", "|"};
  for (bool changed = true; changed;) {
    changed = false;
    s = trim(s);
    for (auto sep : kSeps)
      if (s.starts_with(sep)) {
        s.remove_prefix(sep.size());
        changed = true;
      }
  }
  return s;
}

struct ScoreLine {
  size_t line = 0;
  std::optional<int> score;  // nullopt: labeled score field without a usable integer
  std::string remainder;     // text following the score on the same line
};

// Parses the score field: the first integer token, an optional "/5" or
// "out of 5", and an optional parenthesized label that must agree.
inline ScoreLine parse_score_field(size_t line_no, std::string_view field) {
  static const std::regex number(R"(^\s*(\d+)(\.\d+)?)");
  static const std::regex scale(R"(^\s*(/\s*5|out\s+of\s+5)\b)", std::regex::icase);
  static const std::regex label(R"(^\s*\(\s*([A-Za-z][A-Za-z ]*?)\s*\))");
  ScoreLine out{line_no, std::nullopt, {}};
  std::string rest(field);
  std::smatch m;
  if (!std::regex_search(rest, m, number)) {
    out.remainder = rest;
    return out;
  }
  if (m[2].matched) {  // decimals are not scores on an integer scale
    out.remainder = rest;
    return out;
  }
  const auto digits = m[1].str();
  const int value = digits.size() > 2 ? 99 : std::stoi(digits);
  rest = m.suffix().str();
  if (std::regex_search(rest, m, scale)) rest = m.suffix().str();
  if (std::regex_search(rest, m, label)) {
    const auto text = to_lower_ascii(m[1].str());
    for (int s = 1; s <= 5; ++s)
      if (text == to_lower_ascii(score_label(s)) && s != value)
        throw RatingParseError(RatingParseError::Kind::kAmbiguous,
                               "score " + std::to_string(value) + " contradicts label (" + m[1].str() + ")");
    rest = m.suffix().str();
  }
  if (is_valid_score(value)) out.score = value;
  out.remainder = std::string(strip_separators(rest));
  return out;
}

inline std::string strip_reasons_label(std::string_view line) {
  static const std::regex label(
      R"(^\s*(reasons?\s+for\s+the\s+(score|rating)|reasons?|rationale|explanation|justification)\s*[:\-])",
      std::regex::icase);
  std::string s(line);
  std::smatch m;
  if (std::regex_search(s, m, label)) return std::string(trim(m.suffix().str()));
  return s;
}

}  // namespace detail

// Extracts (score, rationale) from a model response. Accepts "2", "2 (Negative)",
// "Score: 2", "Rating Score: 2 (Negative) ..." and markdown-table variants.
inline ParsedRating parse_rating(std::string_view raw) {
  using detail::ScoreLine;
  static const std::regex labeled(
      R"(^(?:final\s+)?(?:rating\s+score|sentiment\s+score|sentiment\s+rating|overall\s+score|overall\s+rating|score|rating)\s*(?:\(\s*1\s*(?:-|to)\s*5\s*\))?\s*(?:[:=]|-(?=\s*\d)|(?=\d))(.*)$)",
      std::regex::icase);
  static const std::regex bare(R"(^(\d+)(?:\s*$|\s*\(|\s*/\s*5|\s+out\s+of\s+5|\s*-\s|\s*:|\s*\xE2\x80[\x93\x94]))",
                               std::regex::icase);

  std::vector<std::string> lines;
  for (auto& l : detail::split_lines(raw))
    if (auto c = detail::clean_line(std::move(l))) lines.push_back(std::move(*c));

  std::vector<ScoreLine> score_lines;
  std::optional<size_t> first_content;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    if (!first_content) first_content = i;
    std::smatch m;
    std::optional<ScoreLine> found;
    if (std::regex_search(lines[i], m, labeled))
      found = detail::parse_score_field(i, m[1].str());
    else if (i == *first_content && std::regex_search(lines[i], m, bare))
      found = detail::parse_score_field(i, lines[i]);
    // A line without a usable score stays part of the text.
    if (found && found->score) score_lines.push_back(std::move(*found));
  }

  std::set<int> values;
  for (const auto& s : score_lines) values.insert(*s.score);
  if (values.empty()) throw RatingParseError(RatingParseError::Kind::kUnparseable, "no score in 1..5 found");
  if (values.size() > 1)
    throw RatingParseError(RatingParseError::Kind::kAmbiguous, "conflicting score lines");

  const auto& primary = score_lines.front();
  std::set<size_t> score_line_idx;
  for (const auto& s : score_lines) score_line_idx.insert(s.line);

  auto collect = [&](size_t from, size_t to, std::string first) {
    std::vector<std::string> parts;
    if (!first.empty()) parts.push_back(std::move(first));
    for (size_t i = from; i < to; ++i)
      if (!score_line_idx.contains(i)) parts.push_back(lines[i]);
    while (!parts.empty() && trim(parts.front()).empty()) parts.erase(parts.begin());
    if (!parts.empty()) parts.front() = detail::strip_reasons_label(parts.front());
    std::string joined;
    for (size_t k = 0; k < parts.size(); ++k) {
      if (k) joined += '\n';
      joined += parts[k];
    }
    return std::string(trim(joined));
  };

  auto rationale = collect(primary.line + 1, lines.size(), primary.remainder);
  if (rationale.empty()) rationale = collect(0, primary.line, {});
  return {*primary.score, std::move(rationale)};
}

struct SentimentRating {
  std::string company_id;
  YearMonth month;
  int score = 3;
  std::string rationale;
  std::string model_id;
  std::string raw_response;
  Condition condition = Condition::kC1;
  std::optional<int> original_score;  // set once an adjustment has been applied

  CompanyMonth key() const { return {company_id, month}; }
  bool operator==(const SentimentRating&) const = default;
};

// A company-month the model could not rate.
struct RatingFailure {
  std::string company_id;
  YearMonth month;
  std::string model_id;
  std::string error;
  std::vector<std::string> raw_responses;

  CompanyMonth key() const { return {company_id, month}; }
};

class RatingError : public std::runtime_error {
 public:
  RatingError(const std::string& what, std::vector<std::string> raw)
      : std::runtime_error(what), raw_responses_(std::move(raw)) {}
  const std::vector<std::string>& raw_responses() const { return raw_responses_; }

 private:
  std::vector<std::string> raw_responses_;
};

inline constexpr std::string_view kReaskInstruction =
    "\n\nYour previous reply could not be read. Reply again using exactly the required format:\n"
    "Score: <integer from 1 to 5> (<label>)\n"
    "Reasons: <brief reasons for the score>";

// One re-ask on an unreadable reply (or one without reasons), then RatingError.
// Gateway errors propagate unchanged.
inline SentimentRating rate_dossier(const MonthlyDossier& dossier, const Rubric& rubric, Gateway& gateway,
                                    const ModelConfig& config) {
  auto request = build_rating_prompt(dossier, rubric);
  std::vector<std::string> raws;
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) request.user += kReaskInstruction;
    auto result = gateway.complete(request, config);
    raws.push_back(result.text);
    try {
      auto parsed = parse_rating(result.text);
      if (parsed.rationale.empty()) {
        last_error = "reply has a score but no reasons";
        continue;
      }
      SentimentRating r;
      r.company_id = dossier.company_id;
      r.month = dossier.month;
      r.score = parsed.score;
      r.rationale = std::move(parsed.rationale);
      r.model_id = config.model_id;
      r.raw_response = result.text;
      return r;
    } catch (const RatingParseError& e) {
      last_error = e.what();
    }
  }
  throw RatingError("unparseable rating after re-ask: " + last_error, std::move(raws));
}

inline nlohmann::json to_json(const SentimentRating& r) {
  nlohmann::json j = {{"status", "ok"},
                      {"company_id", r.company_id},
                      {"month", to_string(r.month)},
                      {"model_id", r.model_id},
                      {"score", r.score},
                      {"rationale", r.rationale},
                      {"raw_response", r.raw_response},
                      {"condition", std::string(to_string(r.condition))}};
  if (r.original_score) j["original_score"] = *r.original_score;
  return j;
}

inline nlohmann::json to_json(const RatingFailure& f) {
  return {{"status", "failed"},
          {"company_id", f.company_id},
          {"month", to_string(f.month)},
          {"model_id", f.model_id},
          {"error", f.error},
          {"raw_responses", f.raw_responses}};
}

inline bool is_failure_record(const nlohmann::json& j) { return j.value("status", std::string("ok")) == "failed"; }

inline SentimentRating rating_from_json(const nlohmann::json& j) {
  SentimentRating r;
  r.company_id = j.at("company_id").get<std::string>();
  auto month = parse_year_month(j.at("month").get<std::string>());
  if (!month) throw std::invalid_argument("invalid rating month");
  r.month = *month;
  r.model_id = j.at("model_id").get<std::string>();
  r.score = j.at("score").get<int>();
  if (!is_valid_score(r.score)) throw std::invalid_argument("rating score outside 1..5");
  r.rationale = j.value("rationale", std::string{});
  r.raw_response = j.value("raw_response", std::string{});
  auto cond = parse_condition(j.value("condition", std::string("C1")));
  if (!cond) throw std::invalid_argument("invalid condition tag");
  r.condition = *cond;
  if (j.contains("original_score")) r.original_score = j["original_score"].get<int>();
  return r;
}

inline RatingFailure failure_from_json(const nlohmann::json& j) {
  RatingFailure f;
  f.company_id = j.at("company_id").get<std::string>();
  auto month = parse_year_month(j.at("month").get<std::string>());
  if (!month) throw std::invalid_argument("invalid rating month");
  f.month = *month;
  f.model_id = j.at("model_id").get<std::string>();
  f.error = j.value("error", std::string{});
  f.raw_responses = j.value("raw_responses", std::vector<std::string>{});
  return f;
}

// Applies a condition to an unadjusted rating; the original score is kept.
inline SentimentRating adjust_rating(SentimentRating r, Condition c) {
  if (r.original_score || r.condition != Condition::kC1)
    throw ContractViolation("adjust_rating: rating " + to_string(r.key()) + " is already adjusted");
  r.original_score = r.score;
  r.score = apply_condition(r.score, c);
  r.condition = c;
  return r;
}

}  // namespace discmon
