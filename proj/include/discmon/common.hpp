#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace discmon {

// A precondition of an operation was broken by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Calendar date in the feed's local zone.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  friend auto operator<=>(const Date&, const Date&) = default;
};

inline bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int year, int month) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  return month == 2 && is_leap_year(year) ? 29 : kDays[month - 1];
}

inline bool is_valid(const Date& d) {
  return d.year >= 1 && d.year <= 9999 && d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

// Calendar month; the grouping key of a dossier.
struct YearMonth {
  int year = 1970;
  int month = 1;

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;

  YearMonth next() const { return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1}; }
};

// Local wall-clock time with minute precision.
struct Timestamp {
  Date date;
  int hour = 0;
  int minute = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

  YearMonth year_month() const { return {date.year, date.month}; }
};

inline bool is_valid(const Timestamp& t) {
  return is_valid(t.date) && t.hour >= 0 && t.hour < 24 && t.minute >= 0 && t.minute < 60;
}

namespace detail {

inline std::optional<int> parse_fixed_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace detail

// YYYY-MM-DD
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = detail::parse_fixed_digits(s.substr(0, 4));
  auto m = detail::parse_fixed_digits(s.substr(5, 2));
  auto d = detail::parse_fixed_digits(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  Date date{*y, *m, *d};
  if (!is_valid(date)) return std::nullopt;
  return date;
}

// HH:MM, returned as {hour, minute}
inline std::optional<std::pair<int, int>> parse_time(std::string_view s) {
  if (s.size() != 5 || s[2] != ':') return std::nullopt;
  auto h = detail::parse_fixed_digits(s.substr(0, 2));
  auto m = detail::parse_fixed_digits(s.substr(3, 2));
  if (!h || !m || *h > 23 || *m > 59) return std::nullopt;
  return std::pair{*h, *m};
}

// YYYY-MM
inline std::optional<YearMonth> parse_year_month(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  auto y = detail::parse_fixed_digits(s.substr(0, 4));
  auto m = detail::parse_fixed_digits(s.substr(5, 2));
  if (!y || !m || *y < 1 || *m < 1 || *m > 12) return std::nullopt;
  return YearMonth{*y, *m};
}

inline std::string to_string(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

inline std::string to_string(const YearMonth& ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", ym.year, ym.month);
  return buf;
}

inline std::string time_string(const Timestamp& t) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", t.hour, t.minute);
  return buf;
}

inline std::string to_string(const Timestamp& t) { return to_string(t.date) + " " + time_string(t); }

// Inclusive month range [first, last].
inline std::vector<YearMonth> month_range(YearMonth first, YearMonth last) {
  std::vector<YearMonth> out;
  for (auto m = first; m <= last; m = m.next()) out.push_back(m);
  return out;
}

inline std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Strict UTF-8 validation (no overlongs, no surrogates).
inline bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len;
    uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += len;
  }
  return true;
}

// Stable 64-bit FNV-1a; used for request fingerprints and synthetic data.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace discmon
