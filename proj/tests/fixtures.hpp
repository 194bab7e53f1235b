#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "discmon/dossier.hpp"
#include "discmon/ingestion.hpp"
#include "discmon/jsonl.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(DISCMON_TEST_DATA_DIR) + "/" + name; }

// Fresh path under the system temp directory; removed by the caller or left for inspection.
inline std::string temp_path(const std::string& stem) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() / ("discmon-tests-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto p = dir / (stem + "-" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  return p.string();
}

// The seven June 2023 CJ CGV disclosures.
inline std::vector<discmon::Disclosure> cjcgv_disclosures() {
  return discmon::parse_feed(discmon::read_file(data_path("cjcgv_june2023.feed.jsonl")), discmon::FeedFormat::kJsonLines)
      .records;
}

// Summaries equal to the published dossier rows.
inline std::vector<discmon::CompanySummary> cjcgv_summaries() {
  std::vector<discmon::CompanySummary> out;
  for (const auto& d : cjcgv_disclosures())
    out.push_back({d.company_id, d.company_name, {d.disclosed_at, d.title, d.body}});
  return out;
}

inline discmon::MonthlyDossier cjcgv_dossier() {
  std::vector<discmon::DisclosureSummary> entries;
  for (const auto& s : cjcgv_summaries()) entries.push_back(s.item);
  return *discmon::build_dossier("079160", {2023, 6}, entries, "CJ CGV");
}

// Reference rationale for the CJ CGV June dossier (score 2).
inline const std::string kCjcgvRationale =
    "CJ CGV is making efforts to raise cash through new share listings and a rights offering. "
    "Loans to an overseas affiliate, collateral for affiliate debt and the use of new equity to repay "
    "borrowings point to a strained balance sheet, and a bond under investment caution adds to the risk. "
    "Together these raise doubts about near-term stability and growth.";

}  // namespace fixtures
