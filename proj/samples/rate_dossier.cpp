// Builds one company-month dossier from a feed file, rates it with the
// deterministic mock backend and prints the prompt and the parsed rating.
//
//   sample_rate_dossier tests/data/cjcgv_june2023.feed.jsonl

#include <iostream>

#include "discmon/dossier.hpp"
#include "discmon/gateway.hpp"
#include "discmon/ingestion.hpp"
#include "discmon/jsonl.hpp"
#include "discmon/mock_rules.hpp"
#include "discmon/rating.hpp"

int main(int argc, char** argv) {
  using namespace discmon;
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <feed.jsonl>\n";
    return 1;
  }
  const auto parsed = parse_feed(read_file(argv[1]), FeedFormat::kJsonLines);
  auto gateway = Gateway(std::make_shared<MockBackend>(default_mock_rule()));
  const ModelConfig model{"mock-rater"};

  std::vector<CompanySummary> summaries;
  for (const auto& d : filter_timely(parsed.records))
    summaries.push_back({d.company_id, d.company_name, summarize(d, gateway, model)});

  const auto built = build_dossiers(summaries);
  if (built.dossiers.empty()) {
    std::cerr << "no timely disclosures\n";
    return 1;
  }
  const auto& dossier = built.dossiers.front();
  const auto prompt = build_rating_prompt(dossier, default_rubric());
  std::cout << "--- system ---\n" << prompt.system << "\n--- user ---\n" << prompt.user << '\n';

  const auto rating = rate_dossier(dossier, default_rubric(), gateway, model);
  std::cout << "--- rating ---\n"
            << rating.score << " (" << score_label(rating.score) << "): " << rating.rationale << '\n';
  return 0;
}
