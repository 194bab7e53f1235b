// discmon: command-line driver for the disclosure sentiment pipeline.
//
//   ingest          feed file -> timely disclosures
//   summarize       disclosures -> one-sentence English summaries
//   build-dossiers  summaries -> company-month dossiers (recency cap)
//   rate            dossiers -> model ratings
//   adjust          ratings -> condition-adjusted ratings
//   evaluate        ratings + human assessments -> reports
//   serve           annotation HTTP service for human raters
//   synth           deterministic synthetic fixtures

#include <csignal>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "discmon/annotation_http.hpp"
#include "discmon/dossier.hpp"
#include "discmon/evaluation.hpp"
#include "discmon/gateway_http.hpp"
#include "discmon/ingestion.hpp"
#include "discmon/jsonl.hpp"
#include "discmon/pipeline.hpp"
#include "discmon/rating.hpp"
#include "discmon/synthetic.hpp"

namespace fs = std::filesystem;
using namespace discmon;

namespace {

GatewaySetup gateway_or_mock(const std::string& config_path) {
  if (config_path.empty()) return make_gateway(nlohmann::json::object());
  return make_gateway_from_file(config_path);
}

std::vector<MonthlyDossier> load_dossiers(const std::string& path) {
  std::vector<MonthlyDossier> out;
  for (const auto& j : read_jsonl(path)) out.push_back(dossier_from_json(j));
  return out;
}

std::pair<YearMonth, YearMonth> parse_period(const std::string& s) {
  const auto colon = s.find(':');
  auto a = parse_year_month(s.substr(0, colon));
  auto b = colon == std::string::npos ? a : parse_year_month(s.substr(colon + 1));
  if (!a || !b || *b < *a) throw CLI::ValidationError("--period", "expected YYYY-MM:YYYY-MM");
  return {*a, *b};
}

std::vector<Condition> parse_conditions(const std::string& csv) {
  std::vector<Condition> out;
  std::stringstream ss(csv);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    if (trim(tag).empty()) continue;
    auto c = parse_condition(trim(tag));
    if (!c) throw CLI::ValidationError("--conditions", "unknown condition '" + tag + "'");
    out.push_back(*c);
  }
  return out;
}

int cmd_ingest(const std::string& feed, const std::string& format, const std::string& out,
               const std::string& keywords, bool keep_periodic) {
  const auto fmt = parse_feed_format(format);
  if (!fmt) throw FeedFormatError("unknown feed format '" + format + "'");
  FeedOptions options;
  if (!keywords.empty()) options.classifier = ReportTypeClassifier::from_json(nlohmann::json::parse(read_file(keywords)));
  const auto parsed = parse_feed(read_file(feed), *fmt, options, feed);
  for (const auto& e : parsed.errors) std::cerr << feed << ": entry " << e.index << ": " << e.message << '\n';
  const auto timely = filter_timely(parsed.records);
  const auto [ts, ps] = token_statistics(parsed.records);
  std::cout << "entries " << parsed.entry_count << ", parsed " << parsed.records.size() << ", entry errors "
            << parsed.errors.size() << '\n'
            << "timely " << ts.documents << " (mean ~" << static_cast<long>(ts.mean()) << " tokens), periodic excluded "
            << ps.documents << " (mean ~" << static_cast<long>(ps.mean()) << " tokens)\n";
  if (!out.empty()) write_file(out, to_jsonl(keep_periodic ? parsed.records : timely));
  return parsed.errors.empty() ? 0 : 2;
}

int cmd_summarize(const std::string& in, const std::string& config, const std::string& out, unsigned threads) {
  auto setup = gateway_or_mock(config);
  std::vector<Disclosure> items;
  for (const auto& j : read_jsonl(in)) items.push_back(disclosure_from_json(j));
  const auto result = summarize_all(filter_timely(items), *setup.gateway, setup.model, threads);
  for (const auto& f : result.failures)
    std::cerr << "summary failed for " << f.disclosure.company_id << " " << to_string(f.disclosure.disclosed_at)
              << ": " << f.error << '\n';
  write_file(out, to_jsonl(result.summaries));
  std::cout << "summaries " << result.summaries.size() << ", failures " << result.failures.size() << '\n';
  return result.failures.empty() ? 0 : 2;
}

int cmd_build(const std::string& in, const std::string& out, size_t cap, const std::string& period,
              std::string skipped_out) {
  std::vector<CompanySummary> items;
  for (const auto& j : read_jsonl(in)) items.push_back(company_summary_from_json(j));
  std::optional<std::pair<YearMonth, YearMonth>> range;
  if (!period.empty()) range = parse_period(period);
  const auto result = build_dossiers(items, cap, range);
  write_file(out, to_jsonl(result.dossiers));
  if (skipped_out.empty()) skipped_out = out + ".skipped.jsonl";
  write_file(skipped_out, to_jsonl(result.skipped));
  std::cout << "dossiers " << result.dossiers.size() << ", skipped months " << result.skipped.size()
            << ", entries dropped by cap " << result.dropped_by_cap << '\n';
  return 0;
}

int cmd_rate(const std::string& in, const std::string& model, const std::string& out, const std::string& config,
             const std::string& rubric_path, unsigned threads) {
  auto setup = gateway_or_mock(config);
  if (!model.empty()) setup.model.model_id = model;
  const auto rubric = rubric_path.empty() ? default_rubric() : load_rubric(rubric_path);
  const auto result = rate_all(load_dossiers(in), rubric, *setup.gateway, setup.model, threads);
  std::string body = to_jsonl(result.ratings) + to_jsonl(result.failures);
  write_file(out, body);
  for (const auto& f : result.failures) std::cerr << "rating failed for " << to_string(f.key()) << ": " << f.error << '\n';
  std::cout << "ratings " << result.ratings.size() << ", failures " << result.failures.size() << '\n';
  return 0;
}

int cmd_adjust(const std::string& in, const std::string& condition, const std::string& out) {
  const auto c = parse_condition(condition);
  if (!c) throw CLI::ValidationError("--condition", "expected one of C1, C2, C3, C4");
  std::string body;
  for (const auto& j : read_jsonl(in)) {
    if (is_failure_record(j)) {
      body += j.dump() + "\n";
      continue;
    }
    body += to_json(adjust_rating(rating_from_json(j), *c)).dump() + "\n";
  }
  write_file(out, body);
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& ratings, const std::string& human, const std::string& conditions,
                 const std::string& per_company, const std::string& out, const std::string& skipped,
                 const std::string& dossiers) {
  EvaluationInput in;
  for (const auto& path : ratings)
    for (const auto& j : read_jsonl(path)) {
      if (is_failure_record(j))
        in.failures.push_back(failure_from_json(j));
      else
        in.ratings.push_back(rating_from_json(j));
    }
  for (const auto& j : read_jsonl(human)) in.humans.push_back(human_from_json(j));
  in.conditions = parse_conditions(conditions);
  auto pc = parse_condition(per_company);
  if (!pc) throw CLI::ValidationError("--per-company-condition", "expected one of C1, C2, C3, C4");
  in.per_company_condition = *pc;
  if (!skipped.empty())
    for (const auto& j : read_jsonl(skipped)) in.skipped_months.push_back(company_month_from_json(j));
  if (!dossiers.empty())
    for (const auto& d : load_dossiers(dossiers)) in.company_names[d.company_id] = d.company_name;

  const auto report = run_evaluation(in);
  for (auto format : {ReportFormat::kTableText, ReportFormat::kStructuredRecords, ReportFormat::kHistogramData})
    for (const auto& [name, body] : render_report(report, format)) write_file(fs::path(out) / name, body);
  std::cout << render_table_text(report);
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(int port, const std::string& host, const std::string& tasks, const std::string& raters,
              std::string log, const std::string& ui) {
  if (log.empty()) log = tasks + ".submissions.jsonl";
  AnnotationService service(load_dossiers(tasks), annotation_config_from_json(nlohmann::json::parse(read_file(raters))),
                            log);
  httplib::Server server;
  register_annotation_routes(server, service, default_rubric());
  if (!ui.empty() && !server.set_mount_point("/", ui)) throw std::runtime_error("cannot serve UI from " + ui);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cout << "serving " << service.tasks().size() << " tasks on " << host << ":" << port << std::endl;
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on port " + std::to_string(port));
  return 0;
}

int cmd_synth_feed(const std::string& out, uint64_t seed) {
  synthetic::FeedSpec spec;
  spec.seed = seed;
  const auto feed = synthetic::make_feed(spec);
  write_file(out, feed.jsonl);
  std::cout << "timely " << feed.timely_count << ", periodic " << feed.periodic_count << ", empty company-months "
            << feed.empty_slots.size() << '\n';
  return 0;
}

int cmd_synth_skewed(const std::string& dir) {
  const auto f = synthetic::make_skewed_fixture();
  write_file(fs::path(dir) / "skewed_815.human.jsonl", to_jsonl(f.humans));
  write_file(fs::path(dir) / "skewed_815.ratings.jsonl", to_jsonl(f.ratings));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disclosure sentiment monitoring pipeline"};
  app.require_subcommand(1);

  std::string feed, format = "jsonl", out, keywords, config, in, model, rubric, condition, human, skipped, dossiers,
                    period, skipped_out, log, ui, host = "0.0.0.0";
  std::string conditions = "C1,C2,C3,C4", per_company = "C2";
  std::vector<std::string> ratings;
  bool keep_periodic = false;
  size_t cap = kDefaultRecencyCap;
  unsigned threads = 1;
  int port = 8080;
  uint64_t seed = synthetic::FeedSpec{}.seed;

  auto* ingest = app.add_subcommand("ingest", "Parse a feed and keep timely disclosures");
  ingest->add_option("--feed", feed, "Feed file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", format, "Feed format tag");
  ingest->add_option("--out", out, "Write disclosures (JSON lines)");
  ingest->add_option("--keywords", keywords, "Report-type keyword map (JSON)")->check(CLI::ExistingFile);
  ingest->add_flag("--keep-periodic", keep_periodic, "Write periodic reports too");

  auto* summ = app.add_subcommand("summarize", "Summarize disclosures through the gateway");
  summ->add_option("--disclosures", in, "Disclosures from ingest")->required()->check(CLI::ExistingFile);
  summ->add_option("--config", config, "Gateway config (default: mock backend)")->check(CLI::ExistingFile);
  summ->add_option("--out", out, "Summaries output")->required();
  summ->add_option("--threads", threads, "Concurrent requests");

  auto* build = app.add_subcommand("build-dossiers", "Group summaries into company-month dossiers");
  build->add_option("--from", in, "Summaries file")->required()->check(CLI::ExistingFile);
  build->add_option("--out", out, "Dossiers output")->required();
  build->add_option("--cap", cap, "Most recent disclosures kept per month")->check(CLI::PositiveNumber);
  build->add_option("--period", period, "Month range YYYY-MM:YYYY-MM");
  build->add_option("--skipped-out", skipped_out, "Skipped months output (default <out>.skipped.jsonl)");

  auto* rate = app.add_subcommand("rate", "Rate dossiers with a model");
  rate->add_option("--dossiers", in, "Dossiers file")->required()->check(CLI::ExistingFile);
  rate->add_option("--model", model, "Model id (overrides config)");
  rate->add_option("--out", out, "Ratings output")->required();
  rate->add_option("--config", config, "Gateway config (default: mock backend)")->check(CLI::ExistingFile);
  rate->add_option("--rubric", rubric, "Rubric asset (default: built-in)")->check(CLI::ExistingFile);
  rate->add_option("--threads", threads, "Concurrent requests");

  auto* adjust = app.add_subcommand("adjust", "Apply an adjustment condition to ratings");
  adjust->add_option("--ratings", in, "Ratings file")->required()->check(CLI::ExistingFile);
  adjust->add_option("--condition", condition, "C1..C4")->required();
  adjust->add_option("--out", out, "Adjusted ratings output")->required();

  auto* eval = app.add_subcommand("evaluate", "Compare ratings with human consensus");
  eval->add_option("--ratings", ratings, "Ratings file(s)")->required()->check(CLI::ExistingFile);
  eval->add_option("--human", human, "Human assessments")->required()->check(CLI::ExistingFile);
  eval->add_option("--conditions", conditions, "Comma-separated conditions");
  eval->add_option("--per-company-condition", per_company, "Condition for the per-company table");
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--skipped", skipped, "Skipped months from build-dossiers")->check(CLI::ExistingFile);
  eval->add_option("--dossiers", dossiers, "Dossiers (company names)")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--tasks", in, "Dossiers to annotate")->required()->check(CLI::ExistingFile);
  serve->add_option("--raters", config, "Rater config (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--log", log, "Submission log (default <tasks>.submissions.jsonl)");
  serve->add_option("--ui", ui, "Static directory for the rater UI")->check(CLI::ExistingDirectory);

  auto* synth = app.add_subcommand("synth", "Write synthetic fixtures");
  synth->require_subcommand(1);
  auto* synth_feed = synth->add_subcommand("feed", "50 companies x 17 months feed");
  synth_feed->add_option("--out", out, "Feed output")->required();
  synth_feed->add_option("--seed", seed, "Generator seed");
  auto* synth_skewed = synth->add_subcommand("skewed", "Skewed 815-item human/model fixture");
  synth_skewed->add_option("--out-dir", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(feed, format, out, keywords, keep_periodic);
    if (*summ) return cmd_summarize(in, config, out, threads);
    if (*build) return cmd_build(in, out, cap, period, skipped_out);
    if (*rate) return cmd_rate(in, model, out, config, rubric, threads);
    if (*adjust) return cmd_adjust(in, condition, out);
    if (*eval) return cmd_evaluate(ratings, human, conditions, per_company, out, skipped, dossiers);
    if (*serve) return cmd_serve(port, host, in, config, log, ui);
    if (*synth_feed) return cmd_synth_feed(out, seed);
    if (*synth_skewed) return cmd_synth_skewed(out);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const JoinError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& k : e.offending()) std::cerr << "  " << k << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
