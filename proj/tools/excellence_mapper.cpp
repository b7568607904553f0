// excellence-mapper: fit per-subject multilevel models, simulate corpora,
// serve results to the map UI.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "excellence/pipeline.hpp"
#include "excellence/server.hpp"
#include "excellence/simulate.hpp"

namespace {

using namespace excellence;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitAllFailed = 2;

std::vector<std::string> split_codes(const std::string& s) {
  std::vector<std::string> out;
  if (s == "all") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

struct FitArgs {
  std::string papers, institutions, subjects = "all", out = "results.json";
  std::string papers_format = "auto";
  std::string dump_percentiles, assignments, subject_names, generated_at, diagnostics;
  int year_min = 2005, year_max = 2009, quad_nodes = 20;
  int census_year = 0;
  std::size_t min_papers = 500, min_institutions = 50;
};

int run_fit(const FitArgs& a) {
  PipelineConfig cfg;
  Corpus corpus({}, {}, 0);
  try {
    PaperFormat fmt = PaperFormat::jsonl;
    if (a.papers_format == "csv" ||
        (a.papers_format == "auto" && std::filesystem::path(a.papers).extension() == ".csv"))
      fmt = PaperFormat::csv;
    auto pin = open_input(a.papers);
    auto papers = parse_papers(pin, fmt);
    auto iin = open_input(a.institutions);
    auto institutions = parse_institutions(iin);
    const int census = a.census_year ? a.census_year : a.year_max + 2;
    corpus = Corpus(std::move(papers), std::move(institutions), census);

    if (!a.assignments.empty()) {
      auto in = open_input(a.assignments);
      cfg.precomputed = read_assignments_csv(in);
    }
    if (!a.subject_names.empty()) {
      auto in = open_input(a.subject_names);
      cfg.subject_names = parse_subject_names(in);
    }
    if (a.year_min > a.year_max) throw std::invalid_argument("--year-min exceeds --year-max");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }

  cfg.subjects = split_codes(a.subjects);
  cfg.year_min = a.year_min;
  cfg.year_max = a.year_max;
  cfg.min_papers = a.min_papers;
  cfg.min_institutions = a.min_institutions;
  cfg.quad_nodes = a.quad_nodes;
  if (!a.generated_at.empty()) {
    cfg.generated_at = a.generated_at;
  } else if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    cfg.generated_at = iso8601_utc(std::atoll(sde));
  } else {
    // Stamp with the citation census date so reruns are byte-identical.
    cfg.generated_at = std::to_string(corpus.census_year()) + "-12-31T00:00:00Z";
  }

  const auto result = run_pipeline(corpus, cfg);
  for (const auto& d : result.diagnostics) std::cerr << "subject " << d.subject << ": " << d.reason << '\n';
  for (const auto& s : result.document.subjects)
    for (const auto& w : s.model.warnings) std::cerr << "subject " << s.subject << ": warning: " << w << '\n';

  try {
    export_results(result.document, a.out);
    if (!a.dump_percentiles.empty()) {
      std::ofstream out(a.dump_percentiles, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write '" + a.dump_percentiles + "'");
      write_assignments_csv(out, result.percentiles);
    }
    if (!a.diagnostics.empty()) {
      std::ofstream out(a.diagnostics, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write '" + a.diagnostics + "'");
      out << "subject,reason\n";
      for (const auto& d : result.diagnostics) out << d.subject << ",\"" << d.reason << "\"\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }

  std::cerr << "wrote " << result.document.subjects.size() << " subject(s) to " << a.out << '\n';
  return result.document.subjects.empty() ? kExitAllFailed : kExitOk;
}

excellence::ResultsServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Institutional excellence mapping: percentiles, multilevel models, EB estimates"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run the pipeline and export results.json");
  fit_cmd->add_option("--papers", fit.papers, "Papers file (JSONL or CSV)")->required();
  fit_cmd->add_option("--institutions", fit.institutions, "Institutions CSV")->required();
  fit_cmd->add_option("--papers-format", fit.papers_format, "jsonl, csv or auto (by extension)")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}));
  fit_cmd->add_option("--subjects", fit.subjects, "Comma-separated subject codes or 'all'");
  fit_cmd->add_option("--year-min", fit.year_min);
  fit_cmd->add_option("--year-max", fit.year_max);
  fit_cmd->add_option("--min-papers", fit.min_papers)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--min-institutions", fit.min_institutions)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--quad-nodes", fit.quad_nodes)->check(CLI::Range(1, 200));
  fit_cmd->add_option("--out", fit.out, "Output results.json");
  fit_cmd->add_option("--dump-percentiles", fit.dump_percentiles, "Write percentile assignments CSV");
  fit_cmd->add_option("--assignments", fit.assignments, "Use precomputed class-10% flags instead of citations");
  fit_cmd->add_option("--subject-names", fit.subject_names, "CSV 'subject,name' with display names");
  fit_cmd->add_option("--census-year", fit.census_year, "Citation census year (default year-max + 2)");
  fit_cmd->add_option("--generated-at", fit.generated_at, "Timestamp written to generated_at");
  fit_cmd->add_option("--diagnostics", fit.diagnostics, "Write rejected subjects and reasons as CSV");

  SimulationConfig sim;
  std::string out_dir;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic corpus");
  sim_cmd->add_option("--seed", sim.seed)->required();
  sim_cmd->add_option("--institutions", sim.n_institutions)->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--papers", sim.papers_per_institution, "Papers per institution")
      ->required()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--beta0", sim.beta0)->required();
  sim_cmd->add_option("--sigma", sim.sigma)->required()->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--collaboration-rate", sim.collaboration_rate)->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--subject", sim.subject);
  sim_cmd->add_option("--out-dir", out_dir)->required();

  std::string results_path, ui_dir, host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve results.json and the UI bundle");
  serve_cmd->add_option("--results", results_path)->required();
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--ui-dir", ui_dir, "Directory with the UI bundle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  if (fit_cmd->parsed()) return run_fit(fit);

  if (sim_cmd->parsed()) {
    try {
      write_simulated_corpus(simulate_corpus(sim), out_dir);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitInput;
    }
    return kExitOk;
  }

  try {
    std::optional<std::filesystem::path> ui;
    if (!ui_dir.empty()) ui = ui_dir;
    ResultsServer server(results_path, ui);
    const int bound = server.bind(host, port);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "serving http://" << host << ':' << bound << "/\n";
    server.listen();
    g_server = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}
