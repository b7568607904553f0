#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "excellence/pipeline.hpp"
#include "excellence/simulate.hpp"

using namespace excellence;
namespace fs = std::filesystem;

namespace {

SimulatedCorpus small_sim(std::uint64_t seed = 17) {
  SimulationConfig cfg;
  cfg.seed = seed;
  cfg.n_institutions = 60;
  cfg.papers_per_institution = 120;
  cfg.beta0 = logit(0.15);
  cfg.sigma = 0.5;
  return simulate_corpus(cfg);
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.min_papers = 100;
  cfg.min_institutions = 50;
  cfg.generated_at = "2011-12-31T00:00:00Z";
  return cfg;
}

// Copies the first `n_inst` institutions' papers into subject `code`.
Corpus with_second_subject(SimulatedCorpus sim, const std::string& code, std::size_t n_inst) {
  for (auto& p : sim.papers) {
    const auto& owner = *p.affiliations.begin();
    if (std::stoul(owner.substr(1)) <= n_inst) p.subject_areas.insert(code);
  }
  return Corpus(sim.papers, sim.institutions, 2011);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + EXCELLENCE_CLI + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("one qualifying subject gives one result") {
  const auto sim = small_sim();
  auto cfg = small_config();
  cfg.subject_names = {{"SIM", "Simulated field"}};
  const auto out = run_pipeline(Corpus(sim.papers, sim.institutions, 2011), cfg);
  CHECK(out.diagnostics.empty());
  REQUIRE(out.document.subjects.size() == 1);
  const auto& s = out.document.subjects[0];
  CHECK(s.subject == "SIM");
  CHECK(s.name == "Simulated field");
  CHECK(s.n_institutions == 60);
  CHECK(s.institutions.size() == 60);
  CHECK(s.model.converged);
  CHECK(s.institutions.front().estimate.rank == 1);
  CHECK(s.institutions.front().estimate.rank_score >= s.institutions.back().estimate.rank_score);
  CHECK(s.institutions.front().name.rfind("Institution", 0) == 0);
  CHECK(out.percentiles.size() == sim.papers.size());
  CHECK(out.document.generated_at == "2011-12-31T00:00:00Z");
}

TEST_CASE("subject below min_institutions is reported, not fitted") {
  const auto corpus = with_second_subject(small_sim(), "CHE", 49);
  const auto out = run_pipeline(corpus, small_config());
  REQUIRE(out.document.subjects.size() == 1);
  CHECK(out.document.subjects[0].subject == "SIM");
  REQUIRE(out.diagnostics.size() == 1);
  CHECK(out.diagnostics[0].subject == "CHE");
  CHECK(out.diagnostics[0].reason.rfind("below min_institutions (49 < 50)", 0) == 0);
}

TEST_CASE("subjects are processed independently") {
  const auto sim = small_sim();
  const auto alone = run_pipeline(Corpus(sim.papers, sim.institutions, 2011), small_config());
  const auto both = run_pipeline(with_second_subject(sim, "CHE", 55), small_config());
  REQUIRE(both.document.subjects.size() == 2);
  CHECK(both.document.subjects[0].subject == "CHE");
  ResultsDocument a = alone.document, b = both.document;
  b.subjects.erase(b.subjects.begin());
  CHECK(to_canonical_json(a) == to_canonical_json(b));

  SUBCASE("explicit subject selection") {
    auto cfg = small_config();
    cfg.subjects = {"CHE", "XYZ"};
    const auto out = run_pipeline(with_second_subject(sim, "CHE", 55), cfg);
    REQUIRE(out.document.subjects.size() == 1);
    CHECK(out.document.subjects[0].subject == "CHE");
    REQUIRE(out.diagnostics.size() == 1);
    CHECK(out.diagnostics[0].subject == "XYZ");
  }
}

TEST_CASE("pipeline output is deterministic") {
  const auto corpus = with_second_subject(small_sim(), "CHE", 55);
  auto cfg = small_config();
  const auto a = to_canonical_json(run_pipeline(corpus, cfg).document);
  cfg.parallel = false;
  const auto b = to_canonical_json(run_pipeline(corpus, cfg).document);
  CHECK(a == b);
}

TEST_CASE("year window drops papers outside it") {
  const auto sim = small_sim();
  auto cfg = small_config();
  cfg.year_min = 2005;
  cfg.year_max = 2005;
  const auto out = run_pipeline(Corpus(sim.papers, sim.institutions, 2011), cfg);
  // roughly a fifth of 120 papers per institution is below min_papers=100
  CHECK(out.document.subjects.empty());
  REQUIRE(out.diagnostics.size() == 1);
  CHECK(out.diagnostics[0].reason.find("below min_institutions (0 < 50)") == 0);
}

TEST_CASE("precomputed class flags") {
  const auto sim = small_sim();
  auto cfg = small_config();
  cfg.precomputed = sim.assignments;
  const auto out = run_pipeline(Corpus(sim.papers, sim.institutions, 2011), cfg);
  REQUIRE(out.document.subjects.size() == 1);
  CHECK(out.percentiles.empty());
  std::map<std::string, std::int64_t> expected;
  std::map<std::string, bool> flag;
  for (const auto& a : sim.assignments) flag[a.paper_id] = a.is_class10;
  for (const auto& p : sim.papers)
    for (const auto& i : p.affiliations) expected[i] += flag.at(p.paper_id) ? 1 : 0;
  for (const auto& x : out.document.subjects[0].institutions)
    CHECK(x.estimate.n_top == expected.at(x.estimate.institution_id));

  SUBCASE("missing flags become a diagnostic") {
    cfg.precomputed->pop_back();
    const auto bad = run_pipeline(Corpus(sim.papers, sim.institutions, 2011), cfg);
    CHECK(bad.document.subjects.empty());
    REQUIRE(bad.diagnostics.size() == 1);
    CHECK(bad.diagnostics[0].reason.find("no percentile assignment") != std::string::npos);
  }
}

TEST_CASE("parse_subject_names") {
  std::istringstream in("subject,name\nBIO,\"Biochemistry, Genetics\"\nCHE,Chemistry\n");
  const auto names = parse_subject_names(in);
  CHECK(names.at("BIO") == "Biochemistry, Genetics");
  CHECK(names.size() == 2);
  std::istringstream bad("code,label\n");
  CHECK_THROWS_AS(parse_subject_names(bad), ParseError);
}

TEST_CASE("command-line exit codes and output") {
  const fs::path dir = fs::temp_directory_path() / "excellence_unit_cli";
  fs::remove_all(dir);
  const std::string d = dir.string();
  REQUIRE(run_cli("simulate --seed 9 --institutions 60 --papers 120 --beta0 -1.7346 --sigma 0.5 --out-dir " + d) ==
          0);
  const std::string inputs = " --papers " + d + "/papers.jsonl --institutions " + d + "/institutions.csv";

  CHECK(run_cli("fit" + inputs + " --min-papers 100 --out " + d + "/r.json") == 0);
  CHECK(fs::file_size(dir / "r.json") > 1000);
  CHECK_NOTHROW(load_results(dir / "r.json"));

  CHECK(run_cli("fit" + inputs + " --min-papers 100 --assignments " + d + "/assignments.csv --out " + d +
                "/r2.json") == 0);
  CHECK(run_cli("fit" + inputs + " --min-papers 1000 --out " + d + "/r3.json --diagnostics " + d + "/diag.csv") ==
        2);
  CHECK(load_results(dir / "r3.json").subjects.empty());
  CHECK(fs::exists(dir / "diag.csv"));
  CHECK(run_cli("fit --papers " + d + "/missing.jsonl --institutions " + d + "/institutions.csv") == 1);
  CHECK(run_cli("fit" + inputs + " --year-min 2010 --year-max 2001") == 1);
  CHECK(run_cli("bogus") == 1);
  fs::remove_all(dir);
}
