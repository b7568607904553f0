#include <cmath>
#include <sstream>

#include "doctest.h"
#include "excellence/percentile.hpp"
#include "oracles.hpp"

using namespace excellence;

namespace {

std::vector<PercentileAssignment> percentiles_of(const std::vector<StratumEntry>& entries) {
  const auto ranked = rank_stratum(entries);
  return assign_percentiles(ranked, Stratum{"BIO", 2007, DocType::article});
}

std::vector<StratumEntry> untied(std::size_t n) {
  std::vector<StratumEntry> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({"P" + std::to_string(i), static_cast<std::int64_t>(i), 1.0});
  return v;
}

std::size_t flagged(const std::vector<PercentileAssignment>& a) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](const auto& x) { return x.is_class10; }));
}

PaperRecord paper(std::string id, std::set<std::string> affil, std::int64_t cites) {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.year = 2007;
  p.subject_areas = {"BIO"};
  p.citations = cites;
  p.affiliations = std::move(affil);
  return p;
}

}  // namespace

TEST_CASE("rank_stratum ordering") {
  SUBCASE("ascending citations") {
    const auto r = rank_stratum(std::vector<StratumEntry>{{"a", 3, 1}, {"b", 1, 1}, {"c", 2, 1}});
    CHECK(r[0].entry.citations == 1);
    CHECK(r[1].entry.citations == 2);
    CHECK(r[2].entry.citations == 3);
    CHECK(r[2].rank == 3);
  }
  SUBCASE("higher SJR2 takes the higher rank") {
    const auto r = rank_stratum(std::vector<StratumEntry>{{"hi", 10, 2.0}, {"lo", 10, 1.0}});
    CHECK(r[1].entry.paper_id == "hi");
    CHECK(r[0].tie_group != r[1].tie_group);
  }
  SUBCASE("full ties form one group ordered by id") {
    const auto r = rank_stratum(std::vector<StratumEntry>{{"P3", 10, 1.0}, {"P1", 10, 1.0}, {"P2", 10, 1.0}});
    CHECK(r[0].entry.paper_id == "P1");
    CHECK(r[2].entry.paper_id == "P3");
    CHECK(r[0].tie_group == r[2].tie_group);
  }
  SUBCASE("empty stratum") { CHECK(rank_stratum(std::vector<StratumEntry>{}).empty()); }
}

TEST_CASE("assign_percentiles") {
  SUBCASE("n = 10 flags exactly the top paper") {
    const auto a = percentiles_of(untied(10));
    CHECK(a[9].percentile == 90.0);
    CHECK(a[9].is_class10);
    CHECK(a[8].percentile == 80.0);
    CHECK_FALSE(a[8].is_class10);
    CHECK(flagged(a) == 1);
  }
  SUBCASE("flagged count is n - ceil(0.9 n) without ties") {
    for (std::size_t n = 1; n <= 100; ++n) {
      std::size_t ceil90 = (9 * n + 9) / 10;
      CHECK(flagged(percentiles_of(untied(n))) == n - ceil90);
    }
  }
  SUBCASE("a tie at the top inflates the class to 20%") {
    auto e = untied(10);
    e[8] = {"P8", 9, 1.0};  // same as P9
    e[9] = {"P9", 9, 1.0};
    const auto a = percentiles_of(e);
    CHECK(a[8].percentile == 90.0);
    CHECK(a[9].percentile == 90.0);
    CHECK(flagged(a) == 2);
  }
  SUBCASE("agrees with the brute-force oracle") {
    std::vector<StratumEntry> e;
    std::vector<oracle::Paper> o;
    for (int i = 0; i < 57; ++i) {
      const std::int64_t c = (i * 7) % 13;
      const double s = static_cast<double>(i % 3);
      e.push_back({"P" + std::to_string(100 + i), c, s});
      o.push_back({"P" + std::to_string(100 + i), c, s});
    }
    const auto want = oracle::brute_force_class10(o);
    std::map<std::string, bool> got;
    for (const auto& a : percentiles_of(e)) got[a.paper_id] = a.is_class10;
    for (std::size_t i = 0; i < o.size(); ++i) CHECK(got.at(o[i].id) == want[i]);
  }
}

TEST_CASE("compute_subject_percentiles splits by year and document type") {
  std::vector<PaperRecord> ps;
  for (int i = 0; i < 20; ++i) {
    auto p = paper("P" + std::to_string(i), {"A"}, i);
    p.year = 2005 + i % 2;
    if (i % 4 == 0) p.doc_type = DocType::review;
    ps.push_back(p);
  }
  const Corpus c(ps, {{"A", "A", "DE", 0, 0}}, 2011);
  const auto seq = compute_subject_percentiles(c, "BIO", false);
  const auto par = compute_subject_percentiles(c, "BIO", true);
  REQUIRE(seq.size() == 20);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].paper_id == par[i].paper_id);
    CHECK(seq[i].percentile == par[i].percentile);
    CHECK(seq[i].is_class10 == par[i].is_class10);
  }
  // 2005 articles: i = 2, 6, 10, 14, 18 -> the top of five is at 80
  std::size_t n2005_art = 0;
  for (const auto& a : seq)
    if (a.stratum.year == 2005 && a.stratum.doc_type == DocType::article) ++n2005_art;
  CHECK(n2005_art == 5);
}

TEST_CASE("tabulate_clusters") {
  SUBCASE("shared class-10% paper adds one to each institution") {
    ClassFlags flags{{"P1", true}, {"P2", false}};
    AttributionTable t{{"A", {"P1", "P2"}}, {"B", {"P1"}}, {"C", {"P1"}}};
    const auto ct = tabulate_clusters(flags, t, "BIO");
    REQUIRE(ct.rows.size() == 3);
    CHECK(ct.rows[0].k == 1);
    CHECK(ct.rows[0].n == 2);
    CHECK(ct.rows[1].k == 1);
    CHECK(ct.rows[2].k == 1);
    CHECK(ct.mean_raw_proportion == doctest::Approx((0.5 + 1 + 1) / 3));
  }
  SUBCASE("all flagged gives k = n") {
    ClassFlags flags{{"P1", true}, {"P2", true}};
    const auto ct = tabulate_clusters(flags, {{"A", {"P1", "P2"}}}, "BIO");
    CHECK(ct.rows[0].k == ct.rows[0].n);
  }
  SUBCASE("unassigned paper is an internal error") {
    CHECK_THROWS_AS(tabulate_clusters(ClassFlags{{"P1", true}}, {{"A", {"P1", "P9"}}}, "BIO"), ConsistencyError);
  }
  SUBCASE("make_cluster_table checks counts") {
    CHECK_THROWS_AS(make_cluster_table("X", {{"A", 5, 6}}), std::invalid_argument);
    CHECK_THROWS_AS(make_cluster_table("X", {{"A", 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_cluster_table("X", {{"A", 5, -1}}), std::invalid_argument);
  }
}

TEST_CASE("assignments CSV round-trip") {
  std::vector<PercentileAssignment> a = percentiles_of(untied(7));
  a[2].stratum = {"CHE", 2009, DocType::conference_paper};
  std::stringstream ss;
  write_assignments_csv(ss, a);
  const auto b = read_assignments_csv(ss);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].paper_id == a[i].paper_id);
    CHECK(b[i].stratum == a[i].stratum);
    CHECK(b[i].rank == a[i].rank);
    CHECK(std::abs(b[i].percentile - a[i].percentile) <= 5e-7);  // written with 6 decimals
    CHECK(b[i].is_class10 == a[i].is_class10);
  }
  std::istringstream bad("paper_id,rank\n");
  CHECK_THROWS_AS(read_assignments_csv(bad), ParseError);
}
