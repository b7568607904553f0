#include <numeric>
#include <sstream>

#include "doctest.h"
#include "excellence/corpus.hpp"

using namespace excellence;

namespace {

std::vector<PaperRecord> papers_from(const std::string& text, PaperFormat fmt = PaperFormat::jsonl) {
  std::istringstream in(text);
  return parse_papers(in, fmt);
}

PaperRecord paper(std::string id, std::set<std::string> affil, std::set<std::string> subjects = {"BIO"},
                  int year = 2007) {
  PaperRecord p;
  p.paper_id = std::move(id);
  p.year = year;
  p.subject_areas = std::move(subjects);
  p.affiliations = std::move(affil);
  return p;
}

std::vector<InstitutionRecord> insts(std::initializer_list<const char*> ids) {
  std::vector<InstitutionRecord> out;
  for (const char* id : ids) out.push_back({id, std::string("Inst ") + id, "DE", 50.0, 8.0});
  return out;
}

std::size_t total_attributions(const AttributionTable& t) {
  return std::accumulate(t.begin(), t.end(), std::size_t{0},
                         [](std::size_t s, const auto& kv) { return s + kv.second.size(); });
}

}  // namespace

TEST_CASE("parse_papers reads JSONL") {
  const auto ps = papers_from(
      R"({"paper_id":"P1","year":2006,"doc_type":"review","subject_areas":["BIO","CHE"],"citations":50,"journal_sjr2":1.25,"affiliations":["A"]})"
      "\n\n");
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].paper_id == "P1");
  CHECK(ps[0].citations == 50);
  CHECK(ps[0].doc_type == DocType::review);
  CHECK(ps[0].subject_areas == std::set<std::string>{"BIO", "CHE"});
  CHECK(ps[0].journal_sjr2 == 1.25);
}

TEST_CASE("parse_papers reads CSV") {
  const auto ps = papers_from(
      "paper_id,year,doc_type,subject_areas,citations,journal_sjr2,affiliations\n"
      "P1,2005,article,BIO;MED,7,0.5,A;B\n"
      "P2,2009,conference_paper,CS,0,0,\"C\"\n",
      PaperFormat::csv);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].affiliations == std::set<std::string>{"A", "B"});
  CHECK(ps[0].subject_areas == std::set<std::string>{"BIO", "MED"});
  CHECK(ps[1].doc_type == DocType::conference_paper);
  CHECK(ps[1].year == 2009);
}

TEST_CASE("parse errors name line and field") {
  SUBCASE("negative citations") {
    try {
      papers_from(
          R"({"paper_id":"P1","year":2006,"doc_type":"article","subject_areas":["BIO"],"citations":50,"journal_sjr2":1,"affiliations":["A"]})"
          "\n"
          R"({"paper_id":"P2","year":2006,"doc_type":"article","subject_areas":["BIO"],"citations":-1,"journal_sjr2":1,"affiliations":["A"]})");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.field() == "citations");
      CHECK(std::string(e.what()).find("citations") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    const std::string row =
        R"({"paper_id":"P1","year":2006,"doc_type":"article","subject_areas":["BIO"],"citations":1,"journal_sjr2":1,"affiliations":["A"]})";
    CHECK_THROWS_WITH_AS(papers_from(row + "\n" + row), doctest::Contains("duplicate paper_id 'P1'"), ParseError);
  }
  SUBCASE("malformed rows") {
    CHECK_THROWS_AS(papers_from("{not json"), ParseError);
    CHECK_THROWS_AS(papers_from(R"({"paper_id":"P1"})"), ParseError);
    CHECK_THROWS_AS(papers_from("paper_id,year\nP1,2000\n", PaperFormat::csv), ParseError);
    CHECK_THROWS_AS(
        papers_from("paper_id,year,doc_type,subject_areas,citations,journal_sjr2,affiliations\n"
                    "P1,2005,letter,BIO,7,0.5,A\n",
                    PaperFormat::csv),
        ParseError);
    CHECK_THROWS_AS(
        papers_from("paper_id,year,doc_type,subject_areas,citations,journal_sjr2,affiliations\n"
                    "P1,2005,article,BIO,seven,0.5,A\n",
                    PaperFormat::csv),
        ParseError);
  }
}

TEST_CASE("parse_institutions") {
  std::istringstream in(
      "institution_id,name,country,latitude,longitude\n"
      "A,\"Univ. of X, \"\"Main\"\"\",DE,48.1,11.6\n"
      "B,\"Two\nLines\",FR,-10,170\n");
  const auto v = parse_institutions(in);
  REQUIRE(v.size() == 2);
  CHECK(v[0].name == "Univ. of X, \"Main\"");
  CHECK(v[1].name == "Two\nLines");
  CHECK(v[1].longitude == 170.0);

  std::istringstream bad("institution_id,name,country,latitude,longitude\nA,x,DE,95,0\n");
  CHECK_THROWS_WITH_AS(parse_institutions(bad), doctest::Contains("latitude"), ParseError);
  std::istringstream dup("institution_id,name,country,latitude,longitude\nA,x,DE,1,0\nA,y,DE,1,0\n");
  CHECK_THROWS_AS(parse_institutions(dup), ParseError);
}

TEST_CASE("Corpus validates references") {
  CHECK_THROWS_AS(Corpus({paper("P1", {"Z"})}, insts({"A"}), 2011), std::invalid_argument);
  CHECK_THROWS_AS(Corpus({paper("P1", {"A"}), paper("P1", {"A"})}, insts({"A"}), 2011), std::invalid_argument);
  const Corpus c({paper("P1", {"A"}, {"BIO"}, 2004), paper("P2", {"A"}, {"CHE"}, 2006)}, insts({"A"}), 2011);
  CHECK(c.subjects() == std::vector<std::string>{"BIO", "CHE"});
  CHECK(c.filter_years(2005, 2009).papers().size() == 1);
  CHECK(c.find_paper("P2") != nullptr);
  CHECK(c.find_institution("B") == nullptr);
}

TEST_CASE("full counting") {
  SUBCASE("co-affiliated paper counts once for each institution") {
    const Corpus c({paper("P1", {"A", "B"})}, insts({"A", "B"}), 2011);
    const auto t = attribute_full_counting(c, "BIO");
    CHECK(t.at("A") == std::vector<std::string>{"P1"});
    CHECK(t.at("B") == std::vector<std::string>{"P1"});
  }
  SUBCASE("single affiliation") {
    const Corpus c({paper("P1", {"A"})}, insts({"A", "B"}), 2011);
    const auto t = attribute_full_counting(c, "BIO");
    CHECK(t.size() == 1);
    CHECK(total_attributions(t) == 1);
  }
  SUBCASE("3 papers with 2 affiliations each") {
    const Corpus c({paper("P1", {"A", "B"}), paper("P2", {"B", "C"}), paper("P3", {"A", "C"})},
                   insts({"A", "B", "C"}), 2011);
    CHECK(total_attributions(attribute_full_counting(c, "BIO")) == 6);
  }
  SUBCASE("other subjects are ignored") {
    const Corpus c({paper("P1", {"A"}, {"CHE"})}, insts({"A"}), 2011);
    CHECK(attribute_full_counting(c, "BIO").empty());
  }
  SUBCASE("attribution total equals the sum of affiliation counts") {
    std::vector<PaperRecord> ps;
    std::size_t expected = 0;
    for (int i = 0; i < 40; ++i) {
      std::set<std::string> a;
      for (int j = 0; j <= i % 4; ++j) a.insert(std::string(1, static_cast<char>('A' + (i + j) % 5)));
      expected += a.size();
      ps.push_back(paper("P" + std::to_string(i), a));
    }
    const Corpus c(std::move(ps), insts({"A", "B", "C", "D", "E"}), 2011);
    CHECK(total_attributions(attribute_full_counting(c, "BIO")) == expected);
  }
}

TEST_CASE("thresholds") {
  auto table_with = [](std::size_t n_inst, std::size_t papers) {
    AttributionTable t;
    for (std::size_t i = 0; i < n_inst; ++i)
      t["I" + std::to_string(i)] = std::vector<std::string>(papers, "P");
    return t;
  };

  SUBCASE("499 papers removed, 500 kept") {
    AttributionTable t;
    t["small"] = std::vector<std::string>(499, "P");
    t["big"] = std::vector<std::string>(500, "P");
    const auto out = apply_thresholds(t, 500, 1);
    CHECK(out.table.count("small") == 0);
    CHECK(out.table.count("big") == 1);
  }
  SUBCASE("49 institutions rejected, 50 accepted") {
    const auto rej = apply_thresholds(table_with(49, 500));
    CHECK_FALSE(rej.accepted);
    CHECK(rej.diagnostic().rfind("below min_institutions (49 < 50)", 0) == 0);
    CHECK(apply_thresholds(table_with(50, 500)).accepted);
    CHECK(apply_thresholds(table_with(50, 500)).diagnostic().empty());
  }
  SUBCASE("unit thresholds are the identity") {
    AttributionTable t;
    t["a"] = {"P1"};
    t["b"] = {"P1", "P2", "P3"};
    const auto out = apply_thresholds(t, 1, 1);
    CHECK(out.accepted);
    CHECK(out.table == t);
  }
  SUBCASE("raising min_papers never adds survivors") {
    AttributionTable t;
    for (std::size_t i = 0; i < 30; ++i) t["I" + std::to_string(i)] = std::vector<std::string>(i * 37 % 101 + 1, "P");
    std::size_t prev = t.size();
    for (std::size_t m = 1; m <= 120; ++m) {
      const auto n = apply_thresholds(t, m, 1).n_surviving;
      CHECK(n <= prev);
      prev = n;
    }
  }
  SUBCASE("zero thresholds are rejected") {
    CHECK_THROWS_AS(apply_thresholds({}, 0, 50), std::invalid_argument);
    CHECK_THROWS_AS(apply_thresholds({}, 500, 0), std::invalid_argument);
  }
}
