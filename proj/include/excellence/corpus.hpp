#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace excellence {

enum class DocType { article, review, conference_paper };

std::string to_string(DocType t);
DocType parse_doc_type(const std::string& s);  // throws std::invalid_argument

struct PaperRecord {
  std::string paper_id;
  int year = 0;
  DocType doc_type = DocType::article;
  std::set<std::string> subject_areas;
  std::int64_t citations = 0;
  double journal_sjr2 = 0.0;
  std::set<std::string> affiliations;
};

struct InstitutionRecord {
  std::string institution_id;
  std::string name;
  std::string country;
  double latitude = 0.0;
  double longitude = 0.0;
};

/// Raised for any row that fails to decode or violates a record invariant.
/// `line` is 1-based; `field` is empty for row-level problems.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

enum class PaperFormat { jsonl, csv };

/// Papers in CSV use the header
/// `paper_id,year,doc_type,subject_areas,citations,journal_sjr2,affiliations`
/// with `;` separating the entries of the two list columns.
std::vector<PaperRecord> parse_papers(std::istream& in, PaperFormat format);

/// Header `institution_id,name,country,latitude,longitude`, RFC-4180 quoting.
std::vector<InstitutionRecord> parse_institutions(std::istream& in);

/// Splits one RFC-4180 record. Handles quoted fields spanning lines by
/// pulling further lines from `in`; `line_no` is advanced accordingly.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in, std::size_t& line_no);

class Corpus {
 public:
  Corpus(std::vector<PaperRecord> papers, std::vector<InstitutionRecord> institutions,
         int census_year);

  const std::vector<PaperRecord>& papers() const noexcept { return papers_; }
  const std::vector<InstitutionRecord>& institutions() const noexcept { return institutions_; }
  int census_year() const noexcept { return census_year_; }

  const InstitutionRecord* find_institution(const std::string& id) const;
  const PaperRecord* find_paper(const std::string& id) const;

  /// Sorted, distinct subject codes occurring in the corpus.
  std::vector<std::string> subjects() const;

  /// Keeps only papers with year in [year_min, year_max].
  Corpus filter_years(int year_min, int year_max) const;

 private:
  std::vector<PaperRecord> papers_;
  std::vector<InstitutionRecord> institutions_;
  int census_year_;
  std::unordered_map<std::string, std::size_t> institution_index_;
  std::unordered_map<std::string, std::size_t> paper_index_;
};

/// institution id -> ids of the papers attributed to it (full counting).
using AttributionTable = std::map<std::string, std::vector<std::string>>;

AttributionTable attribute_full_counting(const Corpus& corpus, const std::string& subject);

struct ThresholdOutcome {
  bool accepted = false;
  AttributionTable table;          // survivors of the min_papers cut
  std::size_t n_institutions_before = 0;
  std::size_t n_surviving = 0;
  std::size_t min_papers = 0;
  std::size_t min_institutions = 0;

  std::string diagnostic() const;
};

ThresholdOutcome apply_thresholds(const AttributionTable& table, std::size_t min_papers = 500,
                                  std::size_t min_institutions = 50);

}  // namespace excellence
