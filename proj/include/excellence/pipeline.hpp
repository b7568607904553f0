#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "excellence/corpus.hpp"
#include "excellence/results.hpp"

namespace excellence {

struct PipelineConfig {
  std::vector<std::string> subjects;  // empty: every subject in the corpus
  int year_min = 2005;
  int year_max = 2009;
  std::size_t min_papers = 500;
  std::size_t min_institutions = 50;
  int quad_nodes = 20;
  /// Class-10% flags to use instead of computing percentiles.
  std::optional<std::vector<PercentileAssignment>> precomputed;
  std::map<std::string, std::string> subject_names;
  std::string generated_at;
  bool parallel = true;
};

struct SubjectDiagnostic {
  std::string subject;
  std::string reason;
};

struct PipelineOutput {
  ResultsDocument document;
  std::vector<SubjectDiagnostic> diagnostics;
  /// Computed percentile assignments for every processed subject, in subject order.
  std::vector<PercentileAssignment> percentiles;
};

/// One subject's failure becomes a diagnostic; the other subjects proceed.
/// Results are ordered by subject code regardless of scheduling.
PipelineOutput run_pipeline(const Corpus& corpus, const PipelineConfig& config);

/// Reads `code,name` rows (with header `subject,name`).
std::map<std::string, std::string> parse_subject_names(std::istream& in);

}  // namespace excellence
