#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "excellence/corpus.hpp"

namespace excellence {

struct Stratum {
  std::string subject;
  int year = 0;
  DocType doc_type = DocType::article;

  auto operator<=>(const Stratum&) const = default;
};

/// Input to rank_stratum: the sort keys of one paper.
struct StratumEntry {
  std::string paper_id;
  std::int64_t citations = 0;
  double journal_sjr2 = 0.0;
};

/// A stratum entry after ordering. `tie_group` numbers runs of entries with
/// equal citations and equal SJR2 (0-based, ascending with rank).
struct RankedEntry {
  StratumEntry entry;
  std::size_t rank = 0;  // 1-based
  std::size_t tie_group = 0;
};

struct PercentileAssignment {
  std::string paper_id;
  Stratum stratum;
  std::size_t rank = 0;
  double percentile = 0.0;
  bool is_class10 = false;
};

/// Ascending by citations; equal citations ordered by SJR2 from highest to
/// lowest, so the higher-prestige paper gets the higher rank; remaining ties
/// ordered by paper_id and grouped.
std::vector<RankedEntry> rank_stratum(std::span<const StratumEntry> papers);

/// percentile = 100 (r - 1) / n, raised to the tie group's maximum;
/// class 10% iff percentile >= 90 (decided in integer arithmetic).
std::vector<PercentileAssignment> assign_percentiles(std::span<const RankedEntry> ranked, const Stratum& stratum);

/// Runs rank_stratum/assign_percentiles on every (year, doc_type) stratum of
/// `subject`. Strata run concurrently when `parallel` is set; output is
/// ordered by stratum key then rank either way.
std::vector<PercentileAssignment> compute_subject_percentiles(const Corpus& corpus, const std::string& subject,
                                                              bool parallel = true);

struct ClusterRow {
  std::string institution_id;
  std::int64_t n = 0;  // papers attributed
  std::int64_t k = 0;  // class-10% papers attributed

  double raw_prop() const { return static_cast<double>(k) / static_cast<double>(n); }
};

struct ClusterTable {
  std::string subject;
  std::vector<ClusterRow> rows;  // ordered by institution_id
  double mean_raw_proportion = 0.0;
};

class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// paper_id -> class-10% flag.
using ClassFlags = std::map<std::string, bool>;

ClassFlags class_flags(std::span<const PercentileAssignment> assignments);

/// Throws ConsistencyError if an attributed paper has no flag.
ClusterTable tabulate_clusters(const ClassFlags& flags, const AttributionTable& attribution,
                               const std::string& subject);

ClusterTable tabulate_clusters(std::span<const PercentileAssignment> assignments,
                               const AttributionTable& attribution, const std::string& subject);

/// Builds a table directly from (n, k) counts; rows must satisfy 0 <= k <= n, n >= 1.
ClusterTable make_cluster_table(std::string subject, std::vector<ClusterRow> rows);

/// CSV `paper_id,subject,year,doc_type,rank,percentile,is_class10`.
void write_assignments_csv(std::ostream& out, std::span<const PercentileAssignment> assignments);
std::vector<PercentileAssignment> read_assignments_csv(std::istream& in);

}  // namespace excellence
