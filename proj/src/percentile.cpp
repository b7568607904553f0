#include "excellence/percentile.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <numeric>

namespace excellence {

std::vector<RankedEntry> rank_stratum(std::span<const StratumEntry> papers) {
  std::vector<RankedEntry> out;
  out.reserve(papers.size());
  for (const auto& p : papers) out.push_back({p, 0, 0});
  std::sort(out.begin(), out.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.entry.citations != b.entry.citations) return a.entry.citations < b.entry.citations;
    if (a.entry.journal_sjr2 != b.entry.journal_sjr2) return a.entry.journal_sjr2 < b.entry.journal_sjr2;
    return a.entry.paper_id < b.entry.paper_id;
  });
  // Equal citations: higher SJR2 takes the higher rank.
  std::size_t group = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0 && (out[i].entry.citations != out[i - 1].entry.citations ||
                  out[i].entry.journal_sjr2 != out[i - 1].entry.journal_sjr2))
      ++group;
    out[i].rank = i + 1;
    out[i].tie_group = group;
  }
  return out;
}

std::vector<PercentileAssignment> assign_percentiles(std::span<const RankedEntry> ranked, const Stratum& stratum) {
  const std::size_t n = ranked.size();
  std::vector<PercentileAssignment> out;
  out.reserve(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && ranked[j + 1].tie_group == ranked[i].tie_group) ++j;
    const std::size_t top_rank = ranked[j].rank;
    const double pct = 100.0 * static_cast<double>(top_rank - 1) / static_cast<double>(n);
    const bool flagged = 10 * (top_rank - 1) >= 9 * n;
    for (std::size_t m = i; m <= j; ++m)
      out.push_back({ranked[m].entry.paper_id, stratum, ranked[m].rank, pct, flagged});
    i = j + 1;
  }
  return out;
}

std::vector<PercentileAssignment> compute_subject_percentiles(const Corpus& corpus, const std::string& subject,
                                                              bool parallel) {
  std::map<Stratum, std::vector<StratumEntry>> strata;
  for (const auto& p : corpus.papers()) {
    if (!p.subject_areas.count(subject)) continue;
    strata[{subject, p.year, p.doc_type}].push_back({p.paper_id, p.citations, p.journal_sjr2});
  }

  auto run = [](const Stratum& s, const std::vector<StratumEntry>& entries) {
    const auto ranked = rank_stratum(entries);
    return assign_percentiles(ranked, s);
  };

  std::vector<std::vector<PercentileAssignment>> parts;
  parts.reserve(strata.size());
  if (parallel && strata.size() > 1) {
    std::vector<std::future<std::vector<PercentileAssignment>>> jobs;
    for (const auto& [s, entries] : strata)
      jobs.push_back(std::async(std::launch::async, run, std::cref(s), std::cref(entries)));
    for (auto& j : jobs) parts.push_back(j.get());
  } else {
    for (const auto& [s, entries] : strata) parts.push_back(run(s, entries));
  }

  std::vector<PercentileAssignment> out;
  for (auto& part : parts) std::move(part.begin(), part.end(), std::back_inserter(out));
  return out;
}

ClassFlags class_flags(std::span<const PercentileAssignment> assignments) {
  ClassFlags flags;
  for (const auto& a : assignments) flags[a.paper_id] = a.is_class10;
  return flags;
}

ClusterTable make_cluster_table(std::string subject, std::vector<ClusterRow> rows) {
  for (const auto& r : rows) {
    if (r.n < 1 || r.k < 0 || r.k > r.n)
      throw std::invalid_argument("cluster '" + r.institution_id + "' violates 0 <= k <= n, n >= 1");
  }
  ClusterTable t;
  t.subject = std::move(subject);
  t.rows = std::move(rows);
  if (!t.rows.empty()) {
    double sum = 0.0;
    for (const auto& r : t.rows) sum += r.raw_prop();
    t.mean_raw_proportion = sum / static_cast<double>(t.rows.size());
  }
  return t;
}

ClusterTable tabulate_clusters(const ClassFlags& flags, const AttributionTable& attribution,
                               const std::string& subject) {
  std::vector<ClusterRow> rows;
  rows.reserve(attribution.size());
  for (const auto& [inst, papers] : attribution) {
    ClusterRow row{inst, 0, 0};
    for (const auto& pid : papers) {
      const auto it = flags.find(pid);
      if (it == flags.end())
        throw ConsistencyError("paper '" + pid + "' attributed to '" + inst + "' has no percentile assignment");
      ++row.n;
      if (it->second) ++row.k;
    }
    if (row.n > 0) rows.push_back(std::move(row));
  }
  return make_cluster_table(subject, std::move(rows));
}

ClusterTable tabulate_clusters(std::span<const PercentileAssignment> assignments,
                               const AttributionTable& attribution, const std::string& subject) {
  return tabulate_clusters(class_flags(assignments), attribution, subject);
}

void write_assignments_csv(std::ostream& out, std::span<const PercentileAssignment> assignments) {
  out << "paper_id,subject,year,doc_type,rank,percentile,is_class10\n";
  char buf[64];
  for (const auto& a : assignments) {
    std::snprintf(buf, sizeof buf, "%.6f", a.percentile);
    out << a.paper_id << ',' << a.stratum.subject << ',' << a.stratum.year << ',' << to_string(a.stratum.doc_type)
        << ',' << a.rank << ',' << buf << ',' << (a.is_class10 ? 1 : 0) << '\n';
  }
}

std::vector<PercentileAssignment> read_assignments_csv(std::istream& in) {
  std::size_t line = 0;
  auto header = read_csv_record(in, line);
  const std::vector<std::string> expected = {"paper_id", "subject",    "year",      "doc_type",
                                             "rank",     "percentile", "is_class10"};
  if (!header || *header != expected) throw ParseError(1, "", "unexpected assignments header");
  std::vector<PercentileAssignment> out;
  while (auto rec = read_csv_record(in, line)) {
    if (rec->size() == 1 && rec->front().empty()) continue;
    if (rec->size() != expected.size()) throw ParseError(line, "", "expected 7 columns");
    const auto& r = *rec;
    PercentileAssignment a;
    a.paper_id = r[0];
    a.stratum.subject = r[1];
    try {
      a.stratum.year = std::stoi(r[2]);
      a.stratum.doc_type = parse_doc_type(r[3]);
      a.rank = static_cast<std::size_t>(std::stoull(r[4]));
      a.percentile = std::stod(r[5]);
    } catch (const std::exception& e) {
      throw ParseError(line, "", e.what());
    }
    if (r[6] != "0" && r[6] != "1") throw ParseError(line, "is_class10", "expected 0 or 1");
    a.is_class10 = r[6] == "1";
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace excellence
