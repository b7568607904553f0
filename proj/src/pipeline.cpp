#include "excellence/pipeline.hpp"

#include <future>
#include <set>
#include <algorithm>

#include "excellence/eb.hpp"
#include "excellence/mlm.hpp"

namespace excellence {

namespace {

struct SubjectOutcome {
  std::optional<SubjectResult> result;
  std::optional<SubjectDiagnostic> diagnostic;
  std::vector<PercentileAssignment> percentiles;
};

SubjectOutcome run_subject(const Corpus& corpus, const std::string& subject, const PipelineConfig& cfg) {
  SubjectOutcome out;
  auto fail = [&](std::string reason) {
    out.diagnostic = SubjectDiagnostic{subject, std::move(reason)};
    return std::move(out);
  };
  try {
    const auto attribution = attribute_full_counting(corpus, subject);
    if (attribution.empty()) return fail("no papers in the selected period");
    const auto kept = apply_thresholds(attribution, cfg.min_papers, cfg.min_institutions);
    if (!kept.accepted) return fail(kept.diagnostic());

    ClassFlags flags;
    if (cfg.precomputed) {
      for (const auto& a : *cfg.precomputed)
        if (a.stratum.subject == subject) flags[a.paper_id] = a.is_class10;
    } else {
      out.percentiles = compute_subject_percentiles(corpus, subject, cfg.parallel);
      flags = class_flags(out.percentiles);
    }
    const ClusterTable table = tabulate_clusters(flags, kept.table, subject);

    FitOptions opts;
    opts.nodes = cfg.quad_nodes;
    const FitResult fit = fit_model(table, opts);
    if (!fit.converged)
      return fail("model fit did not converge (gradient norm " + std::to_string(fit.gradient_norm) + ")");

    SubjectResult r;
    r.subject = subject;
    const auto name = cfg.subject_names.find(subject);
    r.name = name == cfg.subject_names.end() ? subject : name->second;
    r.n_institutions = table.rows.size();
    r.model = summarize_model(fit, table);
    for (auto& e : estimate_institutions(fit, table)) {
      const InstitutionRecord* inst = corpus.find_institution(e.institution_id);
      if (!inst) throw ConsistencyError("institution '" + e.institution_id + "' has no record");
      r.institutions.push_back({std::move(e), inst->name, inst->country, inst->latitude, inst->longitude});
    }
    out.result = std::move(r);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return out;
}

}  // namespace

PipelineOutput run_pipeline(const Corpus& input, const PipelineConfig& cfg) {
  const Corpus corpus = input.filter_years(cfg.year_min, cfg.year_max);

  std::set<std::string> wanted(cfg.subjects.begin(), cfg.subjects.end());
  PipelineOutput out;
  out.document.generated_at = cfg.generated_at;

  const auto present = corpus.subjects();
  std::vector<std::string> todo;
  if (wanted.empty()) {
    todo = present;
  } else {
    const std::set<std::string> have(present.begin(), present.end());
    for (const auto& s : wanted) {
      if (have.count(s))
        todo.push_back(s);
      else
        out.diagnostics.push_back({s, "subject not present in the selected period"});
    }
  }

  std::vector<SubjectOutcome> outcomes;
  if (cfg.parallel && todo.size() > 1) {
    std::vector<std::future<SubjectOutcome>> jobs;
    for (const auto& s : todo)
      jobs.push_back(std::async(std::launch::async, run_subject, std::cref(corpus), std::cref(s), std::cref(cfg)));
    for (auto& j : jobs) outcomes.push_back(j.get());
  } else {
    for (const auto& s : todo) outcomes.push_back(run_subject(corpus, s, cfg));
  }

  for (auto& o : outcomes) {
    if (o.result) out.document.subjects.push_back(std::move(*o.result));
    if (o.diagnostic) out.diagnostics.push_back(std::move(*o.diagnostic));
    std::move(o.percentiles.begin(), o.percentiles.end(), std::back_inserter(out.percentiles));
  }
  std::sort(out.diagnostics.begin(), out.diagnostics.end(),
            [](const SubjectDiagnostic& a, const SubjectDiagnostic& b) { return a.subject < b.subject; });
  return out;
}

std::map<std::string, std::string> parse_subject_names(std::istream& in) {
  std::map<std::string, std::string> names;
  std::size_t line = 0;
  auto header = read_csv_record(in, line);
  if (!header || header->size() != 2 || (*header)[0] != "subject" || (*header)[1] != "name")
    throw ParseError(1, "", "expected header 'subject,name'");
  while (auto rec = read_csv_record(in, line)) {
    if (rec->size() == 1 && rec->front().empty()) continue;
    if (rec->size() != 2) throw ParseError(line, "", "expected 2 columns");
    names[(*rec)[0]] = (*rec)[1];
  }
  return names;
}

}  // namespace excellence
