#include "excellence/eb.hpp"

#include <algorithm>
#include <cmath>

namespace excellence {

std::string to_string(Significance s) {
  switch (s) {
    case Significance::above: return "above";
    case Significance::below: return "below";
    case Significance::not_distinguishable: return "not_distinguishable";
  }
  return "not_distinguishable";
}

Significance parse_significance(const std::string& s) {
  if (s == "above") return Significance::above;
  if (s == "below") return Significance::below;
  if (s == "not_distinguishable") return Significance::not_distinguishable;
  throw std::invalid_argument("unknown significance '" + s + "'");
}

PosteriorSummary posterior_summary(const FitResult& fit, std::int64_t n, std::int64_t k) {
  if (!fit.converged) throw std::invalid_argument("posterior_summary needs a converged fit");
  const double sigma2 = fit.sigma2();
  if (sigma2 == 0.0) return {fit.params.beta0, fit.se_beta0};
  const auto post = cluster_posterior(n, k, fit.params.beta0, sigma2);
  return {fit.params.beta0 + post.mode, 1.0 / std::sqrt(post.curvature)};
}

IntervalPair intervals(double eb_logit, double eb_se) {
  if (!(eb_se >= 0.0)) throw std::invalid_argument("eb_se must be >= 0");
  auto band = [&](double z) { return Interval{logistic(eb_logit - z * eb_se), logistic(eb_logit + z * eb_se)}; };
  return {band(kZ95), band(kZGoldstein)};
}

Significance compare_to_mean(const Interval& ci, double grand_mean_prob) {
  if (ci.lo > grand_mean_prob) return Significance::above;
  if (ci.hi < grand_mean_prob) return Significance::below;
  return Significance::not_distinguishable;
}

Significance significance_vs_mean(const InstitutionEstimate& estimate, const FitResult& fit) {
  return compare_to_mean(estimate.ci95, fit.grand_mean_prob);
}

double rank_score(double eb_prob, double grand_mean_prob) {
  if (!(eb_prob > 0.0 && eb_prob < 1.0 && grand_mean_prob > 0.0 && grand_mean_prob < 1.0))
    throw std::invalid_argument("rank_score needs probabilities in (0, 1)");
  return std::log(eb_prob / grand_mean_prob);
}

Comparison compare_institutions(const InstitutionEstimate& a, const InstitutionEstimate& b) {
  if (a.subject != b.subject)
    throw CrossSubjectComparison("estimates from subjects '" + a.subject + "' and '" + b.subject +
                                 "' are not comparable");
  if (a.ci_goldstein.lo > b.ci_goldstein.hi) return Comparison::a_higher;
  if (b.ci_goldstein.lo > a.ci_goldstein.hi) return Comparison::b_higher;
  return Comparison::not_distinguishable;
}

std::vector<InstitutionEstimate> estimate_institutions(const FitResult& fit, const ClusterTable& table) {
  std::vector<InstitutionEstimate> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    InstitutionEstimate e;
    e.institution_id = row.institution_id;
    e.subject = table.subject;
    e.n_papers = row.n;
    e.n_top = row.k;
    e.raw_prop = row.raw_prop();
    const auto post = posterior_summary(fit, row.n, row.k);
    e.eb_logit = post.eb_logit;
    e.eb_se = post.eb_se;
    e.eb_prob = logistic(post.eb_logit);
    const auto ci = intervals(post.eb_logit, post.eb_se);
    e.ci95 = ci.ci95;
    e.ci_goldstein = ci.ci_goldstein;
    e.sig_vs_mean = significance_vs_mean(e, fit);
    e.sig_vs_mean_goldstein = compare_to_mean(e.ci_goldstein, fit.grand_mean_prob);
    e.rank_score = rank_score(e.eb_prob, fit.grand_mean_prob);
    out.push_back(std::move(e));
  }
  // eb_logit orders identically to rank_score and keeps distinct values
  // distinct when the probabilities round together.
  std::stable_sort(out.begin(), out.end(), [](const InstitutionEstimate& a, const InstitutionEstimate& b) {
    if (a.eb_logit != b.eb_logit) return a.eb_logit > b.eb_logit;
    return a.institution_id < b.institution_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace excellence
