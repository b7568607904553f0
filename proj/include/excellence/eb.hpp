#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "excellence/mlm.hpp"

namespace excellence {

inline constexpr double kZ95 = 1.96;
/// Goldstein-Healy multiplier: non-overlap of +-1.39 SE intervals is a
/// ~5% pairwise test for equal standard errors.
inline constexpr double kZGoldstein = 1.39;
/// Level of a Goldstein-interval comparison against a fixed value, as it
/// is usually quoted (2 (1 - Phi(1.39)) is 0.1645).
inline constexpr double kGoldsteinLevel = 0.163;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

enum class Significance { above, not_distinguishable, below };
std::string to_string(Significance s);
Significance parse_significance(const std::string& s);

enum class Comparison { a_higher, b_higher, not_distinguishable };

struct PosteriorSummary {
  double eb_logit = 0.0;
  double eb_se = 0.0;
};

struct InstitutionEstimate {
  std::string institution_id;
  std::string subject;
  std::int64_t n_papers = 0;
  std::int64_t n_top = 0;
  double raw_prop = 0.0;
  double eb_logit = 0.0;
  double eb_se = 0.0;
  double eb_prob = 0.0;
  Interval ci95;
  Interval ci_goldstein;
  Significance sig_vs_mean = Significance::not_distinguishable;
  Significance sig_vs_mean_goldstein = Significance::not_distinguishable;
  double rank_score = 0.0;
  std::size_t rank = 0;
};

/// Posterior mode of beta0 + u_j and its curvature-based standard error.
/// With sigma2 = 0 every institution collapses to (beta0, se(beta0)).
PosteriorSummary posterior_summary(const FitResult& fit, std::int64_t n, std::int64_t k);

struct IntervalPair {
  Interval ci95;
  Interval ci_goldstein;
};

/// Built on the logit scale, then mapped through logistic.
IntervalPair intervals(double eb_logit, double eb_se);

Significance compare_to_mean(const Interval& ci, double grand_mean_prob);
Significance significance_vs_mean(const InstitutionEstimate& estimate, const FitResult& fit);

/// ln(eb_prob / grand_mean_prob).
double rank_score(double eb_prob, double grand_mean_prob);

class CrossSubjectComparison : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Decided by disjointness of the Goldstein intervals; touching intervals
/// are not distinguishable.
Comparison compare_institutions(const InstitutionEstimate& a, const InstitutionEstimate& b);

/// One estimate per table row, ordered by rank_score descending (ties by
/// institution_id) with 1-based ranks.
std::vector<InstitutionEstimate> estimate_institutions(const FitResult& fit, const ClusterTable& table);

}  // namespace excellence
