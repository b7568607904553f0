#pragma once

// Independent reference computations for the tests. Nothing here calls the
// quadrature, mode search or ranking code it is used to check.

#include <cstdint>
#include <string>
#include <vector>

#include "excellence/mlm.hpp"

namespace oracle {

/// Trapezoid rule on [-10 sigma, 10 sigma] with `points` nodes per cluster.
double oracle_loglik(const excellence::ModelParams& params, const excellence::ClusterTable& table,
                     int points = 20001);

/// log C(n,k) + k log p + (n-k) log(1-p), straight from the definition.
double binomial_loglik_direct(std::int64_t n, std::int64_t k, double p);

/// argmax over u in [lo, hi] (grid step `step`) of k(b+u) - n log(1+e^(b+u)) - u^2/(2 sigma2).
double grid_posterior_mode(std::int64_t n, std::int64_t k, double beta0, double sigma2, double lo = -5.0,
                           double hi = 5.0, double step = 1e-4);

struct Paper {
  std::string id;
  std::int64_t citations;
  double sjr2;
};

/// For each paper: the number of papers at or below it in the
/// (citations asc, SJR2 asc) order, counting full ties; flag iff
/// 100 (that - 1) / n >= 90.
std::vector<bool> brute_force_class10(const std::vector<Paper>& papers);

/// Upper standard-normal tail by composite Simpson integration of the density.
double normal_upper_tail_quadrature(double z);

}  // namespace oracle
