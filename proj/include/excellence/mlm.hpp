#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "excellence/percentile.hpp"

namespace excellence {

/// Variance of the standard logistic distribution, pi^2/3 (~3.29).
inline constexpr double kLogisticVariance = std::numbers::pi * std::numbers::pi / 3.0;

double logistic(double x);
double logit(double p);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

struct ModelParams {
  double beta0 = 0.0;     // intercept on the logit scale
  double sigma_u0 = 0.0;  // random-intercept standard deviation, >= 0
};

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(std::string cluster, std::string detail)
      : std::runtime_error(cluster.empty() ? detail : "cluster '" + cluster + "': " + detail),
        cluster_(std::move(cluster)),
        detail_(std::move(detail)) {}
  const std::string& cluster() const noexcept { return cluster_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string cluster_;
  std::string detail_;
};

/// Mode and negative second derivative of the cluster posterior
///   k (b + u) - n log(1 + e^(b + u)) - u^2 / (2 sigma2)
/// over the random intercept u.
struct ClusterPosterior {
  double mode = 0.0;
  double curvature = 0.0;  // > 0
};

/// Safeguarded Newton inside the bracket [min(0, u1), max(0, u1)] with
/// u1 = sigma2 (k - n logistic(b)), which always contains the root of the
/// score because the score is strictly decreasing. Falls back to bisection
/// whenever a Newton step leaves the bracket or fails to shrink it.
ClusterPosterior cluster_posterior(std::int64_t n, std::int64_t k, double beta0, double sigma2,
                                   double tol = 1e-10);

/// log C(n, k) + k log p + (n - k) log(1 - p), with p = logistic(beta0).
double binomial_loglik(std::int64_t n, std::int64_t k, double beta0);

/// log of int Binom(k; n, logistic(b + u)) N(u; 0, sigma^2) du by adaptive
/// Gauss-Hermite quadrature centred at the posterior mode and scaled by the
/// posterior curvature. sigma == 0 gives binomial_loglik exactly.
double cluster_marginal_loglik(std::int64_t n, std::int64_t k, const ModelParams& params, int nodes);

/// Sum of cluster_marginal_loglik over the table, compensated summation in
/// row order. Throws NumericalFailure naming the first non-finite cluster.
double marginal_loglik(const ModelParams& params, const ClusterTable& table, int nodes = 20);

struct FitOptions {
  int nodes = 20;
  double gradient_tol = 1e-6;
  double step_tol = 1e-8;
  int max_iterations = 500;
  /// Fits with sigma below this are reported on the sigma = 0 boundary.
  double boundary_sigma = 1e-3;
  /// Below this many clusters the fit carries a power warning.
  std::size_t min_recommended_clusters = 100;
};

struct FitResult {
  ModelParams params;
  double se_beta0 = 0.0;
  double se_sigma2 = 0.0;
  double loglik = 0.0;
  double icc = 0.0;
  double wald_z = 0.0;
  double wald_p = 0.5;
  bool converged = false;
  bool boundary = false;
  std::size_t n_clusters = 0;
  double grand_mean_prob = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::string subject;
  std::vector<std::string> warnings;

  double sigma2() const { return params.sigma_u0 * params.sigma_u0; }
};

/// rho = sigma2 / (pi^2/3 + sigma2).
double icc(double sigma2);

/// Maximum marginal likelihood over (beta0, log sigma): Nelder-Mead, then
/// Newton steps on finite-difference derivatives. Standard errors come from
/// the inverse negative Hessian; se(sigma2) = 2 sigma2 se(log sigma).
FitResult fit_model(const ClusterTable& table, const FitOptions& options = {});

class UndefinedTest : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct WaldResult {
  double z = 0.0;
  double p = 0.5;
  bool significant = false;
};

/// One-sided z test of sigma2 > 0 at alpha = 0.05. A fit on the sigma = 0
/// boundary gives p = 0.5. Throws UndefinedTest when sigma2 > 0 but its
/// standard error is zero, std::invalid_argument for a non-converged fit.
WaldResult wald_test(const FitResult& fit);

/// Upper tail of the standard normal.
double normal_upper_tail(double z);

}  // namespace excellence
