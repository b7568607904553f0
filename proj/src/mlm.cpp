#include "excellence/mlm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "excellence/gauss_hermite.hpp"

namespace excellence {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Unnormalized log posterior of u (binomial kernel + normal log density).
double log_joint(std::int64_t n, std::int64_t k, double beta0, double sigma, double u) {
  const double eta = beta0 + u;
  const double z = u / sigma;
  return static_cast<double>(k) * eta - static_cast<double>(n) * softplus(eta) - 0.5 * z * z - std::log(sigma) -
         kHalfLog2Pi;
}

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Objective {
  const ClusterTable& table;
  int nodes;
  mutable int evaluations = 0;

  // Negative log-likelihood in (beta0, log sigma).
  double operator()(const Vec2& theta) const {
    ++evaluations;
    const ModelParams p{theta[0], std::exp(theta[1])};
    try {
      return -marginal_loglik(p, table, nodes);
    } catch (const NumericalFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  }
};

Vec2 gradient(const Objective& f, const Vec2& x, double h) {
  Vec2 g;
  for (int i = 0; i < 2; ++i) {
    auto at = [&](double d) {
      Vec2 y = x;
      y[i] += d;
      return f(y);
    };
    g[i] = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
  }
  return g;
}

Mat2 hessian(const Objective& f, const Vec2& x, double h) {
  Mat2 H;
  const double f0 = f(x);
  auto at = [&](double di, double dj) {
    Vec2 y = x;
    y[0] += di;
    y[1] += dj;
    return f(y);
  };
  H(0, 0) = (at(h, 0) - 2 * f0 + at(-h, 0)) / (h * h);
  H(1, 1) = (at(0, h) - 2 * f0 + at(0, -h)) / (h * h);
  H(0, 1) = H(1, 0) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
  return H;
}

struct SimplexResult {
  Vec2 x;
  double fx;
  int iterations;
};

SimplexResult nelder_mead(const Objective& f, const Vec2& start, const Vec2& step, int max_iter, double ftol,
                          double xtol) {
  std::array<Vec2, 3> pts = {start, start + Vec2(step[0], 0), start + Vec2(0, step[1])};
  std::array<double, 3> fv = {f(pts[0]), f(pts[1]), f(pts[2])};
  int it = 0;
  for (; it < max_iter; ++it) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];

    const double spread = std::abs(fv[worst] - fv[best]);
    const double size = std::max((pts[worst] - pts[best]).cwiseAbs().maxCoeff(),
                                 (pts[mid] - pts[best]).cwiseAbs().maxCoeff());
    if (spread <= ftol * (std::abs(fv[best]) + 1e-12) && size <= xtol) break;

    const Vec2 centroid = 0.5 * (pts[best] + pts[mid]);
    const Vec2 refl = centroid + (centroid - pts[worst]);
    const double fr = f(refl);
    if (fr < fv[best]) {
      const Vec2 exp = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(exp);
      if (fe < fr) {
        pts[worst] = exp;
        fv[worst] = fe;
      } else {
        pts[worst] = refl;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[mid]) {
      pts[worst] = refl;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Vec2 con = outside ? Vec2(centroid + 0.5 * (refl - centroid)) : Vec2(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(con);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = con;
      fv[worst] = fc;
      continue;
    }
    for (int i : {mid, worst}) {
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      fv[i] = f(pts[i]);
    }
  }
  const int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {pts[best], fv[best], it};
}

}  // namespace

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double icc(double sigma2) { return sigma2 / (kLogisticVariance + sigma2); }

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

ClusterPosterior cluster_posterior(std::int64_t n, std::int64_t k, double beta0, double sigma2, double tol) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("cluster_posterior requires sigma2 > 0");
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  auto score = [&](double u) { return kd - nd * logistic(beta0 + u) - u / sigma2; };
  auto info = [&](double u) {
    const double s = logistic(beta0 + u);
    return nd * s * (1.0 - s) + 1.0 / sigma2;
  };

  const double u1 = sigma2 * (kd - nd * logistic(beta0));
  double lo = std::min(0.0, u1), hi = std::max(0.0, u1);
  double u = 0.0;
  double d = score(u);
  if (d == 0.0 || lo == hi) return {u, info(u)};

  double prev_step = hi - lo;
  for (int it = 0; it < 200; ++it) {
    if (d > 0)
      lo = std::max(lo, u);
    else
      hi = std::min(hi, u);
    double next = u + d / info(u);
    bool bisected = false;
    // Bisect when Newton leaves the bracket or stops halving its step
    // (it can ping-pong across a strongly curved score).
    if (!(next > lo && next < hi) || std::abs(next - u) > 0.5 * std::abs(prev_step)) {
      next = 0.5 * (lo + hi);
      bisected = true;
    }
    prev_step = next - u;
    const double step = next - u;
    u = next;
    d = score(u);
    if (d == 0.0) return {u, info(u)};
    if (!bisected && std::abs(step) <= tol * std::max(1.0, std::abs(u))) {
      // one more Newton step so the result does not depend on the path
      u += d / info(u);
      return {u, info(u)};
    }
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u))) return {u, info(u)};
  }
  throw NumericalFailure("", "posterior mode search did not converge");
}

double binomial_loglik(std::int64_t n, std::int64_t k, double beta0) {
  // log p = -softplus(-b), log(1 - p) = -softplus(b)
  double ll = log_choose(n, k);
  if (k > 0) ll -= static_cast<double>(k) * softplus(-beta0);
  if (n - k > 0) ll -= static_cast<double>(n - k) * softplus(beta0);
  return ll;
}

double cluster_marginal_loglik(std::int64_t n, std::int64_t k, const ModelParams& params, int nodes) {
  if (params.sigma_u0 == 0.0) return binomial_loglik(n, k, params.beta0);
  const double sigma = params.sigma_u0;
  const auto post = cluster_posterior(n, k, params.beta0, sigma * sigma);
  const double scale = std::numbers::sqrt2 / std::sqrt(post.curvature);
  const auto& rule = gauss_hermite_rule(nodes);

  std::vector<double> terms(rule.nodes.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double u = post.mode + scale * rule.nodes[i];
    terms[i] = rule.log_weights_plus_x2[i] + log_joint(n, k, params.beta0, sigma, u);
    top = std::max(top, terms[i]);
  }
  CompensatedSum acc;
  for (double t : terms) acc.add(std::exp(t - top));
  return log_choose(n, k) + std::log(scale) + top + std::log(acc.value());
}

double marginal_loglik(const ModelParams& params, const ClusterTable& table, int nodes) {
  if (nodes < 1) throw std::invalid_argument("nodes must be >= 1");
  if (table.rows.empty()) throw std::invalid_argument("cluster table is empty");
  if (!(params.sigma_u0 >= 0.0) || !std::isfinite(params.sigma_u0) || !std::isfinite(params.beta0))
    throw std::invalid_argument("model parameters must be finite with sigma_u0 >= 0");
  CompensatedSum total;
  for (const auto& row : table.rows) {
    double ll;
    try {
      ll = cluster_marginal_loglik(row.n, row.k, params, nodes);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(row.institution_id, e.detail());
    }
    if (!std::isfinite(ll)) throw NumericalFailure(row.institution_id, "non-finite marginal log-likelihood");
    total.add(ll);
  }
  return total.value();
}

FitResult fit_model(const ClusterTable& table, const FitOptions& options) {
  if (table.rows.empty()) throw std::invalid_argument("cannot fit an empty cluster table");
  FitResult fit;
  fit.subject = table.subject;
  fit.n_clusters = table.rows.size();
  if (fit.n_clusters < options.min_recommended_clusters)
    fit.warnings.push_back("only " + std::to_string(fit.n_clusters) + " clusters; at least " +
                           std::to_string(options.min_recommended_clusters) +
                           " are recommended for adequate power");

  std::int64_t total_n = 0, total_k = 0;
  for (const auto& r : table.rows) {
    total_n += r.n;
    total_k += r.k;
  }

  auto finish_boundary = [&](double beta0, const std::string& why) {
    fit.params = {beta0, 0.0};
    fit.boundary = true;
    fit.converged = true;
    fit.loglik = marginal_loglik(fit.params, table, options.nodes);
    const double p = logistic(beta0);
    fit.se_beta0 = 1.0 / std::sqrt(static_cast<double>(total_n) * p * (1.0 - p));
    fit.se_sigma2 = 0.0;
    fit.icc = 0.0;
    fit.wald_z = 0.0;
    fit.wald_p = 0.5;
    fit.grand_mean_prob = p;
    fit.gradient_norm = 0.0;
    fit.warnings.push_back(why);
    return fit;
  };

  if (total_k == 0 || total_k == total_n) {
    const double p = (static_cast<double>(total_k) + 0.5) / (static_cast<double>(total_n) + 1.0);
    return finish_boundary(logit(p), total_k == 0 ? "boundary: no class-10% papers in any cluster"
                                                  : "boundary: every paper in every cluster is class-10%");
  }

  const double pooled = static_cast<double>(total_k) / static_cast<double>(total_n);

  // Moment start: spread of empirical logits beyond binomial noise.
  double mean_logit = 0.0, m2 = 0.0, noise = 0.0;
  for (const auto& r : table.rows) {
    const double kk = static_cast<double>(r.k) + 0.5, nn = static_cast<double>(r.n) + 1.0;
    const double l = std::log(kk / (nn - kk));
    mean_logit += l;
    m2 += l * l;
    noise += 1.0 / kk + 1.0 / (nn - kk);
  }
  const double J = static_cast<double>(table.rows.size());
  mean_logit /= J;
  const double var_logit = m2 / J - mean_logit * mean_logit;
  const double sigma_start = std::sqrt(std::max(var_logit - noise / J, 0.01));

  Objective f{table, options.nodes};
  const Vec2 start(logit(pooled), std::log(sigma_start));
  auto simplex = nelder_mead(f, start, Vec2(0.1, 0.3), options.max_iterations, 1e-12, 1e-6);
  Vec2 x = simplex.x;
  double fx = simplex.fx;
  int iterations = simplex.iterations;

  const double fd_step = 1e-3;
  Vec2 g = gradient(f, x, fd_step);
  const double log_boundary = std::log(options.boundary_sigma);
  for (; iterations < options.max_iterations && g.norm() >= options.gradient_tol; ++iterations) {
    if (x[1] < log_boundary) break;
    const Mat2 H = hessian(f, x, 1e-4);
    Vec2 dir;
    Eigen::SelfAdjointEigenSolver<Mat2> eig(H);
    if (eig.eigenvalues().minCoeff() > 0)
      dir = -H.ldlt().solve(g);
    else
      dir = -g;
    // Near the optimum the decrease drops below the rounding noise of f,
    // so a step that fails to lower f is still taken when it shrinks the
    // gradient and f stays within the noise band.
    const double noise = 1e-12 * std::max(1.0, std::abs(fx));
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Vec2 y = x + t * dir;
      const double fy = f(y);
      if (fy < fx) {
        moved = true;
      } else if (fy <= fx + noise) {
        const Vec2 gy = gradient(f, y, fd_step);
        if (gy.norm() < g.norm()) moved = true;
      }
      if (moved) {
        x = y;
        fx = fy;
        break;
      }
    }
    g = gradient(f, x, fd_step);
    if (!moved || (t * dir).norm() < options.step_tol) {
      ++iterations;
      break;
    }
  }
  fit.iterations = iterations;

  if (x[1] < log_boundary) {
    return finish_boundary(logit(pooled), "boundary: between-cluster variance estimated at 0");
  }

  fit.params = {x[0], std::exp(x[1])};
  fit.loglik = -fx;
  fit.gradient_norm = g.norm();
  fit.converged = fit.gradient_norm < options.gradient_tol;
  if (!fit.converged) fit.warnings.push_back("optimizer stalled before reaching the gradient tolerance");

  const Mat2 H = hessian(f, x, 1e-4);
  const double sigma2 = fit.sigma2();
  if (H.determinant() > 0 && H(0, 0) > 0) {
    const Mat2 cov = H.inverse();
    fit.se_beta0 = std::sqrt(cov(0, 0));
    fit.se_sigma2 = 2.0 * sigma2 * std::sqrt(cov(1, 1));
  } else {
    fit.se_beta0 = std::numeric_limits<double>::quiet_NaN();
    fit.se_sigma2 = std::numeric_limits<double>::quiet_NaN();
    fit.converged = false;
    fit.warnings.push_back("observed information is not positive definite at the optimum");
  }
  fit.icc = icc(sigma2);
  fit.grand_mean_prob = logistic(fit.params.beta0);
  if (fit.se_sigma2 > 0) {
    fit.wald_z = sigma2 / fit.se_sigma2;
    fit.wald_p = normal_upper_tail(fit.wald_z);
  }
  return fit;
}

WaldResult wald_test(const FitResult& fit) {
  if (!fit.converged) throw std::invalid_argument("Wald test needs a converged fit");
  const double sigma2 = fit.sigma2();
  if (sigma2 == 0.0) return {0.0, 0.5, false};
  if (!(fit.se_sigma2 > 0.0)) throw UndefinedTest("standard error of sigma2 is zero; Wald test undefined");
  WaldResult w;
  w.z = sigma2 / fit.se_sigma2;
  w.p = normal_upper_tail(w.z);
  w.significant = w.p < 0.05;
  return w;
}

}  // namespace excellence
