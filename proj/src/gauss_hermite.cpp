#include "excellence/gauss_hermite.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace excellence {

namespace {

// Newton iteration on the orthonormal Hermite recurrence; weights from the
// derivative, 2 / p'(x)^2, keep full relative accuracy in the tails (an
// eigenvector-based rule does not).
GaussHermiteRule build_rule(int n) {
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];

    double pp = 0.0;
    bool done = false;
    for (int it = 0; it < 100 && !done; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      done = std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z));
    }
    if (!done) throw std::runtime_error("Gauss-Hermite node iteration did not converge");
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  if (n % 2 == 1) x[m - 1] = 0.0;

  GaussHermiteRule rule;
  // ascending order
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.weights.assign(w.rbegin(), w.rend());
  rule.log_weights_plus_x2.resize(n);
  for (int i = 0; i < n; ++i)
    rule.log_weights_plus_x2[i] = std::log(rule.weights[i]) + rule.nodes[i] * rule.nodes[i];
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int n_nodes) {
  if (n_nodes < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n_nodes];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(n_nodes));
  return *slot;
}

}  // namespace excellence
