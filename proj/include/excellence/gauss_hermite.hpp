#pragma once

#include <vector>

namespace excellence {

/// Nodes and weights for the physicists' rule: int f(x) exp(-x^2) dx ~= sum w_i f(x_i).
struct GaussHermiteRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;
  std::vector<double> log_weights_plus_x2;  // log(w_i) + x_i^2, used by the adaptive rule
};

/// Golub-Welsch on the symmetric Jacobi matrix. Rules are cached per size.
const GaussHermiteRule& gauss_hermite_rule(int n_nodes);

}  // namespace excellence
