#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>

namespace bvcf {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Cached n-point rule, computed once by Golub-Welsch.
const GaussLegendre& gauss_legendre(int n);

/// Fixed-order Gauss-Legendre integral of f over [a, b].
template <typename Fn>
double integrate_gl(Fn&& f, double a, double b, const GaussLegendre& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < rule.nodes.size(); ++k) {
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  }
  return half * sum;
}

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive Gauss-Kronrod on [a, b]; b may be +infinity.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-10);

/// Upper incomplete gamma Gamma(s, x) for any real s and x > 0.
double upper_incomplete_gamma(double s, double x);

}  // namespace bvcf
