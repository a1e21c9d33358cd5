#ifndef VKPLATE_QUADRATURE_HPP
#define VKPLATE_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "vkplate/geometry.hpp"

namespace vkplate {

/// Gauss-Legendre rule on [0, 1] with n points; exact for degree 2n - 1.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

inline LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  if (n == 1) return {{0.5}, {1.0}};
  LineRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + t);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return rule;
}

/// Triangle rule in barycentric coordinates; weights sum to 1, so an integral
/// over K is |K| * sum_q w_q f(x_q).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Collapsed (conical product) Gauss rule, exact for polynomials of total
/// degree <= `degree`.
inline TriangleRule triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: negative degree");
  const int ns = (degree + 3) / 2;  // integrand carries the (1 - s) Jacobian
  const int nt = (degree + 2) / 2;
  const LineRule rs = gauss_legendre(ns);
  const LineRule rt = gauss_legendre(nt);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < nt; ++j) {
      const double s = rs.nodes[i];
      const double t = rt.nodes[j];
      const double l1 = s;
      const double l2 = (1.0 - s) * t;
      rule.points.push_back({1.0 - l1 - l2, l1, l2});
      rule.weights.push_back(2.0 * rs.weights[i] * rt.weights[j] * (1.0 - s));
    }
  }
  return rule;
}

inline Point map_barycentric(const std::array<Point, 3>& p, const std::array<double, 3>& lambda) {
  return {lambda[0] * p[0].x + lambda[1] * p[1].x + lambda[2] * p[2].x,
          lambda[0] * p[0].y + lambda[1] * p[1].y + lambda[2] * p[2].y};
}

/// Integral of `fn` over the triangle with corners `p`.
template <class Fn>
double integrate(const std::array<Point, 3>& p, const TriangleRule& rule, Fn&& fn) {
  const double area = 0.5 * std::abs(signed_area2(p[0], p[1], p[2]));
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) sum += rule.weights[q] * fn(map_barycentric(p, rule.points[q]));
  return area * sum;
}

}  // namespace vkplate

#endif  // VKPLATE_QUADRATURE_HPP
