#ifndef VKPLATE_PROBLEMS_HPP
#define VKPLATE_PROBLEMS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkplate/forms.hpp"
#include "vkplate/mesh.hpp"

namespace vkplate {

struct ManufacturedProblem {
  std::string name;
  Domain domain;
  ProblemData data;
  std::optional<ExactSolution> exact;
  std::string regularity;
};

namespace detail {

/// Derivatives 0..4 of a univariate factor.
using Derivatives = std::array<double, 5>;
using Factor = Derivatives (*)(double);

/// (t (1 - t))^2 and its derivatives.
inline Derivatives poly_bubble(double t) {
  const double p = t * (1.0 - t);
  const double dp = 1.0 - 2.0 * t;
  return {p * p, 2.0 * p * dp, 2.0 * (dp * dp - 2.0 * p), -12.0 * dp, 24.0};
}

/// sin^2(pi t) and its derivatives.
inline Derivatives trig_bubble(double t) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(pi * t);
  const double s2 = std::sin(2.0 * pi * t);
  const double c2 = std::cos(2.0 * pi * t);
  return {s * s, pi * s2, 2.0 * pi * pi * c2, -4.0 * pi * pi * pi * s2, -8.0 * pi * pi * pi * pi * c2};
}

/// u(x, y) = X(x) Y(y) with both factors given by `factor`.
struct Separable {
  Factor factor;

  ScalarSolution solution() const {
    const Factor fac = factor;
    return {
        [fac](Point p) { return fac(p.x)[0] * fac(p.y)[0]; },
        [fac](Point p) {
          const auto X = fac(p.x), Y = fac(p.y);
          return Point{X[1] * Y[0], X[0] * Y[1]};
        },
        [fac](Point p) {
          const auto X = fac(p.x), Y = fac(p.y);
          return SymMatrix2{X[2] * Y[0], X[1] * Y[1], X[0] * Y[2]};
        },
    };
  }
  double biharmonic(Point p) const {
    const auto X = factor(p.x), Y = factor(p.y);
    return X[4] * Y[0] + 2.0 * X[2] * Y[2] + X[0] * Y[4];
  }
};

/// Loads for u = v = the given separable function:
///   f = Delta^2 u - [u, v],  g = Delta^2 v + 1/2 [u, u].
inline ManufacturedProblem separable_problem(std::string name, Factor factor, bool nonlinear, std::string regularity) {
  const Separable sep{factor};
  const ScalarSolution u = sep.solution();
  ManufacturedProblem p;
  p.name = std::move(name);
  p.domain = UnitSquare{};
  p.exact = ExactSolution{u, u};
  p.regularity = std::move(regularity);
  p.data.nonlinear = nonlinear;
  p.data.f = [sep, u, nonlinear](Point x) {
    const SymMatrix2 h = u.hessian(x);
    return sep.biharmonic(x) - (nonlinear ? vk_bracket(h, h) : 0.0);
  };
  p.data.g = [sep, u, nonlinear](Point x) {
    const SymMatrix2 h = u.hessian(x);
    return sep.biharmonic(x) + (nonlinear ? 0.5 * vk_bracket(h, h) : 0.0);
  };
  return p;
}

}  // namespace detail

/// Throws std::logic_error if the exact solution violates the clamped
/// boundary conditions or the loads do not match the strong equations.
/// The strong residual uses a fourth-order finite-difference Laplacian of the
/// closed-form Hessian trace, independent of the hard-coded biharmonic terms.
inline void check_problem(const ManufacturedProblem& p) {
  if (!p.exact) return;
  const ExactSolution& ex = *p.exact;
  if (!std::holds_alternative<UnitSquare>(p.domain)) return;
  for (int i = 0; i <= 20; ++i) {
    const double s = i / 20.0;
    for (Point b : {Point{s, 0.0}, Point{s, 1.0}, Point{0.0, s}, Point{1.0, s}}) {
      for (const ScalarSolution* w : {&ex.u, &ex.v}) {
        if (std::abs(w->value(b)) > 1e-10 || norm(w->gradient(b)) > 1e-10)
          throw std::logic_error("problem " + p.name + ": exact solution is not clamped on the boundary");
      }
    }
  }
  auto laplacian_of_trace = [](const ScalarSolution& w, Point x) {
    const double h = 1e-2;
    auto tr = [&](Point y) {
      const SymMatrix2 m = w.hessian(y);
      return m.xx + m.yy;
    };
    auto d2 = [&](Point dir) {
      return (-tr(x + 2.0 * h * dir) + 16.0 * tr(x + h * dir) - 30.0 * tr(x) + 16.0 * tr(x - h * dir) -
              tr(x - 2.0 * h * dir)) /
             (12.0 * h * h);
    };
    return d2({1, 0}) + d2({0, 1});
  };
  const std::array<Point, 4> samples = {Point{0.31, 0.47}, Point{0.5, 0.5}, Point{0.72, 0.18}, Point{0.13, 0.86}};
  for (Point x : samples) {
    const SymMatrix2 hu = ex.u.hessian(x);
    const SymMatrix2 hv = ex.v.hessian(x);
    const double buv = p.data.nonlinear ? vk_bracket(hu, hv) : 0.0;
    const double buu = p.data.nonlinear ? vk_bracket(hu, hu) : 0.0;
    const double g = p.data.g ? p.data.g(x) : 0.0;
    const double r1 = laplacian_of_trace(ex.u, x) - buv - p.data.f(x);
    const double r2 = laplacian_of_trace(ex.v, x) + 0.5 * buu - g;
    const double scale = std::max({1.0, std::abs(p.data.f(x)), std::abs(g)});
    if (std::abs(r1) > 1e-5 * scale || std::abs(r2) > 1e-5 * scale)
      throw std::logic_error("problem " + p.name + ": loads do not match the strong equations");
  }
}

/// Built-in problems:
///   square-poly    u = v = (x(1-x)y(1-y))^2 on the unit square
///   square-trig    u = v = sin^2(pi x) sin^2(pi y) on the unit square
///   lshape-f1      f = 1, g = 0 on the L-shaped domain, no exact solution
///   biharm-linear  brackets dropped, u = v from square-poly
inline std::vector<ManufacturedProblem> registry() {
  std::vector<ManufacturedProblem> problems;
  problems.push_back(detail::separable_problem("square-poly", detail::poly_bubble, true, "smooth, convex domain"));
  problems.push_back(detail::separable_problem("square-trig", detail::trig_bubble, true, "smooth, convex domain"));
  ManufacturedProblem lshape;
  lshape.name = "lshape-f1";
  lshape.domain = LShape{};
  lshape.data.f = [](Point) { return 1.0; };
  lshape.regularity = "re-entrant corner at the origin";
  problems.push_back(std::move(lshape));
  problems.push_back(detail::separable_problem("biharm-linear", detail::poly_bubble, false, "smooth, linear"));
  for (const auto& p : problems) check_problem(p);
  return problems;
}

inline ManufacturedProblem find_problem(const std::string& name) {
  for (auto& p : registry())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace vkplate

#endif  // VKPLATE_PROBLEMS_HPP
