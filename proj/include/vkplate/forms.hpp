#ifndef VKPLATE_FORMS_HPP
#define VKPLATE_FORMS_HPP

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vkplate/geometry.hpp"
#include "vkplate/morley.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Right-hand sides of
///   Delta^2 u = [u, v] + f,   Delta^2 v = -1/2 [u, u] + g.
/// An empty g means zero. `nonlinear = false` drops both brackets.
struct ProblemData {
  std::function<double(Point)> f;
  std::function<double(Point)> g;
  int quadrature_degree = 4;
  bool nonlinear = true;
};

/// A smooth scalar with derivatives up to second order.
struct ScalarSolution {
  std::function<double(Point)> value;
  std::function<Point(Point)> gradient;
  std::function<SymMatrix2(Point)> hessian;

  SmoothFunction smooth() const { return {value, gradient}; }
};

struct ExactSolution {
  ScalarSolution u;
  ScalarSolution v;
};

/// von Karman bracket [a, b] = a_xx b_yy + a_yy b_xx - 2 a_xy b_xy.
inline double vk_bracket(SymMatrix2 a, SymMatrix2 b) { return double_dot(cofactor(a), b); }

namespace detail {

/// Adds a 6x6 local block at global offsets (row_offset, col_offset).
inline void scatter(Triplets& triplets, const LocalDofs& ld, const std::array<std::array<double, 6>, 6>& local,
                    std::size_t row_offset, std::size_t col_offset) {
  for (int j = 0; j < 6; ++j) {
    if (ld.index[j] == invalid_index) continue;
    for (int i = 0; i < 6; ++i) {
      if (ld.index[i] == invalid_index) continue;
      const double value = ld.sign[j] * ld.sign[i] * local[j][i];
      if (value == 0.0) continue;
      triplets.emplace_back(static_cast<int>(row_offset + ld.index[j]), static_cast<int>(col_offset + ld.index[i]), value);
    }
  }
}

inline SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const Triplets& triplets) {
  SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

inline double integral(const LocalBasis& basis, const std::array<double, 6>& d) {
  double s = 0.0;
  for (int i = 0; i < 6; ++i) s += d[i] * basis.integrals[i];
  return s;
}

}  // namespace detail

/// Stiffness matrix of a_pw on one scalar Morley space.
inline SparseMatrix assemble_A(const MorleySpace& space) {
  const Mesh& mesh = space.mesh();
  Triplets triplets;
  triplets.reserve(36 * mesh.n_triangles());
  std::array<std::array<double, 6>, 6> local{};
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const LocalBasis& b = space.basis(t);
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) local[j][i] = mesh.area(t) * double_dot(b.hessians[i], b.hessians[j]);
    detail::scatter(triplets, space.local_dofs(t), local, 0, 0);
  }
  return detail::from_triplets(space.n_dofs(), space.n_dofs(), triplets);
}

/// Matrix of (Theta, Phi) -> 2 B_pw(Psi, Theta, Phi), rows = test, columns =
/// trial, u-DOFs first. Element integrals of [.,.] phi are exact because the
/// bracket of two Morley functions is piecewise constant.
inline SparseMatrix assemble_B_linearized(const MorleySpace& space, const StatePair& state) {
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.n_dofs();
  Triplets triplets;
  triplets.reserve(108 * mesh.n_triangles());
  std::array<std::array<double, 6>, 6> uu{}, uv{}, vu{};
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const LocalBasis& b = space.basis(t);
    const SymMatrix2 hu = state.u.hessian(t);
    const SymMatrix2 hv = state.v.hessian(t);
    for (int i = 0; i < 6; ++i) {
      const double bv = vk_bracket(hv, b.hessians[i]);
      const double bu = vk_bracket(hu, b.hessians[i]);
      for (int j = 0; j < 6; ++j) {
        const double m = b.integrals[j];
        uu[j][i] = -bv * m;  // 2 b(v, theta_1, phi_1)
        uv[j][i] = -bu * m;  // 2 b(u, theta_2, phi_1)
        vu[j][i] = bu * m;   // -2 b(u, theta_1, phi_2)
      }
    }
    const LocalDofs& ld = space.local_dofs(t);
    detail::scatter(triplets, ld, uu, 0, 0);
    detail::scatter(triplets, ld, uv, 0, n);
    detail::scatter(triplets, ld, vu, n, 0);
  }
  return detail::from_triplets(2 * n, 2 * n, triplets);
}

/// Jacobian DN_h(Psi) = A_pw + 2 B_pw(Psi, ., .) on the 2n-dimensional system.
inline SparseMatrix assemble_jacobian(const MorleySpace& space, const StatePair& state, const ProblemData& data) {
  const std::size_t n = space.n_dofs();
  const SparseMatrix a = assemble_A(space);
  Triplets triplets;
  triplets.reserve(2 * static_cast<std::size_t>(a.nonZeros()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      triplets.emplace_back(static_cast<int>(it.row() + n), static_cast<int>(it.col() + n), it.value());
    }
  SparseMatrix j = detail::from_triplets(2 * n, 2 * n, triplets);
  if (data.nonlinear) j += assemble_B_linearized(space, state);
  return j;
}

/// Load vector [(f, phi_i); (g, phi_i)].
inline Eigen::VectorXd assemble_load(const MorleySpace& space, const ProblemData& data) {
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.n_dofs();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * n));
  if (data.quadrature_degree < 4) throw std::invalid_argument("assemble_load: quadrature degree must be >= 4");
  const TriangleRule rule = triangle_rule(data.quadrature_degree);
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto c = mesh.corners(t);
    const LocalBasis& b = space.basis(t);
    const LocalDofs& ld = space.local_dofs(t);
    std::array<double, 6> lf{}, lg{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = map_barycentric(c, rule.points[q]);
      const double w = mesh.area(t) * rule.weights[q];
      const double fx = data.f ? data.f(x) : 0.0;
      const double gx = data.g ? data.g(x) : 0.0;
      for (int i = 0; i < 6; ++i) {
        const double phi = b.value(i, x);
        lf[i] += w * fx * phi;
        lg[i] += w * gx * phi;
      }
    }
    for (int i = 0; i < 6; ++i) {
      if (ld.index[i] == invalid_index) continue;
      const auto row = static_cast<Eigen::Index>(ld.index[i]);
      load[row] += ld.sign[i] * lf[i];
      load[row + static_cast<Eigen::Index>(n)] += ld.sign[i] * lg[i];
    }
  }
  return load;
}

/// Residual N_h(Psi; phi_i) for every global test function, u-block first.
inline Eigen::VectorXd apply_N(const MorleySpace& space, const StatePair& state, const ProblemData& data,
                               const Eigen::VectorXd* load = nullptr) {
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.n_dofs();
  Eigen::VectorXd r = load ? -*load : Eigen::VectorXd(-assemble_load(space, data));
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const LocalBasis& b = space.basis(t);
    const LocalDofs& ld = space.local_dofs(t);
    const SymMatrix2 hu = state.u.hessian(t);
    const SymMatrix2 hv = state.v.hessian(t);
    const double buv = data.nonlinear ? vk_bracket(hu, hv) : 0.0;
    const double buu = data.nonlinear ? vk_bracket(hu, hu) : 0.0;
    for (int i = 0; i < 6; ++i) {
      if (ld.index[i] == invalid_index) continue;
      const double ru = mesh.area(t) * double_dot(hu, b.hessians[i]) - buv * b.integrals[i];
      const double rv = mesh.area(t) * double_dot(hv, b.hessians[i]) + 0.5 * buu * b.integrals[i];
      const auto row = static_cast<Eigen::Index>(ld.index[i]);
      r[row] += ld.sign[i] * ru;
      r[row + static_cast<Eigen::Index>(n)] += ld.sign[i] * rv;
    }
  }
  return r;
}

// Scalar forms on Morley fields.

inline double a_pw(const MorleyField& eta, const MorleyField& chi) {
  const Mesh& mesh = eta.space->mesh();
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) s += mesh.area(t) * double_dot(eta.hessian(t), chi.hessian(t));
  return s;
}

/// b_pw(eta, chi, phi) = -1/2 sum_K int_K [eta, chi] phi dx.
inline double b_pw(const MorleyField& eta, const MorleyField& chi, const MorleyField& phi) {
  const Mesh& mesh = eta.space->mesh();
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
    s += vk_bracket(eta.hessian(t), chi.hessian(t)) * detail::integral(phi.space->basis(t), phi.local_values(t));
  return -0.5 * s;
}

inline double B_pw(const StatePair& xi, const StatePair& theta, const StatePair& phi) {
  return b_pw(xi.u, theta.v, phi.u) + b_pw(xi.v, theta.u, phi.u) - b_pw(xi.u, theta.u, phi.v);
}

struct EnergyNorms {
  double energy_error = 0.0;  // |||Psi - Psi_M|||_pw
  double h1_error = 0.0;      // ||Psi - Psi_M||_{1,2,pw}
  double energy_norm = 0.0;   // |||Psi_M|||_pw
};

/// Error norms by element quadrature of the given degree. Without an exact
/// solution only the discrete energy norm is filled in.
inline EnergyNorms energy_norms(const MorleySpace& space, const StatePair& state,
                                const std::optional<ExactSolution>& exact, int degree = 8) {
  if (degree < 6) throw std::invalid_argument("energy_norms: quadrature degree must be >= 6");
  EnergyNorms out;
  out.energy_norm = std::sqrt(a_pw(state.u, state.u) + a_pw(state.v, state.v));
  if (!exact) return out;
  const Mesh& mesh = space.mesh();
  const TriangleRule rule = triangle_rule(degree);
  double e2 = 0.0;
  double h1 = 0.0;
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto c = mesh.corners(t);
    const LocalBasis& b = space.basis(t);
    const std::array<const MorleyField*, 2> discrete = {&state.u, &state.v};
    const std::array<const ScalarSolution*, 2> smooth = {&exact->u, &exact->v};
    for (int comp = 0; comp < 2; ++comp) {
      const auto d = discrete[comp]->local_values(t);
      const SymMatrix2 h = local_hessian(b, d);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Point x = map_barycentric(c, rule.points[q]);
        const double w = mesh.area(t) * rule.weights[q];
        const SymMatrix2 dh = smooth[comp]->hessian(x) - h;
        e2 += w * double_dot(dh, dh);
        double val = 0.0;
        Point grad;
        for (int i = 0; i < 6; ++i) {
          val += d[i] * b.value(i, x);
          grad = grad + d[i] * b.gradient(i, x);
        }
        const double dv = smooth[comp]->value(x) - val;
        const Point dg = smooth[comp]->gradient(x) - grad;
        h1 += w * (dv * dv + dot(dg, dg));
      }
    }
  }
  out.energy_error = std::sqrt(e2);
  out.h1_error = std::sqrt(h1);
  return out;
}

}  // namespace vkplate

#endif  // VKPLATE_FORMS_HPP
