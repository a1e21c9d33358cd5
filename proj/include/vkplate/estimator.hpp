#ifndef VKPLATE_ESTIMATOR_HPP
#define VKPLATE_ESTIMATOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vkplate/forms.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/morley.hpp"
#include "vkplate/quadrature.hpp"

namespace vkplate {

struct EstimatorReport {
  std::vector<double> eta_sq;  // eta^2(T, K)
  std::vector<double> mu_sq;   // volume part of eta^2(T, K)
  std::vector<double> osc_sq;  // h_K^4 ||f - Pi_m f||^2_{L2(K)}
  double eta_sq_total = 0.0;
  double mu_sq_total = 0.0;
  double osc_sq_total = 0.0;

  double eta() const { return std::sqrt(eta_sq_total); }
  double mu() const { return std::sqrt(mu_sq_total); }
  double osc() const { return std::sqrt(osc_sq_total); }
};

/// Per-triangle data oscillation h_K^4 ||f - Pi_m f||^2_{L2(K)} with Pi_m the
/// local L2 projection onto P_m, m in {0, 1, 2}.
inline std::vector<double> oscillation(const ProblemData& data, const Mesh& mesh, int m) {
  if (m < 0 || m > 2) throw std::invalid_argument("oscillation: order must be 0, 1 or 2");
  std::vector<double> osc(mesh.n_triangles(), 0.0);
  if (!data.f) return osc;
  const int n = (m + 1) * (m + 2) / 2;
  const TriangleRule rule = triangle_rule(std::max(data.quadrature_degree, 2 * m + 2));
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto c = mesh.corners(t);
    const Point center = mesh.centroid(t);
    const double h = mesh.mesh_size(t);
    auto basis = [&](Point x) {
      const double s = (x.x - center.x) / h;
      const double r = (x.y - center.y) / h;
      const std::array<double, 6> all = {1.0, s, r, s * s, s * r, r * r};
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) b[i] = all[i];
      return b;
    };
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::vector<double> fq(rule.points.size());
    std::vector<Eigen::VectorXd> bq(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = map_barycentric(c, rule.points[q]);
      fq[q] = data.f(x);
      bq[q] = basis(x);
      mass += rule.weights[q] * bq[q] * bq[q].transpose();
      rhs += rule.weights[q] * fq[q] * bq[q];
    }
    const Eigen::VectorXd coef = mass.ldlt().solve(rhs);
    double err = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double d = fq[q] - coef.dot(bq[q]);
      err += rule.weights[q] * d * d;
    }
    const double area = mesh.area(t);
    osc[t] = area * area * area * err;  // h^4 * |K| * mean
  }
  return osc;
}

/// Residual estimator
///   eta^2(K) = |K|^2 (||[u,v] + f||^2_K + ||[u,u]||^2_K)
///            + |K|^{1/2} sum_{E in E(K)} (||[D^2 u]_E tau_E||^2_E + ||[D^2 v]_E tau_E||^2_E).
/// Each edge term goes to both neighbours; on boundary edges the jump is the
/// one-sided trace.
inline EstimatorReport estimate(const MorleySpace& space, const StatePair& state, const ProblemData& data,
                                int osc_order = 0) {
  const Mesh& mesh = space.mesh();
  const std::size_t nt = mesh.n_triangles();
  EstimatorReport rep;
  rep.eta_sq.assign(nt, 0.0);
  rep.mu_sq.assign(nt, 0.0);

  std::vector<SymMatrix2> hu(nt), hv(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    hu[t] = state.u.hessian(t);
    hv[t] = state.v.hessian(t);
  }

  const TriangleRule rule = triangle_rule(data.quadrature_degree);
  for (std::size_t t = 0; t < nt; ++t) {
    const double area = mesh.area(t);
    const double buv = data.nonlinear ? vk_bracket(hu[t], hv[t]) : 0.0;
    const double buu = data.nonlinear ? vk_bracket(hu[t], hu[t]) : 0.0;
    double vol;
    if (data.f) {
      vol = integrate(mesh.corners(t), rule, [&](Point x) {
        const double r = buv + data.f(x);
        return r * r;
      });
    } else {
      vol = area * buv * buv;
    }
    vol += area * buu * buu;
    rep.mu_sq[t] = area * area * vol;
  }

  std::vector<double> jump_sq(nt, 0.0);
  for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    const std::size_t a = edge.triangles[0];
    const std::size_t b = edge.triangles[1];
    SymMatrix2 ju = hu[a];
    SymMatrix2 jv = hv[a];
    if (!edge.is_boundary) {
      ju = ju - hu[b];
      jv = jv - hv[b];
    }
    const Point tu = ju.apply(edge.tangent);
    const Point tv = jv.apply(edge.tangent);
    const double term = edge.length * (dot(tu, tu) + dot(tv, tv));
    jump_sq[a] += term;
    if (!edge.is_boundary) jump_sq[b] += term;
  }

  rep.osc_sq = oscillation(data, mesh, osc_order);
  for (std::size_t t = 0; t < nt; ++t) {
    rep.eta_sq[t] = rep.mu_sq[t] + std::sqrt(mesh.area(t)) * jump_sq[t];
    rep.eta_sq_total += rep.eta_sq[t];
    rep.mu_sq_total += rep.mu_sq[t];
    rep.osc_sq_total += rep.osc_sq[t];
  }
  return rep;
}

/// eta^2(T, M) for a subset M; the empty set contributes zero.
inline double restrict_estimator(std::span<const double> eta_sq, std::span<const std::size_t> subset) {
  double s = 0.0;
  for (std::size_t t : subset) {
    if (t >= eta_sq.size()) throw std::out_of_range("restrict_estimator: unknown triangle id");
    s += eta_sq[t];
  }
  return s;
}

inline double restrict_estimator(const EstimatorReport& report, std::span<const std::size_t> subset) {
  return restrict_estimator(std::span<const double>(report.eta_sq), subset);
}

}  // namespace vkplate

#endif  // VKPLATE_ESTIMATOR_HPP
