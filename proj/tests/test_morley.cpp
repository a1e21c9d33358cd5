#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "vkplate/forms.hpp"
#include "vkplate/morley.hpp"
#include "vkplate/quadrature.hpp"

using namespace vkplate;

namespace {

// Mean of grad(phi) . n over segment [a, b] by 3-point Gauss (exact for linear integrands).
double edge_mean(const std::function<Point(Point)>& grad, Point a, Point b, Point n) {
  const double g = std::sqrt(0.6);
  const double nodes[3] = {0.5 * (1 - g), 0.5, 0.5 * (1 + g)};
  const double weights[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  double s = 0.0;
  for (int q = 0; q < 3; ++q) s += weights[q] * dot(grad(a + nodes[q] * (b - a)), n);
  return s;
}

Point outward_normal(Point a, Point b, Point opposite) {
  const Point t = b - a;
  Point n{t.y, -t.x};
  n = (1.0 / norm(n)) * n;
  return dot(n, opposite - a) > 0 ? -1.0 * n : n;
}

std::array<Point, 3> random_triangle(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    std::array<Point, 3> p = {Point{u(rng), u(rng)}, Point{u(rng), u(rng)}, Point{u(rng), u(rng)}};
    const double a2 = signed_area2(p[0], p[1], p[2]);
    if (std::abs(a2) < 0.3) continue;
    if (a2 < 0) std::swap(p[1], p[2]);
    return p;
  }
}

struct Quadratic {
  std::array<double, 6> c;  // 1, x, y, x^2, xy, y^2
  double value(Point p) const { return c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y; }
  Point gradient(Point p) const { return {c[1] + 2 * c[3] * p.x + c[4] * p.y, c[2] + c[4] * p.x + 2 * c[5] * p.y}; }
  SymMatrix2 hessian() const { return {2 * c[3], c[4], 2 * c[5]}; }
  SmoothFunction smooth() const {
    return {[*this](Point p) { return value(p); }, [*this](Point p) { return gradient(p); }};
  }
};

// A smooth non-polynomial function (not clamped).
const SmoothFunction wave{[](Point p) { return std::sin(2 * p.x + 1) * std::cos(3 * p.y) + p.x * p.x * p.x; },
                          [](Point p) {
                            return Point{2 * std::cos(2 * p.x + 1) * std::cos(3 * p.y) + 3 * p.x * p.x,
                                         -3 * std::sin(2 * p.x + 1) * std::sin(3 * p.y)};
                          }};

SymMatrix2 wave_hessian(Point p) {
  return {-4 * std::sin(2 * p.x + 1) * std::cos(3 * p.y) + 6 * p.x, -6 * std::cos(2 * p.x + 1) * std::sin(3 * p.y),
          -9 * std::sin(2 * p.x + 1) * std::cos(3 * p.y)};
}

// (x(1-x)y(1-y))^2, clamped on the unit square.
const SmoothFunction bubble{[](Point p) {
                              const double b = p.x * (1 - p.x) * p.y * (1 - p.y);
                              return b * b;
                            },
                            [](Point p) {
                              const double X = p.x * (1 - p.x), Y = p.y * (1 - p.y);
                              return Point{2 * X * (1 - 2 * p.x) * Y * Y, 2 * Y * (1 - 2 * p.y) * X * X};
                            }};

std::shared_ptr<const Mesh> refined_square(int levels) {
  Mesh m = build_initial_mesh(UnitSquare{});
  for (int i = 0; i < levels; ++i) m = uniform_refine(m);
  return std::make_shared<const Mesh>(std::move(m));
}

MorleyField random_field(const std::shared_ptr<const MorleySpace>& space, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  MorleyField f = MorleyField::zero(space);
  for (Eigen::Index i = 0; i < f.coefficients.size(); ++i) f.coefficients[i] = g(rng);
  return f;
}

}  // namespace

TEST(LocalBasis, DualityWithDegreesOfFreedom) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_triangle(rng);
    const LocalBasis b = local_basis(p);
    for (int i = 0; i < 6; ++i) {
      for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(b.value(i, p[k]), i == k ? 1.0 : 0.0, 1e-11);
        const Point a = p[(k + 1) % 3], c = p[(k + 2) % 3];
        const double m = edge_mean([&](Point x) { return b.gradient(i, x); }, a, c, outward_normal(a, c, p[k]));
        EXPECT_NEAR(m, i == 3 + k ? 1.0 : 0.0, 1e-10);
      }
    }
  }
}

TEST(LocalBasis, HessiansAndIntegralsMatchQuadrature) {
  std::mt19937 rng(11);
  const TriangleRule rule = triangle_rule(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_triangle(rng);
    const LocalBasis b = local_basis(p);
    for (int i = 0; i < 6; ++i) {
      EXPECT_NEAR(b.integrals[i], integrate(p, rule, [&](Point x) { return b.value(i, x); }), 1e-12);
      // second differences of an exact quadratic recover the Hessian
      const Point x0 = b.center;
      const double h = 0.1;
      const double fxx = (b.value(i, x0 + Point{h, 0}) - 2 * b.value(i, x0) + b.value(i, x0 - Point{h, 0})) / (h * h);
      const double fyy = (b.value(i, x0 + Point{0, h}) - 2 * b.value(i, x0) + b.value(i, x0 - Point{0, h})) / (h * h);
      const double fxy = (b.value(i, x0 + Point{h, h}) - b.value(i, x0 + Point{h, -h}) - b.value(i, x0 + Point{-h, h}) +
                          b.value(i, x0 + Point{-h, -h})) /
                         (4 * h * h);
      EXPECT_NEAR(b.hessians[i].xx, fxx, 1e-7 * std::max(1.0, std::abs(fxx)));
      EXPECT_NEAR(b.hessians[i].yy, fyy, 1e-7 * std::max(1.0, std::abs(fyy)));
      EXPECT_NEAR(b.hessians[i].xy, fxy, 1e-7 * std::max(1.0, std::abs(fxy)));
    }
  }
}

TEST(LocalBasis, ReproducesQuadratics) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_triangle(rng);
    const LocalBasis b = local_basis(p);
    Quadratic q;
    for (double& c : q.c) c = g(rng);
    const auto dofs = local_interpolant(p, b, q.smooth());
    for (int s = 0; s < 5; ++s) {
      const double l1 = 0.1 + 0.15 * s, l2 = 0.2;
      const Point x = (1 - l1 - l2) * p[0] + l1 * p[1] + l2 * p[2];
      double val = 0;
      for (int i = 0; i < 6; ++i) val += dofs[i] * b.value(i, x);
      EXPECT_NEAR(val, q.value(x), 1e-10);
    }
    const SymMatrix2 h = local_hessian(b, dofs);
    EXPECT_NEAR(h.xx, q.hessian().xx, 1e-10);
    EXPECT_NEAR(h.xy, q.hessian().xy, 1e-10);
    EXPECT_NEAR(h.yy, q.hessian().yy, 1e-10);
  }
}

TEST(LocalBasis, HessianOfInterpolantIsMeanHessian) {
  // int_K D^2 (v - I v) = 0 for every element.
  std::mt19937 rng(17);
  const TriangleRule rule = triangle_rule(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_triangle(rng);
    for (auto& x : p) x = 0.1 * x;
    const LocalBasis b = local_basis(p);
    const SymMatrix2 h = local_hessian(b, local_interpolant(p, b, wave));
    const double area = 0.5 * signed_area2(p[0], p[1], p[2]);
    EXPECT_NEAR(h.xx, integrate(p, rule, [](Point x) { return wave_hessian(x).xx; }) / area, 1e-8);
    EXPECT_NEAR(h.xy, integrate(p, rule, [](Point x) { return wave_hessian(x).xy; }) / area, 1e-8);
    EXPECT_NEAR(h.yy, integrate(p, rule, [](Point x) { return wave_hessian(x).yy; }) / area, 1e-8);
  }
}

TEST(LocalBasis, DegenerateTriangleThrows) {
  EXPECT_THROW(local_basis({Point{0, 0}, Point{1, 0}, Point{2, 1e-15}}), DegenerateElement);
}

TEST(MorleySpace, DofCounts) {
  EXPECT_EQ(build_space(refined_square(0))->n_dofs(), 1u);
  EXPECT_EQ(build_space(refined_square(2))->n_dofs(), 9u);
  for (int levels = 0; levels < 5; ++levels) {
    const auto mesh = refined_square(levels);
    EXPECT_EQ(build_space(mesh)->n_dofs(), (mesh->n_vertices() - mesh->n_boundary_vertices()) +
                                               (mesh->n_edges() - mesh->n_boundary_edges()));
  }
}

TEST(MorleySpace, GlobalFunctionsAreMorleyConforming) {
  // Continuous at vertices, continuous mean normal derivative across interior
  // edges, and zero value / mean normal derivative on the boundary.
  Mesh m = build_initial_mesh(LShape{});
  m = uniform_refine(m);
  m = refine(m, std::vector<std::size_t>{0, 5, 9});
  const auto space = build_space(std::make_shared<const Mesh>(m));
  const MorleyField f = random_field(space, 1);
  for (std::size_t e = 0; e < m.n_edges(); ++e) {
    const Edge& edge = m.edge(e);
    const Point a = m.vertex(edge.vertices[0]), b = m.vertex(edge.vertices[1]);
    std::array<double, 2> means{}, va{}, vb{};
    for (int side = 0; side < (edge.is_boundary ? 1 : 2); ++side) {
      const std::size_t t = edge.triangles[side];
      means[side] = edge_mean([&](Point x) { return evaluate(f, t, x).gradient; }, a, b, edge.normal);
      va[side] = evaluate(f, t, a).value;
      vb[side] = evaluate(f, t, b).value;
    }
    if (edge.is_boundary) {
      EXPECT_NEAR(means[0], 0.0, 1e-10);
      EXPECT_NEAR(va[0], 0.0, 1e-12);
      EXPECT_NEAR(vb[0], 0.0, 1e-12);
    } else {
      EXPECT_NEAR(means[0], means[1], 1e-10);
      EXPECT_NEAR(va[0], va[1], 1e-12);
      EXPECT_NEAR(vb[0], vb[1], 1e-12);
      EXPECT_NEAR(means[0], f.coefficients[static_cast<Eigen::Index>(space->edge_dof(e))], 1e-10);
    }
  }
}

TEST(MorleySpace, InterpolationIsOrientationIndependent) {
  const auto mesh = refined_square(3);
  const auto a = build_space(mesh, EdgeOrientation::lower_to_higher);
  const auto b = build_space(mesh, EdgeOrientation::reversed);
  const MorleyField fa = interpolate(a, bubble);
  const MorleyField fb = interpolate(b, bubble);
  for (std::size_t t = 0; t < mesh->n_triangles(); ++t) {
    const SymMatrix2 ha = fa.hessian(t), hb = fb.hessian(t);
    EXPECT_NEAR(ha.xx, hb.xx, 1e-13);
    EXPECT_NEAR(ha.xy, hb.xy, 1e-13);
    EXPECT_NEAR(ha.yy, hb.yy, 1e-13);
    const Point c = mesh->centroid(t);
    EXPECT_NEAR(evaluate(fa, t, c).value, evaluate(fb, t, c).value, 1e-15);
  }
  // Edge coefficients flip sign, vertex coefficients do not.
  for (std::size_t e = 0; e < mesh->n_edges(); ++e)
    if (auto d = a->edge_dof(e); d != invalid_index)
      EXPECT_DOUBLE_EQ(fa.coefficients[static_cast<Eigen::Index>(d)], -fb.coefficients[static_cast<Eigen::Index>(d)]);
}

TEST(MorleySpace, InterpolationMatchesLocalInterpolant) {
  const auto mesh = refined_square(3);
  const auto space = build_space(mesh);
  const MorleyField f = interpolate(space, bubble);
  for (std::size_t t = 0; t < mesh->n_triangles(); ++t) {
    const auto local = local_interpolant(mesh->corners(t), space->basis(t), bubble);
    const auto global = f.local_values(t);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(local[i], global[i], 1e-15);
  }
}

TEST(MorleySpace, EvaluateOutsideTriangleThrows) {
  const auto space = build_space(refined_square(1));
  const MorleyField f = MorleyField::zero(space);
  EXPECT_THROW(evaluate(f, 0, Point{5, 5}), std::domain_error);
  EXPECT_THROW(evaluate(f, 99, Point{0, 0}), std::out_of_range);
}

TEST(Prolongation, IdentityRefinementKeepsCoefficients) {
  const auto coarse_mesh = refined_square(2);
  const auto coarse = build_space(coarse_mesh);
  const auto same = std::make_shared<const Mesh>(refine(*coarse_mesh, std::vector<std::size_t>{}));
  const auto fine = build_space(same);
  const MorleyField f = random_field(coarse, 3);
  const MorleyField g = prolongate(f, fine, mesh_partition(*coarse_mesh, *same));
  ASSERT_EQ(g.coefficients.size(), f.coefficients.size());
  for (Eigen::Index i = 0; i < f.coefficients.size(); ++i) EXPECT_NEAR(g.coefficients[i], f.coefficients[i], 1e-12);
}

TEST(Prolongation, KeepsCoarseValuesAtCoarseVertices) {
  const auto coarse_mesh = refined_square(2);
  const auto coarse = build_space(coarse_mesh);
  const auto fine_mesh = std::make_shared<const Mesh>(refine(*coarse_mesh, std::vector<std::size_t>{1, 4}));
  const auto fine = build_space(fine_mesh);
  const MorleyField f = interpolate(coarse, bubble);
  const MorleyField g = prolongate(f, fine, mesh_partition(*coarse_mesh, *fine_mesh));
  for (std::size_t v = 0; v < coarse_mesh->n_vertices(); ++v)
    if (auto d = coarse->vertex_dof(v); d != invalid_index)
      EXPECT_NEAR(g.coefficients[static_cast<Eigen::Index>(fine->vertex_dof(v))], f.coefficients[static_cast<Eigen::Index>(d)],
                  1e-14);
}

TEST(FieldIO, RoundTrip) {
  const auto space = build_space(refined_square(3));
  const MorleyField f = random_field(space, 9);
  std::stringstream s;
  write_field(s, f);
  const MorleyField g = read_field(s, space);
  EXPECT_EQ(g.coefficients, f.coefficients);
  std::istringstream wrong("morleyfield 1\n3\n1\n2\n3\n");
  EXPECT_THROW(read_field(wrong, space), std::runtime_error);
}
