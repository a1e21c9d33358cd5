#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "vkplate/adaptivity.hpp"
#include "vkplate/report.hpp"

using namespace vkplate;

namespace {

double sum_over(const std::vector<double>& v, const std::vector<std::size_t>& ids) {
  double s = 0;
  for (std::size_t i : ids) s += v[i];
  return s;
}

// Smallest cardinality of any subset M with theta * total <= sum(M).
std::size_t brute_force_minimum(const std::vector<double>& v, double theta) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  std::size_t best = v.size();
  for (unsigned mask = 0; mask < (1u << v.size()); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mask & (1u << i)) s += v[i];
    if (theta * total <= s) best = std::min<std::size_t>(best, std::popcount(mask));
  }
  return best;
}

AmfemConfig small_config(int levels) {
  AmfemConfig cfg;
  cfg.max_levels = levels;
  return cfg;
}

}  // namespace

TEST(Doerfler, Examples) {
  const std::vector<double> v = {4, 3, 2, 1};
  EXPECT_EQ(doerfler_mark(v, 0.5), (std::vector<std::size_t>{0, 1}));
  const std::vector<double> with_zero = {1, 0, 2, 0.5};
  EXPECT_EQ(doerfler_mark(with_zero, 1.0), (std::vector<std::size_t>{0, 2, 3}));
  const std::vector<double> w = {1, 5, 2, 5};
  EXPECT_EQ(doerfler_mark(w, 1e-9), (std::vector<std::size_t>{1}));  // tie goes to the smaller id
}

TEST(Doerfler, Errors) {
  const std::vector<double> zeros(4, 0.0);
  EXPECT_THROW(doerfler_mark(zeros, 0.5), std::domain_error);
  const std::vector<double> v = {1, 2};
  EXPECT_THROW(doerfler_mark(v, 0.0), std::invalid_argument);
  EXPECT_THROW(doerfler_mark(v, 1.5), std::invalid_argument);
  const std::vector<double> negative = {1, -2};
  EXPECT_THROW(doerfler_mark(negative, 0.5), std::invalid_argument);
}

TEST(Doerfler, MinimalAgainstExhaustiveSearch) {
  std::mt19937 rng(123);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::bernoulli_distribution repeat(0.2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (double& x : v) x = val(rng);
    for (std::size_t i = 1; i < v.size(); ++i)
      if (repeat(rng)) v[i] = v[i - 1];
    for (int k = 1; k <= 9; ++k) {
      const double theta = 0.1 * k;
      const auto m = doerfler_mark(v, theta);
      const double total = std::accumulate(v.begin(), v.end(), 0.0);
      EXPECT_LE(theta * total, sum_over(v, m));
      EXPECT_EQ(m.size(), brute_force_minimum(v, theta));
      EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
      // dropping the smallest marked entry breaks the bulk criterion
      auto smallest = std::min_element(m.begin(), m.end(), [&](auto a, auto b) { return v[a] < v[b]; });
      EXPECT_GT(theta * total, sum_over(v, m) - v[*smallest]);
    }
  }
}

TEST(AmfemConfig, Validation) {
  AmfemConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.theta = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.delta = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.osc_order = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Amfem, SquareProblemRefinesAndConverges) {
  const ConvergenceReport r = amfem_run(find_problem("square-poly"), small_config(6));
  ASSERT_TRUE(r.completed) << r.diagnostic;
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_LE(r.rows[0].ntri, 8u);  // h <= 0.5 after pre-refinement
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    EXPECT_GT(r.rows[i].ndofs, r.rows[i - 1].ndofs);
    EXPECT_LE(r.rows[i].eta, 1.05 * r.rows[i - 1].eta);
    EXPECT_LT(r.rows[i].rate_eta, 0.0);
  }
  EXPECT_TRUE(std::isnan(r.rows[0].rate_eta));
  EXPECT_EQ(r.rows.back().marked, 0u);
  EXPECT_TRUE(r.rows.back().err_energy.has_value());
}

TEST(Amfem, RunsAreDeterministic) {
  std::ostringstream a, b;
  write_report_csv(a, amfem_run(find_problem("lshape-f1"), small_config(5)));
  write_report_csv(b, amfem_run(find_problem("lshape-f1"), small_config(5)));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Amfem, ObserverSeesEveryLevel) {
  std::vector<int> levels;
  const ConvergenceReport r = amfem_run(find_problem("lshape-f1"), small_config(4), [&](const LevelSnapshot& s) {
    levels.push_back(s.level);
    EXPECT_EQ(s.estimator.eta_sq.size(), s.mesh->n_triangles());
    EXPECT_EQ(s.space->mesh_ptr(), s.mesh);
  });
  EXPECT_EQ(levels, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_FALSE(r.rows[0].err_energy.has_value());
}

TEST(Amfem, LShapeRefinesTowardsCorner) {
  AmfemConfig cfg = small_config(10);
  cfg.theta = 0.3;
  std::shared_ptr<const Mesh> last;
  amfem_run(find_problem("lshape-f1"), cfg, [&](const LevelSnapshot& s) { last = s.mesh; });
  double corner = 0.0, global = 0.0;
  for (std::size_t t = 0; t < last->n_triangles(); ++t) {
    global = std::max(global, last->mesh_size(t));
    if (norm(last->centroid(t)) < 0.1) corner = std::max(corner, last->mesh_size(t));
  }
  EXPECT_LT(corner, 0.5 * global);
}

TEST(Uniform, ZeroLoadStopsAfterOneLevel) {
  ManufacturedProblem p;
  p.name = "zero";
  p.domain = UnitSquare{};
  p.data.f = [](Point) { return 0.0; };
  const ConvergenceReport r = uniform_run(p, small_config(5));
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].eta, 0.0);
}

TEST(Uniform, DoublesTriangleCount) {
  const ConvergenceReport r = uniform_run(find_problem("biharm-linear"), small_config(4));
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_EQ(r.rows[i].ntri, 2 * r.rows[i - 1].ntri);
}

TEST(Amfem, NewtonFailureGivesPartialReport) {
  AmfemConfig cfg = small_config(3);
  cfg.newton.max_iter = 1;
  cfg.newton.relative_tol = 1e-16;
  const ConvergenceReport r = amfem_run(find_problem("square-trig"), cfg);
  EXPECT_FALSE(r.completed);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(AxiomCheck, IdenticalLevelsGiveZeros) {
  std::optional<LevelSnapshot> snap;
  amfem_run(find_problem("square-poly"), small_config(1), [&](const LevelSnapshot& s) { snap = s; });
  ASSERT_TRUE(snap);
  const AxiomDiagnostics d = axiom_check(*snap, *snap);
  EXPECT_EQ(d.distance, 0.0);
  EXPECT_EQ(d.lambda_stab, 0.0);
  EXPECT_EQ(d.lambda_red, 0.0);
  EXPECT_FALSE(d.degenerate);
}

TEST(AxiomCheck, FrozenLoadVolumeReduction) {
  // state 0, f = 1: every fine volume term is a quarter of its parent's share.
  ManufacturedProblem p;
  p.domain = UnitSquare{};
  p.data.f = [](Point) { return 1.0; };
  auto snapshot = [&](std::shared_ptr<const Mesh> mesh, int level) {
    LevelSnapshot s;
    s.level = level;
    s.mesh = mesh;
    s.space = build_space(mesh);
    s.state = StatePair::zero(s.space);
    s.estimator = estimate(*s.space, s.state, p.data);
    return s;
  };
  const auto coarse = std::make_shared<const Mesh>(uniform_refine(build_initial_mesh(UnitSquare{})));
  const auto fine = std::make_shared<const Mesh>(uniform_refine(*coarse));
  const AxiomDiagnostics d = axiom_check(snapshot(coarse, 0), snapshot(fine, 1));
  EXPECT_NEAR(d.mu_reduction, 0.5, 1e-12);
  EXPECT_EQ(d.distance, 0.0);
}

TEST(AxiomRun, UniformDiagnosticsAreFinite) {
  ConvergenceReport report;
  const auto diags = axiom_run(find_problem("square-poly"), small_config(4), Marking::all, &report);
  ASSERT_EQ(diags.size(), 3u);
  for (const auto& d : diags) {
    EXPECT_TRUE(std::isfinite(d.lambda_stab));
    EXPECT_TRUE(std::isfinite(d.lambda_red));
    EXPECT_GT(d.distance, 0.0);
    EXPECT_FALSE(d.degenerate);
  }
  EXPECT_EQ(report.rows.size(), 4u);
}
