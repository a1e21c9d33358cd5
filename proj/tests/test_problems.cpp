#include <gtest/gtest.h>

#include "vkplate/problems.hpp"

using namespace vkplate;

namespace {

struct LoadSample {
  Point x;
  double f;
  double g;
};

// Values from symbolic differentiation (docs/derive_loads.py).
const LoadSample poly_samples[] = {
    {{0.5, 0.5}, 4.9921875, 5.00390625},
    {{0.25, 2.0 / 3.0}, 2.3632330246913580247, 2.3617862654320987654},
    {{0.1, 0.7}, 0.297512284256, 0.295243857872},
};
const LoadSample trig_samples[] = {
    {{0.5, 0.5}, 1558.5454565440389958, 2727.4545489520682426},
    {{0.25, 2.0 / 3.0}, 340.93181861900853033, 121.76136379250304655},
    {{0.1, 0.7}, -511.39772792851279549, -620.98295534176553738},
};

}  // namespace

TEST(Registry, ContainsTheFourProblems) {
  const auto all = registry();
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0].name, "square-poly");
  EXPECT_EQ(all[1].name, "square-trig");
  EXPECT_EQ(all[2].name, "lshape-f1");
  EXPECT_EQ(all[3].name, "biharm-linear");
  EXPECT_THROW(find_problem("nope"), std::invalid_argument);
}

TEST(Registry, PolynomialLoadsMatchSymbolicValues) {
  const auto p = find_problem("square-poly");
  for (const auto& s : poly_samples) {
    EXPECT_NEAR(p.data.f(s.x), s.f, 1e-12 * std::abs(s.f));
    EXPECT_NEAR(p.data.g(s.x), s.g, 1e-12 * std::abs(s.g));
  }
}

TEST(Registry, TrigonometricLoadsMatchSymbolicValues) {
  const auto p = find_problem("square-trig");
  for (const auto& s : trig_samples) {
    EXPECT_NEAR(p.data.f(s.x), s.f, 1e-12 * std::abs(s.f));
    EXPECT_NEAR(p.data.g(s.x), s.g, 1e-12 * std::abs(s.g));
  }
}

TEST(Registry, LinearProblemDropsBrackets) {
  const auto p = find_problem("biharm-linear");
  EXPECT_FALSE(p.data.nonlinear);
  // f = g = Delta^2 u, which is 5 at the centre
  EXPECT_NEAR(p.data.f({0.5, 0.5}), 5.0, 1e-13);
  EXPECT_NEAR(p.data.g({0.5, 0.5}), 5.0, 1e-13);
}

TEST(Registry, LShapeHasNoExactSolution) {
  const auto p = find_problem("lshape-f1");
  EXPECT_FALSE(p.exact.has_value());
  EXPECT_TRUE(std::holds_alternative<LShape>(p.domain));
  EXPECT_EQ(p.data.f({-0.3, 0.2}), 1.0);
}

TEST(Registry, ExactSolutionsAreClamped) {
  for (const auto& p : registry()) {
    if (!p.exact) continue;
    for (int i = 0; i <= 50; ++i) {
      const double s = i / 50.0;
      for (Point b : {Point{s, 0}, Point{s, 1}, Point{0, s}, Point{1, s}}) {
        EXPECT_LE(std::abs(p.exact->u.value(b)), 1e-10);
        EXPECT_LE(norm(p.exact->u.gradient(b)), 1e-10);
      }
    }
  }
}

TEST(CheckProblem, DetectsWrongLoads) {
  auto p = find_problem("square-poly");
  p.data.f = [](Point) { return 1.0; };
  EXPECT_THROW(check_problem(p), std::logic_error);
  auto q = find_problem("square-trig");
  q.exact->u.value = [](Point) { return 1.0; };
  EXPECT_THROW(check_problem(q), std::logic_error);
}
