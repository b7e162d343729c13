#include <algorithm>
#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "pepforge/scheme.hpp"
#include "pepforge/sdp.hpp"

namespace pepforge {
namespace {

double pep_value(const PepProblem& p) {
  const sdp::SdpSolution sol = sdp::solve(sdp::compile(p.problem).sdp);
  EXPECT_EQ(sol.status, sdp::Status::optimal);
  return sol.value();
}

std::string it(const std::string& base, int i) { return base + std::to_string(i); }

SchemeConfig gradient_scheme(int N, double h) {
  SchemeConfig c;
  SchemeOracle f;
  f.name = "f";
  f.spec = ClassSpec::smooth_convex(1.0);
  c.oracles = {f};
  c.seeds = {"x0"};
  for (int i = 0; i < N; ++i) {
    SchemeStep g;
    g.name = it("g", i);
    g.op = StepOp::gradient;
    g.oracle = "f";
    g.at = {{it("x", i), 1.0}};
    SchemeStep x;
    x.name = it("x", i + 1);
    x.op = StepOp::combine;
    x.at = {{it("x", i), 1.0}, {it("g", i), -h}};
    c.steps.push_back(g);
    c.steps.push_back(x);
  }
  c.stationary = {{{"f"}, ""}};
  c.initial = {{{{"x0", 1.0}}, 1.0}};
  c.objective_oracles = {"f"};
  c.objective_at = {{it("x", N), 1.0}};
  return c;
}

TEST(Scheme, ReproducesGradientMethod) {
  for (int N : {1, 3}) {
    const PepProblem custom = build_custom_method(gradient_scheme(N, 1.0));
    const PepProblem direct = build_gradient_method(MethodSpec::with_h(N, 1.0));
    EXPECT_EQ(custom.problem.basis_size(), direct.problem.basis_size());
    EXPECT_EQ(custom.problem.scalar_count(), direct.problem.scalar_count());
    ASSERT_EQ(custom.problem.constraints().size(), direct.problem.constraints().size());
    auto kinds = [](const Problem& p) {
      std::vector<int> k;
      for (const auto& c : p.constraints()) k.push_back(static_cast<int>(c.kind));
      std::sort(k.begin(), k.end());
      return k;
    };
    EXPECT_EQ(kinds(custom.problem), kinds(direct.problem));
    EXPECT_NEAR(pep_value(custom), pep_value(direct), 1e-7) << N;
  }
}

TEST(Scheme, ProjectedGradientWithIndicatorBuilds) {
  // x1 = proj_C(x0 - h grad f(x0)) written as x1 = y0 - s0 with s0 in N_C(x1).
  SchemeConfig c;
  SchemeOracle f, ind;
  f.name = "f";
  f.spec = ClassSpec::smooth_convex(1.0);
  ind.name = "C";
  ind.spec = ClassSpec::indicator_bounded(2.0);
  c.oracles = {f, ind};
  c.seeds = {"x0"};
  SchemeStep g;
  g.name = "g0";
  g.op = StepOp::gradient;
  g.oracle = "f";
  g.at = {{"x0", 1.0}};
  SchemeStep y;
  y.name = "y0";
  y.op = StepOp::combine;
  y.at = {{"x0", 1.0}, {"g0", -1.0}};
  SchemeStep p;
  p.name = "x1";
  p.op = StepOp::prox;
  p.oracle = "C";
  p.at = {{"y0", 1.0}};
  p.step = 1.0;
  c.steps = {g, y, p};
  c.stationary = {{{"f", "C"}, ""}};
  c.initial = {{{{"x0", 1.0}}, 1.0}};
  // Distance to the solution: a projected step with h = 1 is nonexpansive and
  // f = 0 with x0 inside C moves nothing, so the worst case is exactly 1.
  // The function-gap version stalls short of solver accuracy: nothing bounds
  // the normal vector of C at x* in the interpolation model.
  c.objective = SchemeObjective::norm_sq;
  c.objective_at = {{"x1", 1.0}};
  PepProblem pp;
  ASSERT_NO_THROW(pp = build_custom_method(c));
  EXPECT_EQ(pp.records.size(), 2u);
  EXPECT_NEAR(pep_value(pp), 1.0, 1e-6);
}

TEST(Scheme, StructuredObjectiveThroughLinearMap) {
  // f(x) = h(M x) with h in F_{0,1} and ||M|| <= 1 is itself in F_{0,1}, so the
  // structured bound cannot exceed the plain gradient-method bound.
  const int N = 2;
  const double step = 1.0;
  SchemeConfig c;
  SchemeOracle h, M;
  h.name = "h";
  h.spec = ClassSpec::smooth_convex(1.0);
  M.name = "M";
  M.kind = OracleKind::linear;
  M.L = 1.0;
  c.oracles = {h, M};
  c.seeds = {"x0"};
  for (int i = 0; i < N; ++i) {
    SchemeStep a{it("y", i), StepOp::apply, "M", {{it("x", i), 1.0}}, 0.0, {}, {}};
    SchemeStep g{it("d", i), StepOp::gradient, "h", {{it("y", i), 1.0}}, 0.0, {}, {}};
    SchemeStep t{it("u", i), StepOp::adjoint, "M", {{it("d", i), 1.0}}, 0.0, {}, {}};
    SchemeStep x{it("x", i + 1), StepOp::combine, "", {{it("x", i), 1.0}, {it("u", i), -step}}, 0.0, {}, {}};
    c.steps.insert(c.steps.end(), {a, g, t, x});
  }
  c.steps.push_back({it("y", N), StepOp::apply, "M", {{it("x", N), 1.0}}, 0.0, {}, {}});
  c.stationary = {{{"h"}, "M"}};
  c.initial = {{{{"x0", 1.0}}, 1.0}};
  c.objective_oracles = {"h"};
  c.objective_at = {{it("y", N), 1.0}};

  const PepProblem p = build_custom_method(c);
  bool has_lmi = false;
  for (const auto& con : p.problem.constraints()) has_lmi |= con.kind == ConstraintKind::lmi;
  EXPECT_TRUE(has_lmi);
  const double structured = pep_value(p);
  const double plain = pep_value(build_gradient_method(MethodSpec::with_h(N, step)));
  EXPECT_GT(structured, 0.0);
  EXPECT_LE(structured, plain + 1e-6);
}

TEST(Scheme, MisuseRejected) {
  SchemeConfig c = gradient_scheme(1, 1.0);
  c.steps[0].oracle = "g";
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.steps[1].at = {{"x7", 1.0}};
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.stationary.clear();
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.initial.clear();
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.oracles.push_back(c.oracles[0]);
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.oracles[0].spec = ClassSpec::cocoercive(1.0);
  EXPECT_THROW(build_custom_method(c), ModelError);

  c = gradient_scheme(1, 1.0);
  c.steps[1].name = "x0";
  EXPECT_THROW(build_custom_method(c), ModelError);
}

TEST(Scheme, NormObjectiveOnGradient) {
  // max ||grad f(x0)||^2 over F_{0,1} with ||x0|| <= 1 is 1.
  SchemeConfig c = gradient_scheme(1, 1.0);
  c.objective = SchemeObjective::norm_sq;
  c.objective_oracles.clear();
  c.objective_at = {{"g0", 1.0}};
  EXPECT_NEAR(pep_value(build_custom_method(c)), 1.0, 1e-6);
}

}  // namespace
}  // namespace pepforge
