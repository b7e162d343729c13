#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pepforge/algos.hpp"
#include "pepforge/sdp.hpp"

namespace pepforge::sdp {
namespace {

StandardSdp max_eig_sdp() {
  StandardSdp s;
  s.blocks = {{BlockKind::psd, 2}};
  s.objective.entries = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}}};
  s.rhs = {1.0};
  return s;
}

// max <J, X> s.t. tr X = 1, X_ij = 0 on the edges of the n-cycle.
StandardSdp cycle_theta_sdp(int n) {
  StandardSdp s;
  s.blocks = {{BlockKind::psd, n}};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s.objective.entries.push_back({0, i, j, i == j ? 1.0 : 2.0});
  LinearFunctional tr;
  for (int i = 0; i < n; ++i) tr.entries.push_back({0, i, i, 1.0});
  s.rows.push_back(tr);
  s.rhs.push_back(1.0);
  for (int i = 0; i < n; ++i) {
    const int a = std::min(i, (i + 1) % n), b = std::max(i, (i + 1) % n);
    s.rows.push_back({{{0, a, b, 1.0}}});
    s.rhs.push_back(0.0);
  }
  return s;
}

TEST(Solve, MaxEigenvalue) {
  const SdpSolution sol = solve(max_eig_sdp());
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 2.0, 1e-8);
  EXPECT_NEAR(sol.primal[0](1, 1), 1.0, 1e-6);
  EXPECT_LE(sol.primal_objective, sol.dual_objective + 1e-8 * (1.0 + std::abs(sol.value())));
}

TEST(Solve, FiveCycleTheta) {
  const SdpSolution sol = solve(cycle_theta_sdp(5));
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), std::sqrt(5.0), 1e-6);
}

// Independent value: theta of an odd cycle is n cos(pi/n) / (1 + cos(pi/n)).
TEST(Solve, OddCycleThetaClosedForm) {
  for (int n : {7, 9}) {
    const double c = std::cos(M_PI / n);
    const SdpSolution sol = solve(cycle_theta_sdp(n));
    ASSERT_EQ(sol.status, Status::optimal);
    EXPECT_NEAR(sol.value(), n * c / (1.0 + c), 1e-6) << n;
  }
}

TEST(Solve, LinearProgram) {
  // max x1 + 2 x2 s.t. x1 + x2 + s = 4, x1 + 3 x2 + t = 6, all >= 0 -> (3, 1), value 5.
  StandardSdp s;
  s.blocks = {{BlockKind::nonneg, 4}};
  s.objective.entries = {{0, 0, 0, 1.0}, {0, 1, 0, 2.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {0, 1, 0, 1.0}, {0, 2, 0, 1.0}}}, {{{0, 0, 0, 1.0}, {0, 1, 0, 3.0}, {0, 3, 0, 1.0}}}};
  s.rhs = {4.0, 6.0};
  const SdpSolution sol = solve(s);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 5.0, 1e-7);
  EXPECT_NEAR(sol.primal[0](0, 0), 3.0, 1e-6);
  EXPECT_NEAR(sol.primal[0](1, 0), 1.0, 1e-6);
}

TEST(Solve, ObjectiveConstantIsAdded) {
  StandardSdp s = max_eig_sdp();
  s.objective_constant = -0.5;
  const SdpSolution sol = solve(s);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 1.5, 1e-8);
}

TEST(Solve, FreeVariablesWithNullSpace) {
  // Only f1 - f2 is determined; the common shift of (f1, f2) is free.
  // max x s.t. x + f1 - f2 = 1, f1 - f2 = 0.25 -> x = 0.75.
  StandardSdp s;
  s.blocks = {{BlockKind::psd, 1}, {BlockKind::free, 2}};
  s.objective.entries = {{0, 0, 0, 1.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {1, 0, 0, 1.0}, {1, 1, 0, -1.0}}}, {{{1, 0, 0, 1.0}, {1, 1, 0, -1.0}}}};
  s.rhs = {1.0, 0.25};
  const SdpSolution sol = solve(s);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 0.75, 1e-8);
  EXPECT_NEAR(sol.primal[1](0) - sol.primal[1](1), 0.25, 1e-8);
}

TEST(Solve, DetectsPrimalInfeasibility) {
  // x >= 0 with x = -1.
  StandardSdp s;
  s.blocks = {{BlockKind::psd, 2}};
  s.objective.entries = {{0, 0, 0, 1.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}}};
  s.rhs = {-1.0};
  EXPECT_EQ(solve(s).status, Status::primal_infeasible);
}

TEST(Solve, DetectsUnboundedness) {
  // max x1 s.t. x1 - x2 = 0 over x >= 0.
  StandardSdp s;
  s.blocks = {{BlockKind::nonneg, 2}};
  s.objective.entries = {{0, 0, 0, 1.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {0, 1, 0, -1.0}}}};
  s.rhs = {0.0};
  EXPECT_EQ(solve(s).status, Status::dual_infeasible);
}

TEST(Solve, ValidationRejectsLowerTriangle) {
  StandardSdp s = max_eig_sdp();
  s.objective.entries.push_back({0, 1, 0, 1.0});
  EXPECT_THROW(solve(s), ModelError);
  StandardSdp t = max_eig_sdp();
  t.rows[0].entries.push_back({3, 0, 0, 1.0});
  EXPECT_THROW(solve(t), ModelError);
}

TEST(Solve, ScaleRobustness) {
  const StandardSdp base = cycle_theta_sdp(5);
  for (double c : {1e-3, 0.5, 40.0}) {
    StandardSdp s = base;
    for (auto& e : s.objective.entries) e.value *= c;
    const SdpSolution sol = solve(s);
    ASSERT_EQ(sol.status, Status::optimal);
    EXPECT_NEAR(sol.value(), c * std::sqrt(5.0), 1e-6 * c * (1.0 + std::sqrt(5.0))) << c;
  }
}

bool bit_identical(const SdpSolution& a, const SdpSolution& b) {
  if (a.status != b.status || a.iterations != b.iterations || a.primal.size() != b.primal.size()) return false;
  if (a.primal_objective != b.primal_objective || a.dual_objective != b.dual_objective) return false;
  for (std::size_t k = 0; k < a.primal.size(); ++k) {
    if (a.primal[k] != b.primal[k] || a.dual_slack[k] != b.dual_slack[k]) return false;
  }
  return a.y == b.y;
}

TEST(Solve, Deterministic) {
  const CompiledSdp c = compile(build_gradient_method(MethodSpec::with_h(5, 1.3)).problem);
  const SdpSolution a = solve(c.sdp), b = solve(c.sdp);
  EXPECT_TRUE(bit_identical(a, b));
}

TEST(Solve, KernelChoiceDoesNotChangeIterates) {
  const CompiledSdp c = compile(build_gradient_method(MethodSpec::with_h(4, 1.0)).problem);
  SolveOptions serial, parallel;
  serial.kernel = SchurKernel::serial;
  parallel.kernel = SchurKernel::parallel;
  EXPECT_TRUE(bit_identical(solve(c.sdp, serial), solve(c.sdp, parallel)));
}

TEST(Solve, MaxIterReportsHonestResiduals) {
  SolveOptions o;
  o.max_iter = 2;
  const SdpSolution sol = solve(cycle_theta_sdp(5), o);
  EXPECT_EQ(sol.status, Status::max_iter);
  EXPECT_GT(sol.gap + sol.primal_infeasibility + sol.dual_infeasibility, 1e-8);
}

// --------------------------------------------------------------- compile

TEST(Compile, GradientMethodOneStepLayout) {
  const PepProblem p = build_gradient_method(MethodSpec::with_h(1, 1.0));
  const CompiledSdp c = compile(p.problem);
  ASSERT_GE(c.gram_block, 0);
  EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(c.gram_block)].kind, BlockKind::psd);
  EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(c.gram_block)].size, 3);
  EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(c.fval_block)].kind, BlockKind::free);
  EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(c.fval_block)].size, 3);
  int interpolation_slacks = 0;
  for (std::size_t k = 0; k < c.slots.size(); ++k)
    if (p.problem.constraints()[k].label.rfind("f:", 0) == 0 && c.slots[k].slack >= 0) ++interpolation_slacks;
  EXPECT_EQ(interpolation_slacks, 6);
  // One more slack for the initial condition.
  EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(c.slack_block)].size, 7);
}

TEST(Compile, LmiGetsAuxiliaryBlocks) {
  ProblemBuilder b;
  LinearMapDataHandle h;
  h.L = 1.0;
  for (int i = 0; i < 2; ++i)
    h.forward.emplace_back(b.add_vector(BasisKind::iterate_seed, "x"), b.add_vector(BasisKind::auxiliary, "y"));
  h.adjoint.emplace_back(b.add_vector(BasisKind::iterate_seed, "u"), b.add_vector(BasisKind::auxiliary, "v"));
  h.adjoint.emplace_back(b.add_vector(BasisKind::iterate_seed, "u"), b.add_vector(BasisKind::auxiliary, "v"));
  b.add_constraints(linear_operator_constraints(h));
  b.add_constraint(Constraint::le0(norm_sq(h.forward[0].first) - 1.0, "init"));
  b.set_objective(norm_sq(h.forward[0].second));
  const Problem p = b.build();
  const CompiledSdp c = compile(p);
  int aux = 0;
  for (const auto& s : c.slots)
    if (s.aux_block >= 0) {
      ++aux;
      EXPECT_EQ(c.sdp.blocks[static_cast<std::size_t>(s.aux_block)].size, 2);
    }
  EXPECT_EQ(aux, 2);

  // max ||M x0||^2 over ||x0|| <= 1 and ||M|| <= 1 is 1.
  const SdpSolution sol = solve(c.sdp);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 1.0, 1e-6);
}

TEST(Compile, ReproducibleBitForBit) {
  const auto a = compile(build_gradient_method(MethodSpec::with_h(3, 1.5)).problem);
  const auto b = compile(build_gradient_method(MethodSpec::with_h(3, 1.5)).problem);
  std::ostringstream sa, sb;
  write_sdpa(sa, a.sdp);
  write_sdpa(sb, b.sdp);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Compile, GradientOneStepValue) {
  const PepProblem p = build_gradient_method(MethodSpec::with_h(1, 1.0));
  const SdpSolution sol = solve(compile(p.problem).sdp);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.value(), 1.0 / 6.0, 1e-6);
}

// ------------------------------------------------------------ dual report

TEST(DualReport, OneStepMultipliers) {
  const PepProblem p = build_gradient_method(MethodSpec::with_h(1, 1.0));
  const CompiledSdp c = compile(p.problem);
  SolveOptions o;
  const SdpSolution sol = solve(c.sdp, o);
  ASSERT_EQ(sol.status, Status::optimal);
  const auto duals = dual_report(sol, c, p.problem);
  ASSERT_EQ(duals.size(), p.problem.constraints().size());
  int active = 0, interpolation = 0;
  for (const auto& d : duals) {
    if (d.kind == ConstraintKind::le0) EXPECT_GE(d.multiplier, -o.feas_tol) << d.label;
    if (d.label.rfind("f:", 0) == 0) {
      ++interpolation;
      active += d.multiplier > 1e-6;
    }
  }
  EXPECT_GT(active, 0);
  EXPECT_LT(active, interpolation);
  // The initial condition carries the full sensitivity d value / d R^2 = 1/6.
  for (const auto& d : duals)
    if (d.label == "initial") EXPECT_NEAR(d.multiplier, 1.0 / 6.0, 1e-6);
}

TEST(DualReport, RequiresOptimalStatus) {
  ProblemBuilder b;
  auto x = b.add_vector(BasisKind::iterate_seed, "x");
  b.add_constraint(Constraint::le0(norm_sq(x) + 1.0, "impossible"));
  b.set_objective(norm_sq(x));
  const Problem p = b.build();
  const CompiledSdp c = compile(p);
  const SdpSolution sol = solve(c.sdp);
  EXPECT_NE(sol.status, Status::optimal);
  EXPECT_THROW(dual_report(sol, c, p), ModelError);
}

// ------------------------------------------------------------------ export

TEST(Export, SdpaHeader) {
  std::ostringstream os;
  write_sdpa(os, cycle_theta_sdp(5));
  const std::string s = os.str();
  EXPECT_NE(s.find("6 = mDIM"), std::string::npos);
  EXPECT_NE(s.find("1 = nBLOCK"), std::string::npos);
  EXPECT_NE(s.find("5 = bLOCKsTRUCT"), std::string::npos);
}

TEST(Export, FreeBlocksAreSplit) {
  StandardSdp s;
  s.blocks = {{BlockKind::psd, 1}, {BlockKind::nonneg, 2}, {BlockKind::free, 3}};
  s.objective.entries = {{0, 0, 0, 1.0}};
  s.rows = {{{{0, 0, 0, 1.0}, {2, 1, 0, 2.0}}}};
  s.rhs = {1.0};
  std::ostringstream os;
  write_sdpa(os, s);
  EXPECT_NE(os.str().find("1 -2 -6 = bLOCKsTRUCT"), std::string::npos);
  EXPECT_NE(os.str().find("1 3 2 2 2"), std::string::npos);
  EXPECT_NE(os.str().find("1 3 5 5 -2"), std::string::npos);
}

}  // namespace
}  // namespace pepforge::sdp
