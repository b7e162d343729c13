#pragma once

// Interpolation constraints for function, operator, linear-map and
// network-matrix families.
//
// Every family has two faces that must agree exactly: a generator that emits
// symbolic Constraints over data handles, and a numeric checker that evaluates
// the same inequalities on concrete vectors. Both produce identically ordered
// and labelled entries, which is what the coherence tests rely on.

#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pepforge/gram.hpp"

namespace pepforge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family {
  smooth_strongly_convex,  // F_{mu,L}; mu may be negative or -inf, L may be +inf
  relaxed_smooth_convex,   // naive discretization of L-smooth convexity
  convex,                  // F_{0,inf}
  strongly_convex,         // F_{mu,inf}
  cyclically_monotone,     // F_{mu,L} through gradients only
  smooth_bounded_grad,     // C_{L,M}
  indicator_bounded,       // I_M
  convex_bounded_grad,     // convex, ||g|| <= M
  monotone,
  cocoercive,
  lipschitz_operator,
  linear_operator,         // ||M|| <= L, data carried by LinearMapDataHandle
  network_matrix,          // W_lambda, data carried by ConsensusDataHandle
};

std::string to_string(Family family);
Family family_from_string(const std::string& name);

struct ClassSpec {
  Family family = Family::smooth_strongly_convex;
  double mu = 0.0;
  double L = 1.0;
  double M = 1.0;
  double beta = 1.0;
  int max_cycle = 0;              // 0 means "all cycles"
  bool allow_large_cycles = false;
  bool strict_equal_curvature = true;  // enables the mu == L branch

  static ClassSpec smooth_strongly_convex(double mu, double L);
  static ClassSpec smooth_convex(double L) { return smooth_strongly_convex(0.0, L); }
  static ClassSpec relaxed_smooth_convex(double L);
  static ClassSpec convex();
  static ClassSpec strongly_convex(double mu);
  static ClassSpec cyclically_monotone(double mu, double L, int max_cycle = 0);
  static ClassSpec smooth_bounded_grad(double L, double M);
  static ClassSpec indicator_bounded(double M);
  static ClassSpec convex_bounded_grad(double M);
  static ClassSpec monotone(double mu);
  static ClassSpec cocoercive(double beta);
  static ClassSpec lipschitz_operator(double L);

  bool is_function_family() const;
  bool is_operator_family() const;
  /// True when the generated constraints are necessary and sufficient.
  bool exact() const;
  void validate() const;
  std::string describe() const;
};

// ------------------------------------------------------------ data handles

struct FunctionPoint {
  VectorExpr x;
  VectorExpr g;
  ScalarVar f;
  std::string name;
};

struct FunctionDataHandle {
  std::vector<FunctionPoint> points;
};

struct OperatorPoint {
  VectorExpr x;
  VectorExpr q;
  std::string name;
};

struct OperatorDataHandle {
  std::vector<OperatorPoint> pairs;
};

struct LinearMapDataHandle {
  std::vector<std::pair<VectorExpr, VectorExpr>> forward;  // (x, y = M x)
  std::vector<std::pair<VectorExpr, VectorExpr>> adjoint;  // (u, v = M^T u)
  double L = 1.0;
};

struct ConsensusStep {
  std::vector<VectorExpr> x;  // one input per agent
  std::vector<VectorExpr> y;  // one output per agent
};

struct ConsensusDataHandle {
  std::vector<ConsensusStep> steps;
  int agents = 2;
  double lam = 0.0;
  /// Basis labels the average-preservation equalities are tested against.
  /// Empty means "every label referenced by the steps".
  std::vector<BasisLabel> test_labels;
};

// -------------------------------------------------------------- generators

std::vector<Constraint> smooth_strongly_convex_constraints(const FunctionDataHandle& h, double mu, double L,
                                                           bool strict_equal_curvature = true);
std::vector<Constraint> relaxed_smooth_convex_constraints(const FunctionDataHandle& h, double L);
std::vector<Constraint> cyclic_monotonicity_constraints(const OperatorDataHandle& h, double mu, double L,
                                                        int max_cycle_len, bool allow_large = false);
std::vector<Constraint> smooth_bounded_grad_constraints(const FunctionDataHandle& h, double L, double M);
std::vector<Constraint> indicator_constraints(const FunctionDataHandle& h, double M);
std::vector<Constraint> convex_bounded_grad_constraints(const FunctionDataHandle& h, double M);
std::vector<Constraint> operator_constraints(const OperatorDataHandle& h, const ClassSpec& spec);
std::vector<Constraint> linear_operator_constraints(const LinearMapDataHandle& h);
std::vector<Constraint> network_matrix_constraints(const ConsensusDataHandle& h);

/// Dispatches a function family to its generator.
std::vector<Constraint> function_constraints(const FunctionDataHandle& h, const ClassSpec& spec);

/// Number of directed simple cycles of length 2..max_len on n nodes, counted
/// up to rotation.
std::size_t cycle_count(int n, int max_len);

// ------------------------------------------------------------ numeric twin

struct NumericTriple {
  Eigen::VectorXd x;
  Eigen::VectorXd g;
  double f = 0.0;
  std::string name;
};

struct NumericPair {
  Eigen::VectorXd x;
  Eigen::VectorXd q;
  std::string name;
};

struct NumericConsensusStep {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> y;
};

struct CheckEntry {
  std::string label;
  ConstraintKind kind;
  double value;     // signed body value (for lmi: -lambda_min)
  double residual;  // amount of violation, >= 0
};

struct CheckReport {
  bool feasible = true;
  double max_residual = 0.0;
  std::vector<CheckEntry> entries;
  std::vector<CheckEntry> violations;
};

CheckReport check_numeric(std::span<const NumericTriple> data, const ClassSpec& spec, double tol);
CheckReport check_numeric(std::span<const NumericPair> data, const ClassSpec& spec, double tol);
CheckReport check_numeric_linear(std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> forward,
                                 std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> adjoint,
                                 double L, double tol);
CheckReport check_numeric_consensus(std::span<const NumericConsensusStep> steps, double lam, double tol);

// ---------------------------------------------------------------- records

using DataHandle = std::variant<FunctionDataHandle, OperatorDataHandle, LinearMapDataHandle, ConsensusDataHandle>;

/// Which generator produced which block of a problem's constraints. Kept so a
/// recovered instance can be re-checked with the numeric twin.
struct InterpolationRecord {
  std::string name;
  ClassSpec spec;
  DataHandle handle;
  bool exact = true;
};

/// Generates the constraints for a record (prefixing labels with its name).
std::vector<Constraint> generate(const InterpolationRecord& record);

}  // namespace pepforge
