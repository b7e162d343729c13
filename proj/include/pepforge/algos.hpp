#pragma once

// Builders that assemble complete performance-estimation problems for
// fixed-step methods: gradient descent, decentralized gradient descent (with a
// spectral or a fixed network matrix) and user-described schemes.
//
// Every builder places the minimizer x* at the origin and leaves out g* (or,
// for sums of functions, eliminates one of the stationary gradients), so the
// Gram basis contains only the vectors the method actually generates.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pepforge/classes.hpp"
#include "pepforge/gram.hpp"

namespace pepforge {

enum class Criterion { last_iterate_gap, min_iterate_gap, gradient_norm_sq };
enum class Representation { tight, relaxed };

std::string to_string(Criterion c);
std::string to_string(Representation r);
Criterion criterion_from_string(const std::string& s);
Representation representation_from_string(const std::string& s);

/// A built problem together with the interpolation records that produced its
/// constraints and the modeling choices worth reporting alongside results.
struct PepProblem {
  Problem problem;
  std::vector<InterpolationRecord> records;
  std::map<std::string, std::string> metadata;
};

struct MethodSpec {
  int N = 1;
  std::vector<double> steps{1.0};  // alpha_i; one entry means constant
  ClassSpec family = ClassSpec::smooth_convex(1.0);
  Criterion criterion = Criterion::last_iterate_gap;
  double R = 1.0;

  /// Constant normalized step h = L * alpha.
  static MethodSpec with_h(int N, double h, double L = 1.0, double R = 1.0);

  double step(int i) const;
  void validate() const;
};

/// x_{i+1} = x_i - alpha_i g_i over the chosen representation of the family.
/// Relaxed representation is available for smooth convex families only.
PepProblem build_gradient_method(const MethodSpec& spec, Representation rep = Representation::tight);

/// 2 L R^2 / (4 + N h (2 - h)). Throws std::invalid_argument outside h in (0, 2].
double classical_bound(int N, double h, double L = 1.0, double R = 1.0);

enum class DgdInit { per_agent, common };

struct DgdSpec {
  int N = 10;
  int agents = 3;
  double alpha = 0.31622776601683794;
  double lam = 0.5;
  ClassSpec local = ClassSpec::convex_bounded_grad(1.0);
  DgdInit init = DgdInit::per_agent;
  double R = 1.0;

  void validate() const;
};

/// Consensus outputs are fresh vectors constrained by the spectral network
/// class. Record "consensus" carries the steps for matrix recovery.
PepProblem build_dgd_spectral(const DgdSpec& spec);

/// Same recurrence with y_{a,i} = sum_b w_ab x_{b,i} for a given W.
PepProblem build_dgd_fixed_matrix(const DgdSpec& spec, const Eigen::MatrixXd& W);

/// Checks symmetry, W 1 = 1 and the spectrum of W on the complement of the
/// all-ones vector against [-lam, lam] (all within tol). Throws ModelError.
void validate_network_matrix(const Eigen::MatrixXd& W, double lam, double tol = 1e-9);

/// Orthonormal basis of R^A whose first column is +-1/sqrt(A); the remaining
/// columns span the complement of the all-ones vector.
Eigen::MatrixXd ones_basis(int agents);

/// Symmetric stochastic A x A matrix with spectrum {1, lam, -lam, lam, ...}
/// built from a fixed orthonormal basis whose first vector is 1/sqrt(A).
Eigen::MatrixXd default_network_matrix(int agents, double lam);

/// Nearest (Frobenius) symmetric matrix with W 1 = 1 and spectrum on the
/// complement of 1 inside [-lam, lam]. Used to clean up recovered matrices.
Eigen::MatrixXd project_network_matrix(const Eigen::MatrixXd& W, double lam);

}  // namespace pepforge
