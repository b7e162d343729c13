#pragma once

// Worst-case instance recovery: factor an optimal Gram matrix into concrete
// vectors, re-check them against the exact interpolation inequalities, and
// for consensus problems look for an actual averaging matrix that explains
// the recovered iterates.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pepforge/algos.hpp"
#include "pepforge/sdp.hpp"

namespace pepforge {

class RecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Certification { certified_tight, upper_bound_only, numerical_failure };

std::string to_string(Certification c);

struct GramFactor {
  Eigen::MatrixXd vectors;  // one row per Gram index, r columns
  int rank = 0;
  double reconstruction_error = 0.0;  // max |V V^T - G|
};

/// Keeps eigenpairs above rank_tol * lambda_max. Throws RecoveryError when G
/// is not symmetric or has an eigenvalue below -rank_tol * lambda_max
/// (beyond a small absolute floor).
GramFactor factor_gram(const Eigen::MatrixXd& G, double rank_tol = 1e-7);

struct WorstCaseInstance {
  int dimension = 0;
  std::vector<std::string> vector_tags;  // basis order
  Eigen::MatrixXd vectors;               // basis_size x dimension
  std::vector<std::string> scalar_tags;
  std::vector<double> scalars;
  double value = 0.0;                    // SDP optimal value
  double reconstruction_error = 0.0;

  Eigen::MatrixXd gram() const { return vectors * vectors.transpose(); }
};

WorstCaseInstance recover_instance(const Problem& p, const sdp::CompiledSdp& compiled, const sdp::SdpSolution& sol,
                                   double rank_tol = 1e-7);

struct NetworkRecovery {
  bool success = false;
  bool underdetermined = false;
  Eigen::MatrixXd W;
  double residual = 0.0;     // sqrt of the least-squares objective / max(1, ||Y||)
  Eigen::VectorXd spectrum;  // eigenvalues of W on the complement of 1
  std::string message;
};

/// Least squares over symmetric W with W 1 = 1. Never throws on data issues;
/// failures are reported through success/message.
NetworkRecovery recover_network_matrix(const WorstCaseInstance& inst, const ConsensusDataHandle& steps,
                                       double tol = 1e-5);

struct RecordCheck {
  std::string name;
  bool exact = true;
  CheckReport report;
};

struct VerificationReport {
  Certification certification = Certification::numerical_failure;
  double max_residual = 0.0;         // over all problem constraints
  double objective_at_instance = 0.0;
  double objective_error = 0.0;      // |objective - SDP value|
  double tolerance = 0.0;            // absolute tolerance actually applied
  std::vector<RecordCheck> records;
  std::optional<NetworkRecovery> network;
  std::string reason;
};

/// Tolerances are relative to the instance scale max(1, max G_ii, max |f|).
/// Consensus records additionally require recover_network_matrix to succeed
/// at network_tol.
VerificationReport verify_instance(const WorstCaseInstance& inst, const PepProblem& p, double tol = 1e-6,
                                   double network_tol = 1e-5);

/// Plain-text export; read_instance accepts exactly what write_instance emits.
void write_instance(std::ostream& os, const WorstCaseInstance& inst, const VerificationReport* report = nullptr);
WorstCaseInstance read_instance(std::istream& is);

}  // namespace pepforge
