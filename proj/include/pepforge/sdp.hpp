#pragma once

// Standard-form SDP and a primal-dual interior-point solver for it.
//
//   maximize    <C, X> + c0
//   subject to  <A_k, X> = b_k        k = 1..m
//               X in K = S^{n_1}_+ x ... x R^{p}_+ x R^{q}
//
// Block entries are addressed as (block, row, col). For psd blocks only the
// upper triangle is stored and the coefficient multiplies X(row, col) once;
// linear blocks use col = 0.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pepforge/gram.hpp"

namespace pepforge::sdp {

enum class BlockKind { psd, nonneg, free };

struct Block {
  BlockKind kind;
  int size;
};

struct Entry {
  int block;
  int row;
  int col;
  double value;
};

struct LinearFunctional {
  std::vector<Entry> entries;
};

struct StandardSdp {
  std::vector<Block> blocks;
  LinearFunctional objective;
  double objective_constant = 0.0;
  std::vector<LinearFunctional> rows;
  std::vector<double> rhs;

  int row_count() const { return static_cast<int>(rows.size()); }
  /// Throws ModelError on out-of-range entries or lower-triangle psd entries.
  void validate() const;
};

/// Where each PEP constraint landed in the compiled program.
struct ConstraintSlot {
  int first_row = -1;
  int row_count = 0;
  int slack = -1;      // index into the nonnegative block (le0)
  int aux_block = -1;  // auxiliary psd block (lmi)
  bool dropped = false;  // constant constraint that holds trivially
};

struct CompiledSdp {
  StandardSdp sdp;
  int gram_block = -1;
  int fval_block = -1;
  int slack_block = -1;
  std::vector<ConstraintSlot> slots;  // one per Problem constraint
};

/// Gram matrix = block 0, function values = free block, one slack per le0
/// constraint, one auxiliary psd block per LMI. Ordering follows registration
/// order so identical problems compile to identical programs.
CompiledSdp compile(const Problem& p);

enum class Status { optimal, primal_infeasible, dual_infeasible, max_iter, numerical_failure };

std::string to_string(Status s);

enum class SchurKernel { serial, parallel };

struct SolveOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  SchurKernel kernel = SchurKernel::parallel;
  bool verbose = false;
};

struct SdpSolution {
  Status status = Status::numerical_failure;
  std::vector<Eigen::MatrixXd> primal;  // per block; linear blocks are column vectors
  std::vector<Eigen::MatrixXd> dual_slack;
  Eigen::VectorXd y;                    // equality multipliers (solver sign convention)
  double primal_objective = 0.0;        // <C,X> + c0, the certified lower value
  double dual_objective = 0.0;          // upper bound from the dual iterate
  double gap = 0.0;                     // max(|primal - dual|, <X,S>)
  double primal_infeasibility = 0.0;    // ||b - A x|| / (1 + ||b||)
  double dual_infeasibility = 0.0;      // ||c - A^T y - s|| / (1 + ||c||)
  int iterations = 0;

  double value() const { return primal_objective; }
  double relative_gap() const;
};

SdpSolution solve(const StandardSdp& s, const SolveOptions& opts = {});

/// Observer called after every solve; used by test harnesses to audit
/// solver accuracy. Pass an empty function to clear.
void set_solve_observer(std::function<void(const SdpSolution&)> observer);

struct DualEntry {
  std::string label;
  ConstraintKind kind;
  double multiplier;         // >= 0 for le0; trace of the dual block for lmi
  Eigen::MatrixXd lmi_dual;  // lmi only
};

/// Multipliers keyed by constraint label. Throws if the solve was not optimal.
std::vector<DualEntry> dual_report(const SdpSolution& sol, const CompiledSdp& compiled, const Problem& p);

/// SDPA sparse format. Free variables are split into differences of two
/// nonnegative variables; the SDPA "primal" is our dual.
void write_sdpa(std::ostream& os, const StandardSdp& s);

}  // namespace pepforge::sdp
