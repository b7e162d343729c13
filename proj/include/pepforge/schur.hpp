#pragma once

// Schur-complement assembly for the psd blocks of the interior-point Newton
// system, M(k,l) += <A_k, W A_l W>. This is the dominant cost of a solve.
//
// schur_psd_serial is the reference implementation; schur_psd_parallel
// distributes columns over OpenMP threads. Each column is computed by a single
// thread with the same arithmetic, so the two agree bit for bit.

#include <vector>

#include <Eigen/Dense>

namespace pepforge::sdp {

/// Symmetric sparse matrix stored as upper-triangle triplets; (i, j, v) with
/// i < j stands for v at both (i, j) and (j, i).
struct SparseSym {
  std::vector<int> row;
  std::vector<int> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  /// <this, X> for symmetric X.
  double dot(const Eigen::MatrixXd& x) const;
  /// out += scale * this (dense, symmetric fill).
  void add_to(Eigen::MatrixXd& out, double scale) const;
};

/// Constraint matrices restricted to one psd block.
struct PsdBlockRows {
  int dim = 0;
  std::vector<int> row_ids;     // global constraint index of each matrix
  std::vector<SparseSym> mats;
};

void schur_psd_serial(const PsdBlockRows& block, const Eigen::MatrixXd& w, Eigen::MatrixXd& schur);
void schur_psd_parallel(const PsdBlockRows& block, const Eigen::MatrixXd& w, Eigen::MatrixXd& schur);

}  // namespace pepforge::sdp
