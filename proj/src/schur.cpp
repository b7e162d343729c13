#include "pepforge/schur.hpp"

#include <algorithm>

#include <omp.h>

namespace pepforge::sdp {

double SparseSym::dot(const Eigen::MatrixXd& x) const {
  double acc = 0.0;
  for (std::size_t t = 0; t < val.size(); ++t) {
    const int i = row[t], j = col[t];
    acc += (i == j) ? val[t] * x(i, j) : val[t] * (x(i, j) + x(j, i));
  }
  return acc;
}

void SparseSym::add_to(Eigen::MatrixXd& out, double scale) const {
  for (std::size_t t = 0; t < val.size(); ++t) {
    const int i = row[t], j = col[t];
    out(i, j) += scale * val[t];
    if (i != j) out(j, i) += scale * val[t];
  }
}

namespace {

struct Workspace {
  std::vector<int> support;
  std::vector<int> position;
  Eigen::MatrixXd t;  // rows of A_l W on the support of A_l
  Eigen::MatrixXd b;  // W A_l W
};

// Column l of the block's Schur contribution: out(k) = <A_k, W A_l W>.
void schur_column(const PsdBlockRows& block, const Eigen::MatrixXd& w, std::size_t l, Workspace& ws,
                  Eigen::VectorXd& out) {
  const SparseSym& a = block.mats[l];
  const int n = block.dim;

  ws.support.clear();
  ws.position.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t t = 0; t < a.nnz(); ++t) {
    for (int idx : {a.row[t], a.col[t]}) {
      if (ws.position[static_cast<std::size_t>(idx)] < 0) {
        ws.position[static_cast<std::size_t>(idx)] = static_cast<int>(ws.support.size());
        ws.support.push_back(idx);
      }
    }
  }
  const auto r = static_cast<Eigen::Index>(ws.support.size());
  ws.t.setZero(r, n);
  for (std::size_t t = 0; t < a.nnz(); ++t) {
    const int i = a.row[t], j = a.col[t];
    ws.t.row(ws.position[static_cast<std::size_t>(i)]) += a.val[t] * w.row(j);
    if (i != j) ws.t.row(ws.position[static_cast<std::size_t>(j)]) += a.val[t] * w.row(i);
  }
  Eigen::MatrixXd wcols(n, r);
  for (Eigen::Index c = 0; c < r; ++c) wcols.col(c) = w.col(ws.support[static_cast<std::size_t>(c)]);
  ws.b.noalias() = wcols * ws.t;

  out.resize(static_cast<Eigen::Index>(block.mats.size()));
  for (std::size_t k = 0; k < block.mats.size(); ++k) out(static_cast<Eigen::Index>(k)) = block.mats[k].dot(ws.b);
}

void scatter(const PsdBlockRows& block, std::size_t l, const Eigen::VectorXd& column, Eigen::MatrixXd& schur) {
  const int gl = block.row_ids[l];
  for (std::size_t k = 0; k < block.row_ids.size(); ++k) schur(block.row_ids[k], gl) += column(static_cast<Eigen::Index>(k));
}

}  // namespace

void schur_psd_serial(const PsdBlockRows& block, const Eigen::MatrixXd& w, Eigen::MatrixXd& schur) {
  Workspace ws;
  Eigen::VectorXd column;
  for (std::size_t l = 0; l < block.mats.size(); ++l) {
    schur_column(block, w, l, ws, column);
    scatter(block, l, column, schur);
  }
}

void schur_psd_parallel(const PsdBlockRows& block, const Eigen::MatrixXd& w, Eigen::MatrixXd& schur) {
  const auto count = static_cast<long>(block.mats.size());
  // Distinct l write distinct columns of schur (row_ids are unique), so the
  // scatter needs no synchronization.
#pragma omp parallel
  {
    Workspace ws;
    Eigen::VectorXd column;
#pragma omp for schedule(dynamic, 8)
    for (long l = 0; l < count; ++l) {
      schur_column(block, w, static_cast<std::size_t>(l), ws, column);
      scatter(block, static_cast<std::size_t>(l), column, schur);
    }
  }
}

}  // namespace pepforge::sdp
