// Infeasible primal-dual path-following method with Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps.
//
// Internally the program is solved in minimization form
//   min <c, x>  s.t.  A x = b,  x in K,      max b^T y  s.t.  A^T y + s = c,  s in K*
// with c = -C. Free variables have s = 0, which turns the Newton system into
// the saddle-point form
//   [ M    A_f ] [dy ]   [ r1 ]
//   [ A_f' 0   ] [dxf] = [ r2 ]
// where M = sum over cone blocks of A_k W A_l W.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>

#include <Eigen/Sparse>

#include "pepforge/schur.hpp"
#include "pepforge/sdp.hpp"

namespace pepforge::sdp {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::primal_infeasible: return "primal-infeasible";
    case Status::dual_infeasible: return "dual-infeasible";
    case Status::max_iter: return "max-iter";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "?";
}

double SdpSolution::relative_gap() const { return gap / (1.0 + std::abs(primal_objective)); }

namespace {

std::mutex observer_mutex;
std::function<void(const SdpSolution&)> observer;

void notify(const SdpSolution& sol) {
  std::lock_guard<std::mutex> lock(observer_mutex);
  if (observer) observer(sol);
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kInfStep = std::numeric_limits<double>::infinity();

struct PsdData {
  int block;
  PsdBlockRows rows;
  Matrix c;  // minimization cost, symmetric
};

struct LinearBlock {
  int block;
  int offset;
  int size;
};

struct Data {
  int m = 0;
  std::vector<PsdData> psd;
  std::vector<LinearBlock> nonneg_blocks, free_blocks;
  int n_lin = 0, n_free = 0;
  Eigen::SparseMatrix<double> a_lin;  // m x n_lin
  Matrix a_free;                      // m x n_free
  Matrix free_basis;                  // free x = free_basis * u when A_free is rank deficient; empty otherwise
  Vector c_lin, c_free, b;
  double c0 = 0.0;
  double norm_b = 0.0, norm_c = 0.0;
  int nu = 0;  // barrier parameter: sum of psd dims + nonneg count
};

Data prepare(const StandardSdp& s) {
  Data d;
  d.m = s.row_count();
  d.b = Eigen::Map<const Vector>(s.rhs.data(), static_cast<Eigen::Index>(s.rhs.size()));
  d.c0 = s.objective_constant;

  std::vector<int> psd_index(s.blocks.size(), -1), lin_offset(s.blocks.size(), -1), free_offset(s.blocks.size(), -1);
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    const Block& blk = s.blocks[k];
    switch (blk.kind) {
      case BlockKind::psd:
        psd_index[k] = static_cast<int>(d.psd.size());
        d.psd.push_back({static_cast<int>(k), PsdBlockRows{blk.size, {}, {}}, Matrix::Zero(blk.size, blk.size)});
        d.nu += blk.size;
        break;
      case BlockKind::nonneg:
        lin_offset[k] = d.n_lin;
        d.nonneg_blocks.push_back({static_cast<int>(k), d.n_lin, blk.size});
        d.n_lin += blk.size;
        d.nu += blk.size;
        break;
      case BlockKind::free:
        free_offset[k] = d.n_free;
        d.free_blocks.push_back({static_cast<int>(k), d.n_free, blk.size});
        d.n_free += blk.size;
        break;
    }
  }

  d.c_lin = Vector::Zero(d.n_lin);
  d.c_free = Vector::Zero(d.n_free);
  for (const Entry& e : s.objective.entries) {
    const auto blk = static_cast<std::size_t>(e.block);
    const double v = -e.value;
    if (psd_index[blk] >= 0) {
      Matrix& c = d.psd[static_cast<std::size_t>(psd_index[blk])].c;
      if (e.row == e.col) {
        c(e.row, e.col) += v;
      } else {
        c(e.row, e.col) += 0.5 * v;
        c(e.col, e.row) += 0.5 * v;
      }
    } else if (lin_offset[blk] >= 0) {
      d.c_lin(lin_offset[blk] + e.row) += v;
    } else {
      d.c_free(free_offset[blk] + e.row) += v;
    }
  }

  std::vector<Eigen::Triplet<double>> lin_triplets;
  d.a_free = Matrix::Zero(d.m, d.n_free);
  for (int k = 0; k < d.m; ++k) {
    std::vector<int> touched;
    for (const Entry& e : s.rows[static_cast<std::size_t>(k)].entries) {
      const auto blk = static_cast<std::size_t>(e.block);
      if (psd_index[blk] >= 0) {
        PsdBlockRows& rows = d.psd[static_cast<std::size_t>(psd_index[blk])].rows;
        if (rows.row_ids.empty() || rows.row_ids.back() != k) {
          rows.row_ids.push_back(k);
          rows.mats.emplace_back();
        }
        SparseSym& a = rows.mats.back();
        a.row.push_back(e.row);
        a.col.push_back(e.col);
        a.val.push_back(e.row == e.col ? e.value : 0.5 * e.value);
      } else if (lin_offset[blk] >= 0) {
        lin_triplets.emplace_back(k, lin_offset[blk] + e.row, e.value);
      } else {
        d.a_free(k, free_offset[blk] + e.row) += e.value;
      }
    }
  }
  d.a_lin.resize(d.m, d.n_lin);
  d.a_lin.setFromTriplets(lin_triplets.begin(), lin_triplets.end());
  d.a_lin.makeCompressed();

  // Free variables along null(A_free) never enter the constraints (function
  // values are defined up to a common shift, for instance) and would drift
  // without bound; restrict them to the row space instead.
  if (d.n_free > 0) {
    Eigen::JacobiSVD<Matrix> svd(d.a_free, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cut = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    if (rank < d.n_free) {
      const Matrix basis = svd.matrixV().leftCols(rank);
      const Vector cf = basis.transpose() * d.c_free;
      // A cost along the null space makes the problem unbounded; leave it to the iteration to detect.
      if ((d.c_free - basis * cf).norm() <= 1e-12 * (1.0 + d.c_free.norm())) {
        d.free_basis = basis;
        d.a_free = d.a_free * basis;
        d.c_free = cf;
        d.n_free = rank;
      }
    }
  }

  double c_sq = d.c_lin.squaredNorm() + d.c_free.squaredNorm();
  for (const auto& p : d.psd) c_sq += p.c.squaredNorm();
  d.norm_c = std::sqrt(c_sq);
  d.norm_b = d.b.norm();
  return d;
}

// Primal or dual iterate over all blocks.
struct Point {
  std::vector<Matrix> psd;
  Vector lin;
  Vector free;  // primal only

  double dot(const Point& o) const {
    double acc = lin.dot(o.lin);
    for (std::size_t k = 0; k < psd.size(); ++k) acc += (psd[k].array() * o.psd[k].array()).sum();
    return acc;
  }
};

Vector apply_a(const Data& d, const Point& x) {
  Vector out = Vector::Zero(d.m);
  for (std::size_t k = 0; k < d.psd.size(); ++k) {
    const PsdBlockRows& rows = d.psd[k].rows;
    for (std::size_t t = 0; t < rows.mats.size(); ++t) out(rows.row_ids[t]) += rows.mats[t].dot(x.psd[k]);
  }
  if (d.n_lin > 0) out += d.a_lin * x.lin;
  if (d.n_free > 0) out += d.a_free * x.free;
  return out;
}

// Cone part of A^T y (free part returned separately).
Point apply_at(const Data& d, const Vector& y) {
  Point out;
  for (const auto& p : d.psd) {
    Matrix m = Matrix::Zero(p.rows.dim, p.rows.dim);
    for (std::size_t t = 0; t < p.rows.mats.size(); ++t) p.rows.mats[t].add_to(m, y(p.rows.row_ids[t]));
    out.psd.push_back(std::move(m));
  }
  out.lin = d.n_lin > 0 ? Vector(d.a_lin.transpose() * y) : Vector();
  out.free = d.n_free > 0 ? Vector(d.a_free.transpose() * y) : Vector();
  return out;
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest step t with X + t dX psd (X positive definite).
double max_step_psd(const Matrix& x, const Matrix& dx) {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix z = llt.matrixL().solve(dx);
  z = llt.matrixL().solve(z.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(z), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : kInfStep;
}

double max_step_lin(const Vector& x, const Vector& dx) {
  double t = kInfStep;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) t = std::min(t, -x(i) / dx(i));
  return t;
}

double max_step(const Point& x, const Point& dx) {
  double t = max_step_lin(x.lin, dx.lin);
  for (std::size_t k = 0; k < x.psd.size(); ++k) t = std::min(t, max_step_psd(x.psd[k], dx.psd[k]));
  return t;
}

// Nesterov-Todd scaling of one psd block: W = G G^T, G^T S G = G^-1 X G^-T = diag(d).
struct NtScaling {
  Matrix g, g_inv, w;
  Vector d;
};

bool nt_scaling(const Matrix& x, const Matrix& s, NtScaling& out) {
  Eigen::LLT<Matrix> lx(x), ls(s);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const Matrix lxm = lx.matrixL();
  const Matrix lsm = ls.matrixL();
  Eigen::BDCSVD<Matrix> svd(lsm.transpose() * lxm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.minCoeff() <= 0.0 || !sv.allFinite()) return false;
  const Matrix& v = svd.matrixV();
  const Vector inv_sqrt = sv.array().rsqrt();
  const Vector sqrt_sv = sv.array().sqrt();
  out.d = sv;
  out.g = lxm * v * inv_sqrt.asDiagonal();
  // G^-1 = D^{1/2} V^T L^-1
  Matrix vt_linv = lx.matrixL().transpose().solve(v).transpose();
  out.g_inv = sqrt_sv.asDiagonal() * vt_linv;
  out.w = out.g * out.g.transpose();
  out.w = sym(out.w);
  return true;
}

struct Scaling {
  std::vector<NtScaling> psd;
  Vector lin_w, lin_g, lin_d;  // x/s, sqrt(x/s), sqrt(x s)
};

class NewtonSystem {
 public:
  NewtonSystem(const Data& d, const Scaling& sc, SchurKernel kernel) : d_(d), sc_(sc) {
    const int m = d.m, nf = d.n_free;
    Matrix k = Matrix::Zero(m + nf, m + nf);
    Matrix schur = Matrix::Zero(m, m);
    for (std::size_t b = 0; b < d.psd.size(); ++b) {
      if (kernel == SchurKernel::parallel)
        schur_psd_parallel(d.psd[b].rows, sc.psd[b].w, schur);
      else
        schur_psd_serial(d.psd[b].rows, sc.psd[b].w, schur);
    }
    if (d.n_lin > 0) {
      Eigen::SparseMatrix<double> scaled = d.a_lin * sc.lin_w.asDiagonal();
      Eigen::SparseMatrix<double> prod = scaled * d.a_lin.transpose();
      schur += Matrix(prod);
    }
    schur = sym(schur);
    k.topLeftCorner(m, m) = schur;
    if (nf > 0) {
      k.topRightCorner(m, nf) = d.a_free;
      k.bottomLeftCorner(nf, m) = d.a_free.transpose();
    }
    k_ = k;
    // Symmetric Ruiz equilibration; the Schur part spans many orders of
    // magnitude once the iterates approach the boundary.
    scale_ = Vector::Ones(m + nf);
    for (int pass = 0; pass < 8; ++pass) {
      Vector r = k.cwiseAbs().rowwise().maxCoeff();
      for (int i = 0; i < m + nf; ++i) r(i) = r(i) > 0.0 ? 1.0 / std::sqrt(r(i)) : 1.0;
      k = r.asDiagonal() * k * r.asDiagonal();
      scale_ = scale_.cwiseProduct(r);
    }
    keq_ = std::move(k);
  }

  // Solves for (dx, dy, ds) given the complementarity right-hand side rc of
  // dX + W dS W = rc, residuals rp = b - Ax, rd = c - A^T y - s. Recovering dX
  // through W loses accuracy when W is badly conditioned, so the full system
  // gets a few rounds of iterative refinement.
  //
  // Degenerate programs make the system nearly singular at the end; the
  // factorization is regularized and the regularization raised only when the
  // refined residual stays large.
  void solve(const Point& rc, const Vector& rp, const Point& rd, const Vector& rd_free, Point& dx, Vector& dy,
             Point& ds) const {
    const double rhs = std::sqrt(rp.squaredNorm() + rd.dot(rd) + rd_free.squaredNorm() + rc.dot(rc));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t level = 0; level < kRegularization.size(); ++level) {
      Point tx, ts;
      Vector ty;
      const double err = solve_refined(level, rc, rp, rd, rd_free, tx, ty, ts);
      if (err < best) {
        best = err;
        dx = std::move(tx);
        dy = std::move(ty);
        ds = std::move(ts);
      }
      if (best <= 1e-10 * rhs) break;
    }
  }

 private:
  static constexpr std::array<double, 3> kRegularization{1e-12, 1e-10, 1e-8};

  const Eigen::PartialPivLU<Matrix>& factor(std::size_t level) const {
    if (lus_.size() <= level) lus_.resize(level + 1);
    if (!lus_[level]) {
      const int m = d_.m;
      Matrix k = keq_;
      const double reg = kRegularization[level];
      for (int i = 0; i < m; ++i) k(i, i) += reg;
      for (Eigen::Index i = m; i < k.rows(); ++i) k(i, i) -= reg;
      lus_[level].emplace(k);
    }
    return *lus_[level];
  }

  double solve_refined(std::size_t level, const Point& rc, const Vector& rp, const Point& rd, const Vector& rd_free,
                       Point& dx, Vector& dy, Point& ds) const {
    solve_once(level, rc, rp, rd, rd_free, dx, dy, ds);
    double err = residual(rc, rp, rd, rd_free, dx, dy, ds, nullptr);
    for (int round = 0; round < 3 && err > 0.0; ++round) {
      Residual r;
      residual(rc, rp, rd, rd_free, dx, dy, ds, &r);
      Point cx, cs;
      Vector cy;
      solve_once(level, r.rc, r.rp, r.rd, r.rd_free, cx, cy, cs);
      Point nx = dx, ns = ds;
      for (std::size_t b = 0; b < nx.psd.size(); ++b) {
        nx.psd[b] += cx.psd[b];
        ns.psd[b] += cs.psd[b];
      }
      nx.lin += cx.lin;
      ns.lin += cs.lin;
      nx.free += cx.free;
      const Vector ny = dy + cy;
      const double next = residual(rc, rp, rd, rd_free, nx, ny, ns, nullptr);
      if (!(next < 0.5 * err)) break;
      dx = std::move(nx);
      ds = std::move(ns);
      dy = ny;
      err = next;
    }
    return err;
  }
  struct Residual {
    Point rc, rd;
    Vector rp, rd_free;
  };

  double residual(const Point& rc, const Vector& rp, const Point& rd, const Vector& rd_free, const Point& dx,
                  const Vector& dy, const Point& ds, Residual* out) const {
    Residual r;
    r.rp = rp - apply_a(d_, dx);
    const Point at = apply_at(d_, dy);
    for (std::size_t b = 0; b < d_.psd.size(); ++b) {
      const Matrix& w = sc_.psd[b].w;
      r.rd.psd.push_back(rd.psd[b] - at.psd[b] - ds.psd[b]);
      r.rc.psd.push_back(sym(rc.psd[b] - dx.psd[b] - w * ds.psd[b] * w));
    }
    r.rd.lin = rd.lin - at.lin - ds.lin;
    r.rc.lin = rc.lin - dx.lin - sc_.lin_w.cwiseProduct(ds.lin);
    r.rd_free = rd_free - at.free;
    const double norm = std::sqrt(r.rp.squaredNorm() + r.rd.dot(r.rd) + r.rd_free.squaredNorm() + r.rc.dot(r.rc));
    if (out) *out = std::move(r);
    return std::isfinite(norm) ? norm : 0.0;
  }

  void solve_once(std::size_t level, const Point& rc, const Vector& rp, const Point& rd, const Vector& rd_free, Point& dx, Vector& dy,
                  Point& ds) const {
    const int m = d_.m, nf = d_.n_free;
    // r1 = rp - A(rc - W rd W)
    Point tmp;
    for (std::size_t b = 0; b < d_.psd.size(); ++b) {
      const Matrix& w = sc_.psd[b].w;
      tmp.psd.push_back(rc.psd[b] - w * rd.psd[b] * w);
    }
    tmp.lin = rc.lin - sc_.lin_w.cwiseProduct(rd.lin);
    tmp.free = Vector::Zero(nf);
    Vector rhs(m + nf);
    rhs.head(m) = rp - apply_a(d_, tmp);
    rhs.tail(nf) = rd_free;

    const auto& lu = factor(level);
    Vector sol = scale_.cwiseProduct(lu.solve(scale_.cwiseProduct(rhs)));
    for (int refine = 0; refine < 2; ++refine) {
      const Vector res = rhs - k_ * sol;
      if (!res.allFinite()) break;
      sol += scale_.cwiseProduct(lu.solve(scale_.cwiseProduct(res)));
    }
    dy = sol.head(m);

    const Point at = apply_at(d_, dy);
    ds.psd.clear();
    dx.psd.clear();
    for (std::size_t b = 0; b < d_.psd.size(); ++b) {
      ds.psd.push_back(rd.psd[b] - at.psd[b]);
      const Matrix& w = sc_.psd[b].w;
      dx.psd.push_back(sym(rc.psd[b] - w * ds.psd[b] * w));
    }
    ds.lin = rd.lin - at.lin;
    dx.lin = rc.lin - sc_.lin_w.cwiseProduct(ds.lin);
    dx.free = sol.tail(nf);
  }

  const Data& d_;
  const Scaling& sc_;
  Matrix k_, keq_;
  Vector scale_;
  mutable std::vector<std::optional<Eigen::PartialPivLU<Matrix>>> lus_;
};

struct Measures {
  double pobj, dobj, gap, pinf, dinf, value;
  double worst(const SolveOptions& o) const {
    return std::max({gap / (1.0 + std::abs(value)) / o.gap_tol, pinf / o.feas_tol, dinf / o.feas_tol});
  }
};

}  // namespace

void set_solve_observer(std::function<void(const SdpSolution&)> obs) {
  std::lock_guard<std::mutex> lock(observer_mutex);
  observer = std::move(obs);
}

// Fraction of the distance to the boundary taken per step: base + slope * min(affine step lengths).
struct StepRule {
  double base, slope;
};

SdpSolution solve_with(const StandardSdp& s, const Data& d, const SolveOptions& opts, StepRule rule) {
  const int m = d.m;

  // Starting point: scaled identities, sized from the problem norms.
  double max_row_norm = 0.0, max_ratio = 0.0;
  {
    std::vector<double> row_sq(static_cast<std::size_t>(m), 0.0);
    for (const auto& p : d.psd)
      for (std::size_t t = 0; t < p.rows.mats.size(); ++t)
        for (std::size_t e = 0; e < p.rows.mats[t].nnz(); ++e) {
          const double v = p.rows.mats[t].val[e];
          row_sq[static_cast<std::size_t>(p.rows.row_ids[t])] +=
              (p.rows.mats[t].row[e] == p.rows.mats[t].col[e] ? 1.0 : 2.0) * v * v;
        }
    for (int k = 0; k < d.a_lin.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(d.a_lin, k); it; ++it)
        row_sq[static_cast<std::size_t>(it.row())] += it.value() * it.value();
    for (int k = 0; k < m; ++k) {
      const double rn = std::sqrt(row_sq[static_cast<std::size_t>(k)]);
      max_row_norm = std::max(max_row_norm, rn);
      max_ratio = std::max(max_ratio, (1.0 + std::abs(d.b(k))) / (1.0 + rn));
    }
  }

  Point x, z;
  Vector y = Vector::Zero(m);
  for (const auto& p : d.psd) {
    const double n = p.rows.dim;
    const double xi = std::max({10.0, std::sqrt(n), n * max_ratio});
    const double eta = std::max({10.0, std::sqrt(n), max_row_norm, p.c.norm()});
    x.psd.push_back(xi * Matrix::Identity(p.rows.dim, p.rows.dim));
    z.psd.push_back(eta * Matrix::Identity(p.rows.dim, p.rows.dim));
  }
  {
    const double n = std::max(1, d.n_lin);
    const double xi = std::max({10.0, std::sqrt(n), max_ratio});
    const double eta = std::max({10.0, std::sqrt(n), max_row_norm, d.c_lin.size() ? d.c_lin.cwiseAbs().maxCoeff() : 0.0});
    x.lin = Vector::Constant(d.n_lin, xi);
    z.lin = Vector::Constant(d.n_lin, eta);
  }
  x.free = Vector::Zero(d.n_free);

  SdpSolution best;
  double best_score = kInfStep;

  auto package = [&](const Point& px, const Vector& py, const Point& pz, const Measures& ms, Status st, int iters) {
    SdpSolution sol;
    sol.status = st;
    sol.iterations = iters;
    sol.primal.resize(s.blocks.size());
    sol.dual_slack.resize(s.blocks.size());
    for (std::size_t b = 0; b < d.psd.size(); ++b) {
      sol.primal[static_cast<std::size_t>(d.psd[b].block)] = px.psd[b];
      sol.dual_slack[static_cast<std::size_t>(d.psd[b].block)] = pz.psd[b];
    }
    for (const auto& lb : d.nonneg_blocks) {
      sol.primal[static_cast<std::size_t>(lb.block)] = px.lin.segment(lb.offset, lb.size);
      sol.dual_slack[static_cast<std::size_t>(lb.block)] = pz.lin.segment(lb.offset, lb.size);
    }
    const Vector xf = d.free_basis.size() > 0 ? Vector(d.free_basis * px.free) : px.free;
    for (const auto& fb : d.free_blocks) {
      sol.primal[static_cast<std::size_t>(fb.block)] = xf.segment(fb.offset, fb.size);
      sol.dual_slack[static_cast<std::size_t>(fb.block)] = Matrix::Zero(fb.size, 1);
    }
    sol.y = py;
    sol.primal_objective = ms.value;
    sol.dual_objective = -ms.dobj + d.c0;
    sol.gap = ms.gap;
    sol.primal_infeasibility = ms.pinf;
    sol.dual_infeasibility = ms.dinf;
    return sol;
  };

  auto finish = [](SdpSolution sol) { return sol; };

  double gamma = 0.9;
  int stalls = 0;
  auto measure = [&](const Point& px, const Vector& rp, double compl_gap, double dinf) {
    Measures ms;
    ms.pobj = d.c_lin.dot(px.lin) + d.c_free.dot(px.free);
    for (std::size_t b = 0; b < d.psd.size(); ++b) ms.pobj += (d.psd[b].c.array() * px.psd[b].array()).sum();
    ms.dobj = d.b.dot(y);
    ms.gap = std::max(std::abs(ms.pobj - ms.dobj), compl_gap);
    ms.pinf = rp.norm() / (1.0 + d.norm_b);
    ms.dinf = dinf;
    ms.value = -ms.pobj + d.c0;
    return ms;
  };

  for (int iter = 0;; ++iter) {
    // Residuals and measures at the current point.
    const Vector rp = d.b - apply_a(d, x);
    const Point at = apply_at(d, y);
    Point rd;
    for (std::size_t b = 0; b < d.psd.size(); ++b) rd.psd.push_back(d.psd[b].c - at.psd[b] - z.psd[b]);
    rd.lin = d.c_lin - at.lin - z.lin;
    const Vector rd_free = d.c_free - at.free;
    const double dinf = std::sqrt(rd.dot(rd) + rd_free.squaredNorm()) / (1.0 + d.norm_c);

    const double compl_gap = x.dot(z);
    const Measures ms = measure(x, rp, compl_gap, dinf);

    if (!std::isfinite(ms.gap) || !std::isfinite(ms.pinf) || !std::isfinite(ms.dinf)) {
      if (best_score == kInfStep) best = package(x, y, z, ms, Status::numerical_failure, iter);
      best.status = Status::numerical_failure;
      best.iterations = iter;
      return finish(best);
    }

    const double score = ms.worst(opts);
    if (score < best_score) {
      best_score = score;
      best = package(x, y, z, ms, Status::max_iter, iter);
    }
    if (opts.verbose)
      std::fprintf(stderr, "%3d  pobj %+.10e  dobj %+.10e  gap %.2e  pinf %.2e  dinf %.2e  |y| %.2e\n", iter,
                   -ms.pobj + d.c0, -ms.dobj + d.c0, ms.gap, ms.pinf, ms.dinf, y.norm());

    if (score <= 1.0) return finish(package(x, y, z, ms, Status::optimal, iter));

    // Infeasibility certificates along diverging iterates.
    const double ynorm = y.norm();
    if (ms.dobj > 1e8 * (1.0 + d.norm_c) && ynorm > 1e8) {
      // A^T y + s = c - rd, so a small ||c - rd|| relative to b^T y is a Farkas certificate.
      double lhs_sq = (d.c_free - rd_free).squaredNorm() + (d.c_lin - rd.lin).squaredNorm();
      for (std::size_t b = 0; b < d.psd.size(); ++b) lhs_sq += (d.psd[b].c - rd.psd[b]).squaredNorm();
      if (std::sqrt(lhs_sq) <= 1e-6 * ms.dobj) return finish(package(x, y, z, ms, Status::primal_infeasible, iter));
    }
    if (-ms.pobj > 1e8 * (1.0 + d.norm_b)) {
      const Vector ax = d.b - rp;
      if (ax.norm() <= 1e-6 * -ms.pobj) return finish(package(x, y, z, ms, Status::dual_infeasible, iter));
    }

    if (iter >= opts.max_iter) {
      best.iterations = iter;
      best.status = Status::max_iter;
      return finish(best);
    }

    // Scaling.
    Scaling sc;
    bool ok = true;
    for (std::size_t b = 0; b < d.psd.size() && ok; ++b) {
      NtScaling nt;
      ok = nt_scaling(x.psd[b], z.psd[b], nt);
      sc.psd.push_back(std::move(nt));
    }
    if (!ok) {
      best.status = Status::numerical_failure;
      best.iterations = iter;
      return finish(best);
    }
    sc.lin_w = x.lin.cwiseQuotient(z.lin);
    sc.lin_g = sc.lin_w.cwiseSqrt();
    sc.lin_d = x.lin.cwiseProduct(z.lin).cwiseSqrt();

    const NewtonSystem newton(d, sc, opts.kernel);
    const double mu = compl_gap / std::max(1, d.nu);

    // Close to a degenerate optimum the primal residual stalls at the accuracy
    // of the Newton steps. A W-weighted projection back onto A x = b moves X
    // mostly along its large eigendirections and usually keeps it interior.
    if (score <= 100.0) {
      Point rc0, rd0, dxc, dsc;
      for (const auto& xb : x.psd) {
        rc0.psd.push_back(Matrix::Zero(xb.rows(), xb.cols()));
        rd0.psd.push_back(Matrix::Zero(xb.rows(), xb.cols()));
      }
      rc0.lin = Vector::Zero(d.n_lin);
      rd0.lin = Vector::Zero(d.n_lin);
      Vector dyc;
      newton.solve(rc0, rp, rd0, Vector::Zero(d.n_free), dxc, dyc, dsc);
      const double step = std::min(1.0, 0.99 * max_step(x, dxc));
      if (step > 0.0 && std::isfinite(step)) {
        Point xc = x;
        for (std::size_t b = 0; b < xc.psd.size(); ++b) xc.psd[b] = sym(xc.psd[b] + step * dxc.psd[b]);
        xc.lin += step * dxc.lin;
        xc.free += step * dxc.free;
        const Vector rpc = d.b - apply_a(d, xc);
        const Measures mc = measure(xc, rpc, xc.dot(z), dinf);
        if (opts.verbose) std::fprintf(stderr, "   projected: step %.3f gap %.2e pinf %.2e\n", step, mc.gap, mc.pinf);
        if (mc.worst(opts) <= 1.0) return finish(package(xc, y, z, mc, Status::optimal, iter));
      }
    }

    // Predictor: dX + W dS W = -X.
    Point rc;
    for (const auto& xb : x.psd) rc.psd.push_back(-xb);
    rc.lin = -x.lin;
    Point dx, ds;
    Vector dy;
    newton.solve(rc, rp, rd, rd_free, dx, dy, ds);

    const double ap_aff = std::min(1.0, max_step(x, dx));
    const double ad_aff = std::min(1.0, max_step(z, ds));
    double mu_aff = 0.0;
    {
      Point xa = x, za = z;
      for (std::size_t b = 0; b < x.psd.size(); ++b) {
        xa.psd[b] += ap_aff * dx.psd[b];
        za.psd[b] += ad_aff * ds.psd[b];
      }
      xa.lin += ap_aff * dx.lin;
      za.lin += ad_aff * ds.lin;
      mu_aff = xa.dot(za) / std::max(1, d.nu);
    }
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double expon = std::max(1.0, 3.0 * std::min(ap_aff, ad_aff) * std::min(ap_aff, ad_aff));
    const double sigma = std::pow(ratio, expon);
    gamma = rule.base + rule.slope * std::min(ap_aff, ad_aff);

    // Corrector in the scaled space: (dXh + dSh)_ij = 2 R_ij / (d_i + d_j),
    // R = sigma mu I - D^2 - sym(dXh_aff dSh_aff).
    Point rc2;
    for (std::size_t b = 0; b < d.psd.size(); ++b) {
      const NtScaling& nt = sc.psd[b];
      const Matrix dxh = nt.g_inv * dx.psd[b] * nt.g_inv.transpose();
      const Matrix dsh = nt.g.transpose() * ds.psd[b] * nt.g;
      Matrix r = -sym(dxh * dsh);
      const auto n = nt.d.size();
      for (Eigen::Index i = 0; i < n; ++i) r(i, i) += sigma * mu - nt.d(i) * nt.d(i);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) r(i, j) *= 2.0 / (nt.d(i) + nt.d(j));
      rc2.psd.push_back(sym(nt.g * r * nt.g.transpose()));
    }
    {
      const Vector dxh = dx.lin.cwiseQuotient(sc.lin_g);
      const Vector dsh = ds.lin.cwiseProduct(sc.lin_g);
      const Vector h = (Vector::Constant(d.n_lin, sigma * mu) - sc.lin_d.cwiseProduct(sc.lin_d) -
                        dxh.cwiseProduct(dsh))
                           .cwiseQuotient(sc.lin_d);
      rc2.lin = sc.lin_g.cwiseProduct(h);
    }
    newton.solve(rc2, rp, rd, rd_free, dx, dy, ds);

    const double ap = std::min(1.0, gamma * max_step(x, dx));
    const double ad = std::min(1.0, gamma * max_step(z, ds));
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      best.status = Status::numerical_failure;
      best.iterations = iter;
      return finish(best);
    }
    if (std::max(ap, ad) < 1e-8) {
      if (++stalls >= 3) {
        best.status = Status::numerical_failure;
        best.iterations = iter;
        return finish(best);
      }
    } else {
      stalls = 0;
    }

    for (std::size_t b = 0; b < x.psd.size(); ++b) {
      x.psd[b] = sym(x.psd[b] + ap * dx.psd[b]);
      z.psd[b] = sym(z.psd[b] + ad * ds.psd[b]);
    }
    x.lin += ap * dx.lin;
    z.lin += ad * ds.lin;
    x.free += ap * dx.free;
    y += ad * dy;
  }
}

SdpSolution solve(const StandardSdp& s, const SolveOptions& opts) {
  s.validate();
  const Data d = prepare(s);
  // Degenerate programs stall at the accuracy limit of the Newton steps, and
  // whether the tolerance is reached first depends on the step rule. The
  // cautious rules only run when the aggressive one fails.
  constexpr std::array<StepRule, 3> rules{{{0.9, 0.09}, {0.9, 0.0}, {0.9, 0.05}}};
  auto settled = [](const SdpSolution& r) {
    return r.status != Status::max_iter && r.status != Status::numerical_failure;
  };
  SdpSolution sol = solve_with(s, d, opts, rules[0]);
  for (std::size_t r = 1; r < rules.size() && !settled(sol); ++r) {
    SdpSolution attempt = solve_with(s, d, opts, rules[r]);
    if (settled(attempt)) sol = std::move(attempt);
  }
  notify(sol);
  return sol;
}

}  // namespace pepforge::sdp
