#include "pepforge/algos.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pepforge {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::last_iterate_gap: return "last-iterate-gap";
    case Criterion::min_iterate_gap: return "min-iterate-gap";
    case Criterion::gradient_norm_sq: return "gradient-norm-sq";
  }
  return "?";
}

std::string to_string(Representation r) { return r == Representation::tight ? "tight" : "relaxed"; }

Criterion criterion_from_string(const std::string& s) {
  for (Criterion c : {Criterion::last_iterate_gap, Criterion::min_iterate_gap, Criterion::gradient_norm_sq})
    if (to_string(c) == s) return c;
  throw ModelError("unknown criterion '" + s + "'");
}

Representation representation_from_string(const std::string& s) {
  if (s == "tight") return Representation::tight;
  if (s == "relaxed") return Representation::relaxed;
  throw ModelError("unknown representation '" + s + "' (expected tight or relaxed)");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string idx(const std::string& base, int i) { return base + std::to_string(i); }

}  // namespace

// ------------------------------------------------------------------ gradient

MethodSpec MethodSpec::with_h(int N, double h, double L, double R) {
  MethodSpec s;
  s.N = N;
  s.steps = {h / L};
  s.family = ClassSpec::smooth_convex(L);
  s.R = R;
  return s;
}

double MethodSpec::step(int i) const { return steps.size() == 1 ? steps[0] : steps.at(static_cast<std::size_t>(i)); }

void MethodSpec::validate() const {
  if (N < 0) throw ModelError("iteration count must be nonnegative");
  if (!(R > 0.0) || !std::isfinite(R)) throw ModelError("initial radius must be positive");
  if (steps.size() != 1 && steps.size() != static_cast<std::size_t>(N))
    throw ModelError("expected 1 or N = " + std::to_string(N) + " step sizes, got " + std::to_string(steps.size()));
  for (double a : steps)
    if (!std::isfinite(a)) throw ModelError("step sizes must be finite");
  family.validate();
}

PepProblem build_gradient_method(const MethodSpec& spec, Representation rep) {
  spec.validate();
  if (!spec.family.is_function_family())
    throw ModelError("gradient method needs a function family, got " + spec.family.describe());

  ClassSpec used = spec.family;
  if (rep == Representation::relaxed) {
    const bool smooth_convex = spec.family.family == Family::smooth_strongly_convex && spec.family.mu == 0.0 &&
                               std::isfinite(spec.family.L);
    if (!smooth_convex && spec.family.family != Family::relaxed_smooth_convex)
      throw ModelError("relaxed representation is defined for smooth convex functions only");
    used = ClassSpec::relaxed_smooth_convex(spec.family.L);
  }

  ProblemBuilder b;
  const VectorExpr x0 = b.add_vector(BasisKind::iterate_seed, "x0");
  std::vector<VectorExpr> g;
  for (int i = 0; i <= spec.N; ++i) g.push_back(b.add_vector(BasisKind::gradient, idx("g", i)));
  std::vector<ScalarVar> f;
  for (int i = 0; i <= spec.N; ++i) f.push_back(b.add_scalar(idx("f", i)));
  const ScalarVar fstar = b.add_scalar("f*");

  FunctionDataHandle h;
  VectorExpr x = x0;
  for (int i = 0; i <= spec.N; ++i) {
    h.points.push_back({x, g[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)], idx("x", i)});
    if (i < spec.N) x = x - spec.step(i) * g[static_cast<std::size_t>(i)];
  }
  h.points.push_back({VectorExpr::zero(), VectorExpr::zero(), fstar, "x*"});

  PepProblem out;
  out.records.push_back({"f", used, h, used.exact()});
  b.add_constraints(generate(out.records.back()));
  b.add_constraint(Constraint::le0(norm_sq(x0) - spec.R * spec.R, "initial"));

  switch (spec.criterion) {
    case Criterion::last_iterate_gap:
      b.set_objective(QuadExpr(f.back()) - QuadExpr(fstar));
      break;
    case Criterion::gradient_norm_sq:
      b.set_objective(norm_sq(g.back()));
      break;
    case Criterion::min_iterate_gap: {
      const ScalarVar t = b.add_scalar("t");
      for (int i = 0; i <= spec.N; ++i)
        b.add_constraint(Constraint::le0(QuadExpr(t) - QuadExpr(f[static_cast<std::size_t>(i)]) + QuadExpr(fstar),
                                         idx("criterion:min", i)));
      b.set_objective(QuadExpr(t));
      break;
    }
  }
  out.problem = b.build();
  out.metadata = {{"method", "gradient"},
                  {"N", std::to_string(spec.N)},
                  {"family", spec.family.describe()},
                  {"representation", to_string(rep)},
                  {"criterion", to_string(spec.criterion)},
                  {"R", fmt(spec.R)}};
  return out;
}

double classical_bound(int N, double h, double L, double R) {
  if (!(h > 0.0 && h <= 2.0)) throw std::invalid_argument("normalized step h must lie in (0, 2], got " + fmt(h));
  if (N < 0) throw std::invalid_argument("iteration count must be nonnegative");
  return 2.0 * L * R * R / (4.0 + N * h * (2.0 - h));
}

// ----------------------------------------------------------------------- DGD

void DgdSpec::validate() const {
  if (N < 0) throw ModelError("iteration count must be nonnegative");
  if (agents < 2) throw ModelError("DGD needs at least two agents");
  if (!(lam >= 0.0 && lam < 1.0)) throw ModelError("spectral bound lambda must lie in [0, 1), got " + fmt(lam));
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ModelError("DGD step size must be positive");
  if (!(R > 0.0)) throw ModelError("initial radius must be positive");
  if (!local.is_function_family()) throw ModelError("local functions need a function family");
  local.validate();
}

namespace {

// Shared DGD skeleton; without W the consensus outputs are fresh labels.
PepProblem build_dgd(const DgdSpec& spec, const Eigen::MatrixXd* W) {
  spec.validate();
  const int A = spec.agents;
  ProblemBuilder b;

  std::vector<VectorExpr> x(static_cast<std::size_t>(A));
  if (spec.init == DgdInit::common) {
    const VectorExpr x0 = b.add_vector(BasisKind::iterate_seed, "x0");
    for (auto& xa : x) xa = x0;
  } else {
    for (int a = 0; a < A; ++a) x[static_cast<std::size_t>(a)] = b.add_vector(BasisKind::iterate_seed, "x" + std::to_string(a) + ",0");
  }
  std::vector<VectorExpr> seeds = x;

  std::vector<FunctionDataHandle> local(static_cast<std::size_t>(A));
  ConsensusDataHandle consensus;
  consensus.agents = A;
  consensus.lam = spec.lam;

  for (int i = 0; i < spec.N; ++i) {
    std::vector<VectorExpr> g(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a) {
      const std::string ai = std::to_string(a) + "," + std::to_string(i);
      g[static_cast<std::size_t>(a)] = b.add_vector(BasisKind::gradient, "g" + ai);
      local[static_cast<std::size_t>(a)].points.push_back(
          {x[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(a)], b.add_scalar("f" + ai), "x" + ai});
    }
    std::vector<VectorExpr> y(static_cast<std::size_t>(A));
    if (!W && spec.lam == 0.0) {
      // W_0 = {J / A}. The variance LMI would pin the centered outputs to
      // zero, leaving the SDP without an interior, so substitute directly.
      VectorExpr mean;
      for (const auto& xa : x) mean += (1.0 / A) * xa;
      for (auto& ya : y) ya = mean;
    } else if (W) {
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < A; ++c) y[static_cast<std::size_t>(a)] += (*W)(a, c) * x[static_cast<std::size_t>(c)];
    } else {
      // The last output is eliminated through average preservation, which the
      // spectral class would otherwise impose as equalities.
      VectorExpr rest;
      for (int a = 0; a < A; ++a) rest += x[static_cast<std::size_t>(a)];
      for (int a = 0; a + 1 < A; ++a) {
        y[static_cast<std::size_t>(a)] =
            b.add_vector(BasisKind::auxiliary, "y" + std::to_string(a) + "," + std::to_string(i));
        rest -= y[static_cast<std::size_t>(a)];
      }
      y[static_cast<std::size_t>(A - 1)] = rest;
      consensus.steps.push_back({x, y});
    }
    for (int a = 0; a < A; ++a)
      x[static_cast<std::size_t>(a)] = y[static_cast<std::size_t>(a)] - spec.alpha * g[static_cast<std::size_t>(a)];
  }

  // Every local function is queried at the agent average of the last iterates.
  VectorExpr xbar;
  for (const auto& xa : x) xbar += (1.0 / A) * xa;
  std::vector<ScalarVar> fbar(static_cast<std::size_t>(A));
  for (int a = 0; a < A; ++a) {
    const std::string an = std::to_string(a) + ",N";
    const VectorExpr g = b.add_vector(BasisKind::gradient, "g" + an);
    fbar[static_cast<std::size_t>(a)] = b.add_scalar("f" + an);
    local[static_cast<std::size_t>(a)].points.push_back({xbar, g, fbar[static_cast<std::size_t>(a)], "xbar"});
  }

  // Stationarity of the average function at x* = 0: sum_a g_{a,*} = 0.
  std::vector<ScalarVar> fstar(static_cast<std::size_t>(A));
  VectorExpr last;
  for (int a = 0; a < A; ++a) {
    VectorExpr gs;
    if (a + 1 < A) {
      gs = b.add_vector(BasisKind::gradient, "g" + std::to_string(a) + ",*");
      last -= gs;
    } else {
      gs = last;
    }
    fstar[static_cast<std::size_t>(a)] = b.add_scalar("f" + std::to_string(a) + ",*");
    local[static_cast<std::size_t>(a)].points.push_back({VectorExpr::zero(), gs, fstar[static_cast<std::size_t>(a)], "x*"});
  }

  PepProblem out;
  for (int a = 0; a < A; ++a)
    out.records.push_back({"f" + std::to_string(a), spec.local, local[static_cast<std::size_t>(a)], spec.local.exact()});
  if (!W && !consensus.steps.empty()) {
    ClassSpec net;
    net.family = Family::network_matrix;
    out.records.push_back({"consensus", net, consensus, true});
  }
  for (const auto& r : out.records) b.add_constraints(generate(r));

  if (spec.init == DgdInit::common) {
    b.add_constraint(Constraint::le0(norm_sq(seeds[0]) - spec.R * spec.R, "initial"));
  } else {
    for (int a = 0; a < A; ++a)
      b.add_constraint(
          Constraint::le0(norm_sq(seeds[static_cast<std::size_t>(a)]) - spec.R * spec.R, "initial" + std::to_string(a)));
  }

  QuadExpr obj;
  for (int a = 0; a < A; ++a)
    obj += (1.0 / A) * (QuadExpr(fbar[static_cast<std::size_t>(a)]) - QuadExpr(fstar[static_cast<std::size_t>(a)]));
  b.set_objective(obj);
  out.problem = b.build();

  out.metadata = {{"method", W ? "dgd-fixed-matrix" : "dgd-spectral"},
                  {"N", std::to_string(spec.N)},
                  {"agents", std::to_string(A)},
                  {"alpha", fmt(spec.alpha)},
                  {"lambda", fmt(spec.lam)},
                  {"local_family", spec.local.describe()},
                  {"criterion", "average-function-gap-at-agent-mean"},
                  {"init", spec.init == DgdInit::common ? "common ||x0||^2 <= R^2" : "per-agent ||x_a0||^2 <= R^2"},
                  {"R", fmt(spec.R)}};
  if (!W && spec.lam == 0.0) out.metadata["network"] = "exact averaging (lambda = 0)";
  return out;
}

}  // namespace

Eigen::MatrixXd ones_basis(int A) {
  // QR of [1 | I] puts +-1/sqrt(A) in the first column.
  Eigen::MatrixXd m(A, A + 1);
  m << Eigen::VectorXd::Ones(A), Eigen::MatrixXd::Identity(A, A);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(A, A);
}

PepProblem build_dgd_spectral(const DgdSpec& spec) { return build_dgd(spec, nullptr); }

PepProblem build_dgd_fixed_matrix(const DgdSpec& spec, const Eigen::MatrixXd& W) {
  spec.validate();
  if (W.rows() != spec.agents || W.cols() != spec.agents)
    throw ModelError("network matrix must be " + std::to_string(spec.agents) + "x" + std::to_string(spec.agents));
  validate_network_matrix(W, spec.lam);
  return build_dgd(spec, &W);
}

void validate_network_matrix(const Eigen::MatrixXd& W, double lam, double tol) {
  const auto A = W.rows();
  if (A < 2 || W.cols() != A) throw ModelError("network matrix must be square with at least two agents");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > tol) throw ModelError("network matrix is not symmetric");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A);
  if ((W * ones - ones).cwiseAbs().maxCoeff() > tol) throw ModelError("network matrix rows do not sum to one");
  // Spectrum on the orthogonal complement of the all-ones vector.
  const Eigen::MatrixXd basis = ones_basis(static_cast<int>(A)).rightCols(A - 1);
  const Eigen::MatrixXd Z = basis.transpose() * (0.5 * (W + W.transpose())) * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (lo < -lam - tol || hi > lam + tol)
    throw ModelError("network matrix eigenvalues on 1-perp span [" + fmt(lo) + ", " + fmt(hi) + "], outside [-" +
                     fmt(lam) + ", " + fmt(lam) + "]");
}

Eigen::MatrixXd default_network_matrix(int agents, double lam) {
  if (agents < 2) throw ModelError("network matrix needs at least two agents");
  const int A = agents;
  const Eigen::MatrixXd basis = ones_basis(A);
  Eigen::VectorXd spectrum(A);
  spectrum(0) = 1.0;
  for (int k = 1; k < A; ++k) spectrum(k) = (k % 2 == 1) ? lam : -lam;
  Eigen::MatrixXd W = basis * spectrum.asDiagonal() * basis.transpose();
  // The first basis vector is +-1/sqrt(A); its eigenvalue is 1 either way.
  return 0.5 * (W + W.transpose());
}

Eigen::MatrixXd project_network_matrix(const Eigen::MatrixXd& W, double lam) {
  const auto A = W.rows();
  if (A < 2 || W.cols() != A) throw ModelError("network matrix must be square with at least two agents");
  const Eigen::MatrixXd q = ones_basis(static_cast<int>(A)).rightCols(A - 1);
  const Eigen::MatrixXd z = q.transpose() * (0.5 * (W + W.transpose())) * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (z + z.transpose()));
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(-lam).cwiseMin(lam);
  const Eigen::MatrixXd zc = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(A, A, 1.0 / static_cast<double>(A)) + q * zc * q.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace pepforge
