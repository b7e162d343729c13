// Numeric twins of the interpolation generators. Each routine evaluates the
// same inequality set as its symbolic counterpart, in the same order and with
// the same labels, on concrete vectors.

#include <algorithm>
#include <cmath>

#include "labels.hpp"
#include "pepforge/classes.hpp"

namespace pepforge {

namespace {

class ReportBuilder {
 public:
  explicit ReportBuilder(double tol) : tol_(tol) {}

  void add(std::string label, ConstraintKind kind, double value) {
    double residual = 0.0;
    switch (kind) {
      case ConstraintKind::le0:
      case ConstraintKind::lmi: residual = std::max(0.0, value); break;
      case ConstraintKind::eq0: residual = std::abs(value); break;
    }
    CheckEntry e{std::move(label), kind, value, residual};
    report_.max_residual = std::max(report_.max_residual, residual);
    if (!(residual <= tol_)) {
      report_.feasible = false;
      report_.violations.push_back(e);
    }
    report_.entries.push_back(std::move(e));
  }

  void add_lmi(std::string label, const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    add(std::move(label), ConstraintKind::lmi, -es.eigenvalues()(0));
  }

  CheckReport finish() { return std::move(report_); }

 private:
  double tol_;
  CheckReport report_;
};

void require_dim(const Eigen::VectorXd& v, Eigen::Index& dim) {
  if (dim < 0) dim = v.size();
  if (v.size() != dim) throw ModelError("dimension mismatch in numeric data");
}

std::vector<std::string> names_of(std::span<const NumericTriple> data) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[i].name.empty() ? std::to_string(i) : data[i].name);
  return out;
}

std::vector<std::string> names_of(std::span<const NumericPair> data) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[i].name.empty() ? std::to_string(i) : data[i].name);
  return out;
}

void smooth_strongly_convex(std::span<const NumericTriple> d, double mu, double L, bool strict, ReportBuilder& rb) {
  ClassSpec::smooth_strongly_convex(mu, L).validate();
  const auto form = smooth_strongly_convex_form(mu, L);
  if (form == SmoothStronglyConvexForm::equal_curvature && !strict)
    throw ModelError("mu == L requires the strict-equal-curvature branch to be enabled");
  const auto names = names_of(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (i == j) continue;
      const Eigen::VectorXd dx = d[i].x - d[j].x;
      const Eigen::VectorXd dg = d[i].g - d[j].g;
      double v = d[j].f - d[i].f;
      switch (form) {
        case SmoothStronglyConvexForm::general:
          v += d[j].g.dot(dx) + dg.squaredNorm() / (2.0 * (L - mu)) + mu * L / (2.0 * (L - mu)) * dx.squaredNorm() -
               mu / (L - mu) * dg.dot(dx);
          break;
        case SmoothStronglyConvexForm::no_upper_curvature: v += d[j].g.dot(dx) + mu / 2.0 * dx.squaredNorm(); break;
        case SmoothStronglyConvexForm::no_lower_curvature: v += d[i].g.dot(dx) - L / 2.0 * dx.squaredNorm(); break;
        case SmoothStronglyConvexForm::equal_curvature:
          v += 0.5 * (d[i].g + d[j].g).dot(dx) + (dg - L * dx).squaredNorm() / L;
          break;
      }
      rb.add(labels::ordered("fmuL", names[i], names[j]), ConstraintKind::le0, v);
    }
  }
}

void convexity_pairs(std::span<const NumericTriple> d, const std::vector<std::string>& names, ReportBuilder& rb) {
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (i == j) continue;
      rb.add(labels::ordered("cvx", names[i], names[j]), ConstraintKind::le0,
             d[j].f - d[i].f + d[j].g.dot(d[i].x - d[j].x));
    }
}

}  // namespace

CheckReport check_numeric(std::span<const NumericTriple> data, const ClassSpec& spec, double tol) {
  spec.validate();
  Eigen::Index dim = -1;
  for (const auto& t : data) {
    require_dim(t.x, dim);
    require_dim(t.g, dim);
  }
  ReportBuilder rb(tol);
  const auto names = names_of(data);
  switch (spec.family) {
    case Family::smooth_strongly_convex:
      smooth_strongly_convex(data, spec.mu, spec.L, spec.strict_equal_curvature, rb);
      break;
    case Family::convex: smooth_strongly_convex(data, 0.0, kInf, true, rb); break;
    case Family::strongly_convex: smooth_strongly_convex(data, spec.mu, kInf, true, rb); break;
    case Family::relaxed_smooth_convex:
      convexity_pairs(data, names, rb);
      for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = i + 1; j < data.size(); ++j)
          rb.add(labels::unordered("lip", names[i], names[j]), ConstraintKind::le0,
                 (data[i].g - data[j].g).squaredNorm() - spec.L * spec.L * (data[i].x - data[j].x).squaredNorm());
      break;
    case Family::smooth_bounded_grad:
      for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.size(); ++j) {
          if (i == j) continue;
          const Eigen::VectorXd dx = data[i].x - data[j].x;
          rb.add(labels::ordered("upper", names[i], names[j]), ConstraintKind::le0,
                 data[i].f - data[j].f - data[j].g.dot(dx) - spec.L / 2.0 * dx.squaredNorm());
        }
      for (std::size_t i = 0; i < data.size(); ++i)
        rb.add(labels::single("gradbound", names[i]), ConstraintKind::le0, data[i].g.squaredNorm() - spec.M * spec.M);
      break;
    case Family::indicator_bounded:
      for (std::size_t i = 0; i < data.size(); ++i)
        rb.add(labels::single("value", names[i]), ConstraintKind::eq0, data[i].f);
      for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.size(); ++j) {
          if (i == j) continue;
          rb.add(labels::ordered("normal", names[i], names[j]), ConstraintKind::le0,
                 data[j].g.dot(data[i].x - data[j].x));
        }
      for (std::size_t i = 0; i < data.size(); ++i)
        rb.add(labels::single("radius", names[i]), ConstraintKind::le0, data[i].x.squaredNorm() - spec.M * spec.M);
      break;
    case Family::convex_bounded_grad:
      convexity_pairs(data, names, rb);
      for (std::size_t i = 0; i < data.size(); ++i)
        rb.add(labels::single("gradbound", names[i]), ConstraintKind::le0, data[i].g.squaredNorm() - spec.M * spec.M);
      break;
    default: throw ModelError("'" + to_string(spec.family) + "' is not a function family");
  }
  return rb.finish();
}

CheckReport check_numeric(std::span<const NumericPair> data, const ClassSpec& spec, double tol) {
  spec.validate();
  Eigen::Index dim = -1;
  for (const auto& p : data) {
    require_dim(p.x, dim);
    require_dim(p.q, dim);
  }
  ReportBuilder rb(tol);
  const auto names = names_of(data);
  const int n = static_cast<int>(data.size());

  if (spec.family == Family::cyclically_monotone) {
    if (n < 2) return rb.finish();
    const int k = detail::effective_cycle_length(n, spec.max_cycle, spec.allow_large_cycles);
    const double mu = spec.mu, L = spec.L;
    detail::for_each_cycle(n, k, [&](const std::vector<int>& cyc) {
      double sum = 0.0;
      std::vector<std::string> cyc_names;
      for (std::size_t t = 0; t < cyc.size(); ++t) {
        const auto& a = data[static_cast<std::size_t>(cyc[t])];
        const auto& b = data[static_cast<std::size_t>(cyc[(t + 1) % cyc.size()])];
        sum += a.q.dot(a.x - b.x) - a.q.dot(a.q - b.q) / L - mu * a.x.dot(a.x - b.x) - mu * a.x.dot(a.q - b.q) / L;
        cyc_names.push_back(names[static_cast<std::size_t>(cyc[t])]);
      }
      rb.add(labels::cycle("cycle", cyc_names), ConstraintKind::le0, -sum);
    });
    return rb.finish();
  }
  if (spec.family != Family::monotone && spec.family != Family::cocoercive &&
      spec.family != Family::lipschitz_operator)
    throw ModelError("'" + to_string(spec.family) + "' is not an operator family");

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = data[static_cast<std::size_t>(i)];
      const auto& b = data[static_cast<std::size_t>(j)];
      const Eigen::VectorXd dx = a.x - b.x;
      const Eigen::VectorXd dq = a.q - b.q;
      const auto& ni = names[static_cast<std::size_t>(i)];
      const auto& nj = names[static_cast<std::size_t>(j)];
      switch (spec.family) {
        case Family::monotone:
          rb.add(labels::unordered("monotone", ni, nj), ConstraintKind::le0, spec.mu * dx.squaredNorm() - dq.dot(dx));
          break;
        case Family::cocoercive:
          rb.add(labels::unordered("cocoercive", ni, nj), ConstraintKind::le0,
                 spec.beta * dq.squaredNorm() - dq.dot(dx));
          break;
        case Family::lipschitz_operator:
          rb.add(labels::unordered("lipschitz", ni, nj), ConstraintKind::le0,
                 dq.squaredNorm() - spec.L * spec.L * dx.squaredNorm());
          break;
        default: break;
      }
    }
  }
  return rb.finish();
}

CheckReport check_numeric_linear(std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> forward,
                                 std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> adjoint, double L,
                                 double tol) {
  if (!(L >= 0.0) || std::isinf(L)) throw ModelError("operator norm bound must be finite and >= 0");
  if (forward.empty() && adjoint.empty()) throw ModelError("linear map data is empty");
  Eigen::Index in_dim = -1, out_dim = -1;
  for (const auto& [x, y] : forward) {
    require_dim(x, in_dim);
    require_dim(y, out_dim);
  }
  for (const auto& [u, v] : adjoint) {
    require_dim(u, out_dim);
    require_dim(v, in_dim);
  }
  ReportBuilder rb(tol);
  for (std::size_t i = 0; i < forward.size(); ++i)
    for (std::size_t j = 0; j < adjoint.size(); ++j)
      rb.add(labels::indexed("coupling", i, j), ConstraintKind::eq0,
             forward[i].first.dot(adjoint[j].second) - forward[i].second.dot(adjoint[j].first));
  auto lmi = [&](std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs, const char* name) {
    const auto p = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd m(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        m(i, j) = L * L * pairs[static_cast<std::size_t>(i)].first.dot(pairs[static_cast<std::size_t>(j)].first) -
                  pairs[static_cast<std::size_t>(i)].second.dot(pairs[static_cast<std::size_t>(j)].second);
    rb.add_lmi(name, m);
  };
  if (!forward.empty()) lmi(forward, "forward-lmi");
  if (!adjoint.empty()) lmi(adjoint, "adjoint-lmi");
  return rb.finish();
}

CheckReport check_numeric_consensus(std::span<const NumericConsensusStep> steps, double lam, double tol) {
  if (!(lam >= 0.0 && lam < 1.0)) throw ModelError("spectral bound lambda must lie in [0, 1)");
  ReportBuilder rb(tol);
  if (steps.empty()) return rb.finish();
  const std::size_t agents = steps.front().x.size();
  if (agents < 2) throw ModelError("consensus needs at least two agents");
  Eigen::Index dim = -1;
  for (const auto& s : steps) {
    if (s.x.size() != agents || s.y.size() != agents) throw ModelError("agent count differs between steps");
    for (const auto& v : s.x) require_dim(v, dim);
    for (const auto& v : s.y) require_dim(v, dim);
  }

  const std::size_t n = steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
    for (std::size_t a = 0; a < agents; ++a) s += steps[i].x[a] - steps[i].y[a];
    for (Eigen::Index k = 0; k < dim; ++k)
      rb.add(labels::tagged("average", i, "e" + std::to_string(k)), ConstraintKind::eq0, s(k));
  }

  auto centered = [&](const std::vector<Eigen::VectorXd>& v) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& e : v) mean += e;
    mean /= static_cast<double>(agents);
    std::vector<Eigen::VectorXd> out;
    for (const auto& e : v) out.push_back(e - mean);
    return out;
  };
  std::vector<std::vector<Eigen::VectorXd>> xc, yc;
  for (const auto& s : steps) {
    xc.push_back(centered(s.x));
    yc.push_back(centered(s.y));
  }
  auto sum_inner = [&](const std::vector<Eigen::VectorXd>& u, const std::vector<Eigen::VectorXd>& v) {
    double acc = 0.0;
    for (std::size_t a = 0; a < agents; ++a) acc += u[a].dot(v[a]);
    return acc;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      rb.add(labels::indexed("symmetry", i, j), ConstraintKind::eq0,
             sum_inner(xc[i], yc[j]) - sum_inner(yc[i], xc[j]));

  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          lam * lam * sum_inner(xc[i], xc[j]) - sum_inner(yc[i], yc[j]);
  rb.add_lmi("variance-lmi", m);
  return rb.finish();
}

}  // namespace pepforge
