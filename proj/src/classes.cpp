#include "pepforge/classes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "labels.hpp"

namespace pepforge {

std::string to_string(Family family) {
  switch (family) {
    case Family::smooth_strongly_convex: return "smooth-strongly-convex";
    case Family::relaxed_smooth_convex: return "relaxed-smooth-convex";
    case Family::convex: return "convex";
    case Family::strongly_convex: return "strongly-convex";
    case Family::cyclically_monotone: return "cyclically-monotone";
    case Family::smooth_bounded_grad: return "smooth-bounded-grad";
    case Family::indicator_bounded: return "indicator-bounded";
    case Family::convex_bounded_grad: return "convex-bounded-grad";
    case Family::monotone: return "monotone";
    case Family::cocoercive: return "cocoercive";
    case Family::lipschitz_operator: return "lipschitz-op";
    case Family::linear_operator: return "linear-operator";
    case Family::network_matrix: return "network-matrix";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  static const Family all[] = {
      Family::smooth_strongly_convex, Family::relaxed_smooth_convex, Family::convex,
      Family::strongly_convex,        Family::cyclically_monotone,   Family::smooth_bounded_grad,
      Family::indicator_bounded,      Family::convex_bounded_grad,   Family::monotone,
      Family::cocoercive,             Family::lipschitz_operator,    Family::linear_operator,
      Family::network_matrix,
  };
  for (Family f : all)
    if (to_string(f) == name) return f;
  throw ModelError("unknown function/operator family '" + name + "'");
}

// ----------------------------------------------------------------- ClassSpec

ClassSpec ClassSpec::smooth_strongly_convex(double mu, double L) {
  ClassSpec s;
  s.family = Family::smooth_strongly_convex;
  s.mu = mu;
  s.L = L;
  return s;
}

ClassSpec ClassSpec::relaxed_smooth_convex(double L) {
  ClassSpec s;
  s.family = Family::relaxed_smooth_convex;
  s.L = L;
  return s;
}

ClassSpec ClassSpec::convex() {
  ClassSpec s;
  s.family = Family::convex;
  s.mu = 0.0;
  s.L = kInf;
  return s;
}

ClassSpec ClassSpec::strongly_convex(double mu) {
  ClassSpec s;
  s.family = Family::strongly_convex;
  s.mu = mu;
  s.L = kInf;
  return s;
}

ClassSpec ClassSpec::cyclically_monotone(double mu, double L, int max_cycle) {
  ClassSpec s;
  s.family = Family::cyclically_monotone;
  s.mu = mu;
  s.L = L;
  s.max_cycle = max_cycle;
  return s;
}

ClassSpec ClassSpec::smooth_bounded_grad(double L, double M) {
  ClassSpec s;
  s.family = Family::smooth_bounded_grad;
  s.L = L;
  s.M = M;
  return s;
}

ClassSpec ClassSpec::indicator_bounded(double M) {
  ClassSpec s;
  s.family = Family::indicator_bounded;
  s.M = M;
  return s;
}

ClassSpec ClassSpec::convex_bounded_grad(double M) {
  ClassSpec s;
  s.family = Family::convex_bounded_grad;
  s.M = M;
  s.L = kInf;
  return s;
}

ClassSpec ClassSpec::monotone(double mu) {
  ClassSpec s;
  s.family = Family::monotone;
  s.mu = mu;
  return s;
}

ClassSpec ClassSpec::cocoercive(double beta) {
  ClassSpec s;
  s.family = Family::cocoercive;
  s.beta = beta;
  return s;
}

ClassSpec ClassSpec::lipschitz_operator(double L) {
  ClassSpec s;
  s.family = Family::lipschitz_operator;
  s.L = L;
  return s;
}

bool ClassSpec::is_function_family() const {
  switch (family) {
    case Family::smooth_strongly_convex:
    case Family::relaxed_smooth_convex:
    case Family::convex:
    case Family::strongly_convex:
    case Family::smooth_bounded_grad:
    case Family::indicator_bounded:
    case Family::convex_bounded_grad: return true;
    default: return false;
  }
}

bool ClassSpec::is_operator_family() const {
  return family == Family::monotone || family == Family::cocoercive || family == Family::lipschitz_operator ||
         family == Family::cyclically_monotone;
}

bool ClassSpec::exact() const {
  switch (family) {
    case Family::relaxed_smooth_convex:
    case Family::network_matrix: return false;
    // Cycle enumeration is exact only when every cycle length is used.
    case Family::cyclically_monotone: return max_cycle == 0;
    default: return true;
  }
}

void ClassSpec::validate() const {
  auto positive_or_inf = [](double v) { return v > 0.0 || v == kInf; };
  switch (family) {
    case Family::smooth_strongly_convex:
    case Family::cyclically_monotone:
      if (std::isnan(mu) || std::isnan(L)) throw ModelError("class parameters must not be NaN");
      if (!positive_or_inf(L)) throw ModelError("L must be positive or +inf");
      if (mu == -kInf && L == kInf) throw ModelError("mu = -inf and L = +inf together describe no usable class");
      if (mu > L) throw ModelError("mu must not exceed L");
      if (family == Family::cyclically_monotone && L == kInf)
        throw ModelError("cyclic monotonicity constraints need a finite L");
      if (family == Family::cyclically_monotone && max_cycle != 0 && max_cycle < 2)
        throw ModelError("cycle length must be at least 2");
      break;
    case Family::relaxed_smooth_convex:
      if (!(L > 0.0) || L == kInf) throw ModelError("relaxed representation needs a finite positive L");
      break;
    case Family::convex: break;
    case Family::strongly_convex:
      if (!(mu >= 0.0) || mu == kInf) throw ModelError("strong convexity parameter must be finite and >= 0");
      break;
    case Family::smooth_bounded_grad:
      if (!(L > 0.0) || L == kInf || !(M > 0.0)) throw ModelError("C_{L,M} needs finite L > 0 and M > 0");
      break;
    case Family::indicator_bounded:
    case Family::convex_bounded_grad:
      if (!(M > 0.0)) throw ModelError("radius/gradient bound M must be positive");
      break;
    case Family::monotone:
      if (std::isnan(mu) || std::isinf(mu)) throw ModelError("monotonicity parameter must be finite");
      break;
    case Family::cocoercive:
      if (!(beta > 0.0) || std::isinf(beta)) throw ModelError("cocoercivity parameter must be positive");
      break;
    case Family::lipschitz_operator:
      if (!(L >= 0.0) || std::isinf(L)) throw ModelError("Lipschitz constant must be finite and >= 0");
      break;
    case Family::linear_operator:
      if (!(L >= 0.0)) throw ModelError("operator norm bound must be >= 0");
      break;
    case Family::network_matrix: break;
  }
}

std::string ClassSpec::describe() const {
  std::ostringstream os;
  os.precision(12);
  os << to_string(family);
  switch (family) {
    case Family::smooth_strongly_convex:
    case Family::cyclically_monotone: os << "(mu=" << mu << ",L=" << L << ")"; break;
    case Family::relaxed_smooth_convex:
    case Family::lipschitz_operator:
    case Family::linear_operator: os << "(L=" << L << ")"; break;
    case Family::strongly_convex:
    case Family::monotone: os << "(mu=" << mu << ")"; break;
    case Family::smooth_bounded_grad: os << "(L=" << L << ",M=" << M << ")"; break;
    case Family::indicator_bounded:
    case Family::convex_bounded_grad: os << "(M=" << M << ")"; break;
    case Family::cocoercive: os << "(beta=" << beta << ")"; break;
    default: break;
  }
  return os.str();
}

// ------------------------------------------------------------ function data

namespace {

const std::string& point_name(const std::vector<FunctionPoint>& pts, std::size_t i, std::string& scratch) {
  if (!pts[i].name.empty()) return pts[i].name;
  scratch = std::to_string(i);
  return scratch;
}

std::vector<std::string> names_of(const FunctionDataHandle& h) {
  std::vector<std::string> out;
  std::string scratch;
  for (std::size_t i = 0; i < h.points.size(); ++i) out.push_back(point_name(h.points, i, scratch));
  return out;
}

std::vector<std::string> names_of(const OperatorDataHandle& h) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < h.pairs.size(); ++i)
    out.push_back(h.pairs[i].name.empty() ? std::to_string(i) : h.pairs[i].name);
  return out;
}

QuadExpr fdiff(const ScalarVar& a, const ScalarVar& b) { return QuadExpr(a) - QuadExpr(b); }

}  // namespace

std::vector<Constraint> smooth_strongly_convex_constraints(const FunctionDataHandle& h, double mu, double L,
                                                           bool strict_equal_curvature) {
  ClassSpec::smooth_strongly_convex(mu, L).validate();
  const auto names = names_of(h);
  const std::size_t n = h.points.size();
  const SmoothStronglyConvexForm form = smooth_strongly_convex_form(mu, L);
  if (form == SmoothStronglyConvexForm::equal_curvature && !strict_equal_curvature)
    throw ModelError("mu == L requires the strict-equal-curvature branch to be enabled");

  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& pi = h.points[i];
      const auto& pj = h.points[j];
      const VectorExpr dx = pi.x - pj.x;
      const VectorExpr dg = pi.g - pj.g;
      // body <= 0 encodes f_i >= f_j + <g_j, x_i - x_j> + (curvature terms)
      QuadExpr body = fdiff(pj.f, pi.f);
      switch (form) {
        case SmoothStronglyConvexForm::general:
          body += inner(pj.g, dx);
          body += (1.0 / (2.0 * (L - mu))) * norm_sq(dg);
          body += (mu * L / (2.0 * (L - mu))) * norm_sq(dx);
          body -= (mu / (L - mu)) * inner(dg, dx);
          break;
        case SmoothStronglyConvexForm::no_upper_curvature:
          body += inner(pj.g, dx);
          body += (mu / 2.0) * norm_sq(dx);
          break;
        case SmoothStronglyConvexForm::no_lower_curvature:
          body += inner(pi.g, dx);
          body -= (L / 2.0) * norm_sq(dx);
          break;
        case SmoothStronglyConvexForm::equal_curvature:
          body += 0.5 * inner(pi.g + pj.g, dx);
          body += (1.0 / L) * norm_sq(dg - L * dx);
          break;
      }
      out.push_back(Constraint::le0(std::move(body), labels::ordered("fmuL", names[i], names[j])));
    }
  }
  return out;
}

std::vector<Constraint> relaxed_smooth_convex_constraints(const FunctionDataHandle& h, double L) {
  ClassSpec::relaxed_smooth_convex(L).validate();
  const auto names = names_of(h);
  const std::size_t n = h.points.size();
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& pi = h.points[i];
      const auto& pj = h.points[j];
      QuadExpr body = fdiff(pj.f, pi.f) + inner(pj.g, pi.x - pj.x);
      out.push_back(Constraint::le0(std::move(body), labels::ordered("cvx", names[i], names[j])));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& pi = h.points[i];
      const auto& pj = h.points[j];
      QuadExpr body = norm_sq(pi.g - pj.g) - (L * L) * norm_sq(pi.x - pj.x);
      out.push_back(Constraint::le0(std::move(body), labels::unordered("lip", names[i], names[j])));
    }
  }
  return out;
}

std::vector<Constraint> smooth_bounded_grad_constraints(const FunctionDataHandle& h, double L, double M) {
  ClassSpec::smooth_bounded_grad(L, M).validate();
  const auto names = names_of(h);
  const std::size_t n = h.points.size();
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& pi = h.points[i];
      const auto& pj = h.points[j];
      const VectorExpr dx = pi.x - pj.x;
      QuadExpr body = fdiff(pi.f, pj.f) - inner(pj.g, dx) - (L / 2.0) * norm_sq(dx);
      out.push_back(Constraint::le0(std::move(body), labels::ordered("upper", names[i], names[j])));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    QuadExpr body = norm_sq(h.points[i].g) - QuadExpr(M * M);
    out.push_back(Constraint::le0(std::move(body), labels::single("gradbound", names[i])));
  }
  return out;
}

std::vector<Constraint> indicator_constraints(const FunctionDataHandle& h, double M) {
  ClassSpec::indicator_bounded(M).validate();
  const auto names = names_of(h);
  const std::size_t n = h.points.size();
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(Constraint::eq0(QuadExpr(h.points[i].f), labels::single("value", names[i])));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      QuadExpr body = inner(h.points[j].g, h.points[i].x - h.points[j].x);
      out.push_back(Constraint::le0(std::move(body), labels::ordered("normal", names[i], names[j])));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    QuadExpr body = norm_sq(h.points[i].x) - QuadExpr(M * M);
    out.push_back(Constraint::le0(std::move(body), labels::single("radius", names[i])));
  }
  return out;
}

std::vector<Constraint> convex_bounded_grad_constraints(const FunctionDataHandle& h, double M) {
  ClassSpec::convex_bounded_grad(M).validate();
  const auto names = names_of(h);
  const std::size_t n = h.points.size();
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& pi = h.points[i];
      const auto& pj = h.points[j];
      QuadExpr body = fdiff(pj.f, pi.f) + inner(pj.g, pi.x - pj.x);
      out.push_back(Constraint::le0(std::move(body), labels::ordered("cvx", names[i], names[j])));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    QuadExpr body = norm_sq(h.points[i].g) - QuadExpr(M * M);
    out.push_back(Constraint::le0(std::move(body), labels::single("gradbound", names[i])));
  }
  return out;
}

std::vector<Constraint> function_constraints(const FunctionDataHandle& h, const ClassSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::smooth_strongly_convex:
      return smooth_strongly_convex_constraints(h, spec.mu, spec.L, spec.strict_equal_curvature);
    case Family::convex: return smooth_strongly_convex_constraints(h, 0.0, kInf);
    case Family::strongly_convex: return smooth_strongly_convex_constraints(h, spec.mu, kInf);
    case Family::relaxed_smooth_convex: return relaxed_smooth_convex_constraints(h, spec.L);
    case Family::smooth_bounded_grad: return smooth_bounded_grad_constraints(h, spec.L, spec.M);
    case Family::indicator_bounded: return indicator_constraints(h, spec.M);
    case Family::convex_bounded_grad: return convex_bounded_grad_constraints(h, spec.M);
    default: throw ModelError("'" + to_string(spec.family) + "' is not a function family");
  }
}

// ------------------------------------------------------------ cyclic monotone

std::size_t cycle_count(int n, int max_len) {
  std::size_t total = 0;
  for (int k = 2; k <= std::min(n, max_len); ++k) {
    // choose k nodes, then (k-1)! directed cycles through them
    double choose = 1.0;
    for (int t = 0; t < k; ++t) choose = choose * (n - t) / (t + 1);
    double arrangements = 1.0;
    for (int t = 2; t < k; ++t) arrangements *= t;
    total += static_cast<std::size_t>(std::llround(choose * arrangements));
  }
  return total;
}

namespace detail {

void for_each_cycle(int n, int max_len, const std::function<void(const std::vector<int>&)>& visit) {
  // Canonical rotation: the smallest index comes first.
  std::vector<int> cycle;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::function<void(int)> extend = [&](int first) {
    if (cycle.size() >= 2) visit(cycle);
    if (static_cast<int>(cycle.size()) == max_len) return;
    for (int v = first + 1; v < n; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      cycle.push_back(v);
      extend(first);
      cycle.pop_back();
      used[static_cast<std::size_t>(v)] = false;
    }
  };
  for (int first = 0; first < n; ++first) {
    cycle.assign(1, first);
    used[static_cast<std::size_t>(first)] = true;
    extend(first);
    used[static_cast<std::size_t>(first)] = false;
  }
}

int effective_cycle_length(int n, int requested, bool allow_large) {
  if (requested != 0 && requested < 2) throw ModelError("cycle length must be at least 2");
  if (n > 8 && !allow_large)
    throw ModelError("cyclic monotonicity over " + std::to_string(n) +
                     " pairs exceeds the enumeration cap of 8 (set allow_large_cycles to override)");
  const int k = requested == 0 ? n : requested;
  return std::min(k, n);
}

}  // namespace detail

std::vector<Constraint> cyclic_monotonicity_constraints(const OperatorDataHandle& h, double mu, double L,
                                                        int max_cycle_len, bool allow_large) {
  ClassSpec::cyclically_monotone(mu, L, max_cycle_len).validate();
  const int n = static_cast<int>(h.pairs.size());
  std::vector<Constraint> out;
  if (n < 2) return out;
  const int k = detail::effective_cycle_length(n, max_cycle_len, allow_large);
  const auto names = names_of(h);
  detail::for_each_cycle(n, k, [&](const std::vector<int>& cyc) {
    // sum_k <g_k, x_k - x_k+1> - <g_k, g_k - g_k+1>/L - mu <x_k, x_k - x_k+1> - mu <x_k, g_k - g_k+1>/L >= 0
    QuadExpr sum;
    std::vector<std::string> cyc_names;
    for (std::size_t t = 0; t < cyc.size(); ++t) {
      const auto& a = h.pairs[static_cast<std::size_t>(cyc[t])];
      const auto& b = h.pairs[static_cast<std::size_t>(cyc[(t + 1) % cyc.size()])];
      sum += inner(a.q, a.x - b.x);
      sum -= (1.0 / L) * inner(a.q, a.q - b.q);
      sum -= mu * inner(a.x, a.x - b.x);
      sum -= (mu / L) * inner(a.x, a.q - b.q);
      cyc_names.push_back(names[static_cast<std::size_t>(cyc[t])]);
    }
    out.push_back(Constraint::le0(-sum, labels::cycle("cycle", cyc_names)));
  });
  return out;
}

// ----------------------------------------------------------------- operators

std::vector<Constraint> operator_constraints(const OperatorDataHandle& h, const ClassSpec& spec) {
  spec.validate();
  if (spec.family == Family::cyclically_monotone)
    return cyclic_monotonicity_constraints(h, spec.mu, spec.L, spec.max_cycle, spec.allow_large_cycles);
  if (spec.family != Family::monotone && spec.family != Family::cocoercive &&
      spec.family != Family::lipschitz_operator)
    throw ModelError("'" + to_string(spec.family) + "' is not an operator family");
  const auto names = names_of(h);
  const std::size_t n = h.pairs.size();
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const VectorExpr dx = h.pairs[i].x - h.pairs[j].x;
      const VectorExpr dq = h.pairs[i].q - h.pairs[j].q;
      QuadExpr body;
      std::string kind;
      switch (spec.family) {
        case Family::monotone:
          body = spec.mu * norm_sq(dx) - inner(dq, dx);
          kind = "monotone";
          break;
        case Family::cocoercive:
          body = spec.beta * norm_sq(dq) - inner(dq, dx);
          kind = "cocoercive";
          break;
        default:
          body = norm_sq(dq) - (spec.L * spec.L) * norm_sq(dx);
          kind = "lipschitz";
          break;
      }
      out.push_back(Constraint::le0(std::move(body), labels::unordered(kind, names[i], names[j])));
    }
  }
  return out;
}

// -------------------------------------------------------------- linear maps

std::vector<Constraint> linear_operator_constraints(const LinearMapDataHandle& h) {
  if (!(h.L >= 0.0) || std::isinf(h.L)) throw ModelError("operator norm bound must be finite and >= 0");
  if (h.forward.empty() && h.adjoint.empty()) throw ModelError("linear map handle has no data");
  const double L2 = h.L * h.L;
  std::vector<Constraint> out;
  // X^T V = Y^T U
  for (std::size_t i = 0; i < h.forward.size(); ++i) {
    for (std::size_t j = 0; j < h.adjoint.size(); ++j) {
      QuadExpr body = inner(h.forward[i].first, h.adjoint[j].second) - inner(h.forward[i].second, h.adjoint[j].first);
      out.push_back(Constraint::eq0(std::move(body), labels::indexed("coupling", i, j)));
    }
  }
  auto gram_lmi = [&](const std::vector<std::pair<VectorExpr, VectorExpr>>& pairs, const std::string& name) {
    const int p = static_cast<int>(pairs.size());
    std::vector<QuadExpr> m(static_cast<std::size_t>(p * p));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        m[static_cast<std::size_t>(i * p + j)] =
            L2 * inner(pairs[static_cast<std::size_t>(i)].first, pairs[static_cast<std::size_t>(j)].first) -
            inner(pairs[static_cast<std::size_t>(i)].second, pairs[static_cast<std::size_t>(j)].second);
    out.push_back(Constraint::lmi(std::move(m), p, name));
  };
  if (!h.forward.empty()) gram_lmi(h.forward, "forward-lmi");
  if (!h.adjoint.empty()) gram_lmi(h.adjoint, "adjoint-lmi");
  return out;
}

// ---------------------------------------------------------- network matrices

namespace {

std::vector<VectorExpr> centered(const std::vector<VectorExpr>& v) {
  VectorExpr mean;
  for (const auto& e : v) mean += e;
  mean *= 1.0 / static_cast<double>(v.size());
  std::vector<VectorExpr> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(e - mean);
  return out;
}

}  // namespace

std::vector<Constraint> network_matrix_constraints(const ConsensusDataHandle& h) {
  if (h.agents < 2) throw ModelError("consensus needs at least two agents");
  if (!(h.lam >= 0.0 && h.lam < 1.0)) throw ModelError("spectral bound lambda must lie in [0, 1)");
  for (const auto& s : h.steps)
    if (static_cast<int>(s.x.size()) != h.agents || static_cast<int>(s.y.size()) != h.agents)
      throw ModelError("every consensus step needs exactly one input and one output per agent");

  std::vector<BasisLabel> tests = h.test_labels;
  if (tests.empty()) {
    std::map<int, BasisLabel> seen;
    for (const auto& s : h.steps) {
      for (const auto* side : {&s.x, &s.y})
        for (const auto& e : *side)
          for (const auto& [id, term] : e.terms()) seen.emplace(id, term.label);
    }
    for (auto& [id, l] : seen) tests.push_back(l);
  }

  std::vector<Constraint> out;
  const std::size_t n = h.steps.size();

  // Average preservation, tested against every label. Steps whose outputs are
  // already affinely tied to their inputs produce identically zero rows, which
  // are skipped.
  for (std::size_t i = 0; i < n; ++i) {
    VectorExpr sx, sy;
    for (int a = 0; a < h.agents; ++a) {
      sx += h.steps[i].x[static_cast<std::size_t>(a)];
      sy += h.steps[i].y[static_cast<std::size_t>(a)];
    }
    const VectorExpr s = sx - sy;
    if (s.is_zero()) continue;
    for (const auto& b : tests) {
      QuadExpr body = inner(s, VectorExpr(b));
      if (body.is_constant()) continue;
      out.push_back(Constraint::eq0(std::move(body), labels::tagged("average", i, b.tag)));
    }
  }

  std::vector<std::vector<VectorExpr>> xc, yc;
  for (const auto& s : h.steps) {
    xc.push_back(centered(s.x));
    yc.push_back(centered(s.y));
  }
  auto sum_inner = [&](const std::vector<VectorExpr>& u, const std::vector<VectorExpr>& v) {
    QuadExpr acc;
    for (std::size_t a = 0; a < u.size(); ++a) acc += inner(u[a], v[a]);
    return acc;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      QuadExpr body = sum_inner(xc[i], yc[j]) - sum_inner(yc[i], xc[j]);
      if (body.is_constant()) continue;
      out.push_back(Constraint::eq0(std::move(body), labels::indexed("symmetry", i, j)));
    }
  }

  if (n > 0) {
    const int p = static_cast<int>(n);
    const double lam2 = h.lam * h.lam;
    std::vector<QuadExpr> m(static_cast<std::size_t>(p * p));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        m[static_cast<std::size_t>(i * p + j)] =
            lam2 * sum_inner(xc[static_cast<std::size_t>(i)], xc[static_cast<std::size_t>(j)]) -
            sum_inner(yc[static_cast<std::size_t>(i)], yc[static_cast<std::size_t>(j)]);
    out.push_back(Constraint::lmi(std::move(m), p, "variance-lmi"));
  }
  return out;
}

// ------------------------------------------------------------------ records

std::vector<Constraint> generate(const InterpolationRecord& record) {
  std::vector<Constraint> cs = std::visit(
      [&](const auto& handle) -> std::vector<Constraint> {
        using H = std::decay_t<decltype(handle)>;
        if constexpr (std::is_same_v<H, FunctionDataHandle>) {
          return function_constraints(handle, record.spec);
        } else if constexpr (std::is_same_v<H, OperatorDataHandle>) {
          return operator_constraints(handle, record.spec);
        } else if constexpr (std::is_same_v<H, LinearMapDataHandle>) {
          return linear_operator_constraints(handle);
        } else {
          return network_matrix_constraints(handle);
        }
      },
      record.handle);
  for (auto& c : cs) c.label = record.name + ":" + c.label;
  return cs;
}

}  // namespace pepforge
