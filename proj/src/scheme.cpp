#include "pepforge/scheme.hpp"

#include <cstdio>
#include <map>
#include <set>

namespace pepforge {

namespace {

// Key identifying a VectorExpr up to exact coefficients.
std::string expr_key(const VectorExpr& v) {
  std::string key;
  char buf[64];
  for (const auto& [id, term] : v.terms()) {
    std::snprintf(buf, sizeof buf, "%d:%.17g;", id, term.coeff);
    key += buf;
  }
  return key;
}

class SchemeBuilder {
 public:
  explicit SchemeBuilder(const SchemeConfig& c) : c_(c) {
    for (std::size_t k = 0; k < c.oracles.size(); ++k) {
      const SchemeOracle& o = c.oracles[k];
      if (o.name.empty()) throw ModelError("oracle without a name");
      if (!index_.emplace(o.name, k).second) throw ModelError("oracle '" + o.name + "' declared twice");
      if (o.kind == OracleKind::function && !o.spec.is_function_family())
        throw ModelError("oracle '" + o.name + "' is a function oracle but has family " + o.spec.describe());
      if (o.kind == OracleKind::operator_ && !o.spec.is_operator_family())
        throw ModelError("oracle '" + o.name + "' is an operator oracle but has family " + o.spec.describe());
      if (o.kind == OracleKind::function || o.kind == OracleKind::operator_) o.spec.validate();
    }
    functions_.resize(c.oracles.size());
    operators_.resize(c.oracles.size());
    linears_.resize(c.oracles.size());
    networks_.resize(c.oracles.size());
    for (std::size_t k = 0; k < c.oracles.size(); ++k) {
      linears_[k].L = c.oracles[k].L;
      networks_[k].lam = c.oracles[k].lam;
      networks_[k].agents = c.oracles[k].agents;
    }
    point_index_.resize(c.oracles.size());
  }

  PepProblem build() {
    if (c_.seeds.empty()) throw ModelError("scheme declares no initial vectors");
    for (const auto& s : c_.seeds) bind(s, b_.add_vector(BasisKind::iterate_seed, s));
    for (const auto& st : c_.steps) run(st);

    // Objective queries come before stationary values so that registration
    // order matches the hand-written builders.
    QuadExpr objective;
    std::vector<std::size_t> gap_oracles;
    if (c_.objective == SchemeObjective::function_gap) {
      if (c_.objective_oracles.empty()) throw ModelError("function_gap objective names no oracle");
      const VectorExpr at = resolve(c_.objective_at);
      for (const auto& name : c_.objective_oracles) {
        const std::size_t k = oracle(name, OracleKind::function);
        const FunctionPoint& p = query(k, at, "", "");
        objective += QuadExpr(p.f);
        gap_oracles.push_back(k);
      }
    } else {
      objective = norm_sq(resolve(c_.objective_at));
    }

    std::set<std::size_t> stationary;
    for (const auto& s : c_.stationary) add_stationarity(s, stationary);
    for (std::size_t k : gap_oracles) {
      if (!fstar_.count(k))
        throw ModelError("objective uses f*(" + c_.oracles[k].name + ") but no stationarity condition covers it");
      objective -= QuadExpr(fstar_.at(k));
    }

    PepProblem out;
    for (std::size_t k = 0; k < c_.oracles.size(); ++k) {
      const SchemeOracle& o = c_.oracles[k];
      switch (o.kind) {
        case OracleKind::function:
          if (!functions_[k].points.empty()) out.records.push_back({o.name, o.spec, functions_[k], o.spec.exact()});
          break;
        case OracleKind::operator_:
          if (!operators_[k].pairs.empty()) out.records.push_back({o.name, o.spec, operators_[k], o.spec.exact()});
          break;
        case OracleKind::linear:
          if (!linears_[k].forward.empty() || !linears_[k].adjoint.empty()) {
            ClassSpec s;
            s.family = Family::linear_operator;
            s.L = o.L;
            out.records.push_back({o.name, s, linears_[k], true});
          }
          break;
        case OracleKind::network:
          if (!networks_[k].steps.empty()) {
            ClassSpec s;
            s.family = Family::network_matrix;
            out.records.push_back({o.name, s, networks_[k], true});
          }
          break;
      }
    }
    for (const auto& r : out.records) b_.add_constraints(generate(r));

    if (c_.initial.empty()) throw ModelError("scheme declares no initial condition");
    for (std::size_t k = 0; k < c_.initial.size(); ++k) {
      const InitialCondition& ic = c_.initial[k];
      if (!(ic.radius > 0.0)) throw ModelError("initial radius must be positive");
      b_.add_constraint(Constraint::le0(norm_sq(resolve(ic.expr)) - ic.radius * ic.radius,
                                        c_.initial.size() == 1 ? "initial" : "initial" + std::to_string(k)));
    }
    b_.set_objective(objective);
    out.problem = b_.build();
    out.metadata = {{"method", "custom"}, {"objective", c_.objective == SchemeObjective::function_gap ? "function-gap" : "norm-sq"}};
    return out;
  }

 private:
  void bind(const std::string& name, VectorExpr v) {
    if (name.empty()) throw ModelError("step without a name");
    if (!env_.emplace(name, std::move(v)).second) throw ModelError("name '" + name + "' defined twice");
  }

  VectorExpr resolve(const Combination& c) const {
    if (c.empty()) throw ModelError("empty vector expression");
    VectorExpr out;
    for (const auto& [name, coeff] : c) {
      auto it = env_.find(name);
      if (it == env_.end()) throw ModelError("undeclared vector '" + name + "'");
      out += coeff * it->second;
    }
    return out;
  }

  std::size_t oracle(const std::string& name, OracleKind kind) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ModelError("undeclared oracle '" + name + "'");
    if (c_.oracles[it->second].kind != kind) throw ModelError("oracle '" + name + "' cannot be used this way");
    return it->second;
  }

  // Function query at `at`; reuses an earlier query at the same point.
  const FunctionPoint& query(std::size_t k, const VectorExpr& at, const std::string& gname, const std::string& pname) {
    const std::string key = expr_key(at);
    auto it = point_index_[k].find(key);
    if (it != point_index_[k].end()) return functions_[k].points[it->second];
    const std::string& o = c_.oracles[k].name;
    const std::size_t n = functions_[k].points.size();
    const std::string g = gname.empty() ? o + "'" + std::to_string(n) : gname;
    const std::string p = pname.empty() ? o + "@" + std::to_string(n) : pname;
    FunctionPoint pt{at, b_.add_vector(BasisKind::gradient, g), b_.add_scalar(o + "(" + p + ")"), p};
    point_index_[k].emplace(key, n);
    functions_[k].points.push_back(std::move(pt));
    return functions_[k].points.back();
  }

  void run(const SchemeStep& st) {
    switch (st.op) {
      case StepOp::gradient: {
        const std::size_t k = oracle(st.oracle, OracleKind::function);
        const VectorExpr at = resolve(st.at);
        const std::string key = expr_key(at);
        if (point_index_[k].count(key)) {
          bind(st.name, query(k, at, "", "").g);
        } else {
          bind(st.name, query(k, at, st.name, describe(st.at)).g);
        }
        break;
      }
      case StepOp::prox: {
        const std::size_t k = oracle(st.oracle, OracleKind::function);
        const VectorExpr g = b_.add_vector(BasisKind::gradient, st.name + ".g");
        const VectorExpr x = resolve(st.at) - st.step * g;
        const std::string& o = c_.oracles[k].name;
        point_index_[k].emplace(expr_key(x), functions_[k].points.size());
        functions_[k].points.push_back({x, g, b_.add_scalar(o + "(" + st.name + ")"), st.name});
        bind(st.name, x);
        bind(st.name + ".g", g);
        break;
      }
      case StepOp::combine:
        bind(st.name, resolve(st.at));
        break;
      case StepOp::apply: {
        const std::size_t k = oracle(st.oracle, OracleKind::linear);
        const VectorExpr y = b_.add_vector(BasisKind::operator_output, st.name);
        linears_[k].forward.emplace_back(resolve(st.at), y);
        bind(st.name, y);
        break;
      }
      case StepOp::adjoint: {
        const std::size_t k = oracle(st.oracle, OracleKind::linear);
        const VectorExpr v = b_.add_vector(BasisKind::operator_output, st.name);
        linears_[k].adjoint.emplace_back(resolve(st.at), v);
        bind(st.name, v);
        break;
      }
      case StepOp::evaluate: {
        const std::size_t k = oracle(st.oracle, OracleKind::operator_);
        const VectorExpr q = b_.add_vector(BasisKind::operator_output, st.name);
        operators_[k].pairs.push_back({resolve(st.at), q, st.name});
        bind(st.name, q);
        break;
      }
      case StepOp::consensus: {
        const std::size_t k = oracle(st.oracle, OracleKind::network);
        const auto agents = static_cast<std::size_t>(networks_[k].agents);
        if (st.inputs.size() != agents || st.outputs.size() != agents)
          throw ModelError("consensus step '" + st.name + "' needs " + std::to_string(agents) + " inputs and outputs");
        ConsensusStep cs;
        for (std::size_t a = 0; a < agents; ++a) {
          cs.x.push_back(resolve(st.inputs[a]));
          cs.y.push_back(b_.add_vector(BasisKind::auxiliary, st.outputs[a]));
          bind(st.outputs[a], cs.y.back());
        }
        networks_[k].steps.push_back(std::move(cs));
        break;
      }
    }
  }

  void add_stationarity(const Stationarity& s, std::set<std::size_t>& seen) {
    if (s.oracles.empty()) throw ModelError("stationarity condition names no oracle");
    std::vector<std::size_t> ks;
    for (const auto& name : s.oracles) {
      const std::size_t k = oracle(name, OracleKind::function);
      if (!seen.insert(k).second) throw ModelError("oracle '" + name + "' appears in two stationarity conditions");
      ks.push_back(k);
    }
    // Without a linear map the last gradient is eliminated so the sum is
    // zero; with one, every gradient is free and M^T (sum) = 0 is imposed.
    const bool through = !s.through.empty();
    VectorExpr sum;
    for (std::size_t t = 0; t < ks.size(); ++t) {
      const std::size_t k = ks[t];
      const std::string& o = c_.oracles[k].name;
      VectorExpr g;
      if (through || t + 1 < ks.size()) {
        g = b_.add_vector(BasisKind::gradient, o + "'*");
        sum += g;
      } else {
        g = -1.0 * sum;
      }
      const ScalarVar f = b_.add_scalar(o + "*");
      fstar_.emplace(k, f);
      functions_[k].points.push_back({VectorExpr::zero(), g, f, "x*"});
    }
    if (through) {
      const std::size_t m = oracle(s.through, OracleKind::linear);
      linears_[m].adjoint.emplace_back(sum, VectorExpr::zero());
    }
  }

  static std::string describe(const Combination& c) {
    if (c.size() == 1 && c[0].second == 1.0) return c[0].first;
    return "";
  }

  const SchemeConfig& c_;
  ProblemBuilder b_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, VectorExpr> env_;
  std::vector<FunctionDataHandle> functions_;
  std::vector<OperatorDataHandle> operators_;
  std::vector<LinearMapDataHandle> linears_;
  std::vector<ConsensusDataHandle> networks_;
  std::vector<std::map<std::string, std::size_t>> point_index_;
  std::map<std::size_t, ScalarVar> fstar_;
};

}  // namespace

PepProblem build_custom_method(const SchemeConfig& config) { return SchemeBuilder(config).build(); }

}  // namespace pepforge
