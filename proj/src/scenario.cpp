#include "pepforge/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pepforge {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed by finish().
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ScenarioError("scenario field '" + path + "': " + what);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    const json* v = get(key);
    return v ? as_number(*v, at(key)) : fallback;
  }

  double required_number(const std::string& key) {
    const json* v = get(key);
    if (!v) fail(at(key), "required");
    return as_number(*v, at(key));
  }

  int integer(const std::string& key, int fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  // Numbers, or the strings "inf" / "-inf" for the sentinel curvatures.
  static double as_number(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return kInf;
      if (s == "-inf") return -kInf;
    }
    fail(path, "expected a number");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) Fields::fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(Fields::as_number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<std::string> string_list(const json& v, const std::string& path) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) Fields::fail(path, "expected a string or an array of strings");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_string()) Fields::fail(path + "[" + std::to_string(k) + "]", "expected a string");
    out.push_back(v[k].get<std::string>());
  }
  return out;
}

// "x0", {"x0": 1, "g0": -0.5} or [["x0", 1], ["g0", -0.5]].
Combination combination(const json& v, const std::string& path) {
  Combination out;
  if (v.is_string()) {
    out.emplace_back(v.get<std::string>(), 1.0);
  } else if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) out.emplace_back(it.key(), Fields::as_number(it.value(), path + "." + it.key()));
  } else if (v.is_array()) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string p = path + "[" + std::to_string(k) + "]";
      if (!v[k].is_array() || v[k].size() != 2 || !v[k][0].is_string()) Fields::fail(p, "expected [name, coefficient]");
      out.emplace_back(v[k][0].get<std::string>(), Fields::as_number(v[k][1], p));
    }
  } else {
    Fields::fail(path, "expected a vector name, a {name: coefficient} object or a list of pairs");
  }
  if (out.empty()) Fields::fail(path, "empty vector expression");
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) Fields::fail(path, "expected a square array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::vector<double> row = number_list(v[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]");
    if (static_cast<Eigen::Index>(row.size()) != n) Fields::fail(path, "matrix is not square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

void parse_gradient(Fields& m, Scenario& s, const ClassSpec& family) {
  MethodSpec& g = s.gradient;
  g.family = family;
  g.N = m.integer("N", 1);
  g.R = m.number("R", 1.0);
  g.criterion = criterion_from_string(m.string("criterion", "last-iterate-gap"));
  const double L = family.L;
  int given = 0;
  if (const json* v = m.get("h")) {
    ++given;
    if (!std::isfinite(L)) Fields::fail(m.at("h"), "normalized steps need a finite smoothness constant L");
    g.steps = {Fields::as_number(*v, m.at("h")) / L};
  }
  if (const json* v = m.get("alpha")) {
    ++given;
    g.steps = {Fields::as_number(*v, m.at("alpha"))};
  }
  if (const json* v = m.get("steps")) {
    ++given;
    g.steps = number_list(*v, m.at("steps"));
  }
  if (const json* v = m.get("h_steps")) {
    ++given;
    if (!std::isfinite(L)) Fields::fail(m.at("h_steps"), "normalized steps need a finite smoothness constant L");
    g.steps = number_list(*v, m.at("h_steps"));
    for (double& a : g.steps) a /= L;
  }
  if (given > 1) Fields::fail(m.at("h"), "give only one of h, alpha, steps, h_steps");
  if (given == 0 && std::isfinite(L)) g.steps = {1.0 / L};
  if (given == 0 && !std::isfinite(L)) Fields::fail(m.at("alpha"), "required when L is infinite");
}

void parse_dgd(Fields& m, Scenario& s, const ClassSpec& family) {
  DgdSpec& d = s.dgd;
  d.local = family;
  d.N = m.integer("N", 10);
  d.agents = m.integer("agents", 3);
  d.lam = m.number("lambda", 0.5);
  d.R = m.number("R", 1.0);
  if (const json* v = m.get("alpha")) {
    if (v->is_string() && v->get<std::string>() == "1/sqrt(N)") {
      if (d.N <= 0) Fields::fail(m.at("alpha"), "1/sqrt(N) needs N > 0");
      d.alpha = 1.0 / std::sqrt(static_cast<double>(d.N));
    } else {
      d.alpha = Fields::as_number(*v, m.at("alpha"));
    }
  } else {
    d.alpha = d.N > 0 ? 1.0 / std::sqrt(static_cast<double>(d.N)) : 1.0;
  }
  const std::string init = m.string("init", "per-agent");
  if (init == "per-agent")
    d.init = DgdInit::per_agent;
  else if (init == "common")
    d.init = DgdInit::common;
  else
    Fields::fail(m.at("init"), "expected per-agent or common");
  if (const json* v = m.get("network")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "default") Fields::fail(m.at("network"), "expected \"default\" or a matrix");
    } else {
      s.network_matrix = matrix(*v, m.at("network"));
    }
  }
}

OracleKind oracle_kind(const std::string& s, const std::string& path) {
  if (s == "function") return OracleKind::function;
  if (s == "operator") return OracleKind::operator_;
  if (s == "linear") return OracleKind::linear;
  if (s == "network") return OracleKind::network;
  Fields::fail(path, "unknown oracle kind '" + s + "'");
}

StepOp step_op(const std::string& s, const std::string& path) {
  static const std::pair<const char*, StepOp> ops[] = {
      {"gradient", StepOp::gradient}, {"prox", StepOp::prox},       {"combine", StepOp::combine},
      {"apply", StepOp::apply},       {"adjoint", StepOp::adjoint}, {"evaluate", StepOp::evaluate},
      {"consensus", StepOp::consensus},
  };
  for (const auto& [name, op] : ops)
    if (s == name) return op;
  Fields::fail(path, "unknown step op '" + s + "'");
}

void parse_custom(Fields& m, Scenario& s) {
  SchemeConfig& c = s.custom;
  const json* oracles = m.get("oracles");
  if (!oracles || !oracles->is_array()) Fields::fail(m.at("oracles"), "required array");
  for (std::size_t k = 0; k < oracles->size(); ++k) {
    Fields o((*oracles)[k], m.at("oracles") + "[" + std::to_string(k) + "]");
    SchemeOracle so;
    so.name = o.string("name", "");
    so.kind = oracle_kind(o.string("kind", "function"), o.at("kind"));
    if (const json* f = o.get("family")) so.spec = parse_family(*f, o.at("family"));
    so.L = o.number("L", 1.0);
    so.lam = o.number("lambda", 0.0);
    so.agents = o.integer("agents", 2);
    o.finish();
    c.oracles.push_back(std::move(so));
  }
  if (const json* v = m.get("seeds")) c.seeds = string_list(*v, m.at("seeds"));
  if (const json* steps = m.get("steps")) {
    if (!steps->is_array()) Fields::fail(m.at("steps"), "expected an array");
    for (std::size_t k = 0; k < steps->size(); ++k) {
      Fields st((*steps)[k], m.at("steps") + "[" + std::to_string(k) + "]");
      SchemeStep ss;
      ss.name = st.string("name", "");
      ss.op = step_op(st.string("op", "combine"), st.at("op"));
      ss.oracle = st.string("oracle", "");
      if (const json* a = st.get("at")) ss.at = combination(*a, st.at("at"));
      ss.step = st.number("step", 0.0);
      if (const json* in = st.get("inputs")) {
        if (!in->is_array()) Fields::fail(st.at("inputs"), "expected an array");
        for (std::size_t q = 0; q < in->size(); ++q)
          ss.inputs.push_back(combination((*in)[q], st.at("inputs") + "[" + std::to_string(q) + "]"));
      }
      if (const json* out = st.get("outputs")) ss.outputs = string_list(*out, st.at("outputs"));
      st.finish();
      if (ss.op != StepOp::consensus && ss.at.empty()) Fields::fail(st.at("at"), "required");
      c.steps.push_back(std::move(ss));
    }
  }
  if (const json* v = m.get("stationary")) {
    if (!v->is_array()) Fields::fail(m.at("stationary"), "expected an array");
    for (std::size_t k = 0; k < v->size(); ++k) {
      Fields st((*v)[k], m.at("stationary") + "[" + std::to_string(k) + "]");
      Stationarity sc;
      if (const json* o = st.get("oracles")) sc.oracles = string_list(*o, st.at("oracles"));
      sc.through = st.string("through", "");
      st.finish();
      c.stationary.push_back(std::move(sc));
    }
  }
  if (const json* v = m.get("initial")) {
    const json list = v->is_array() ? *v : json::array({*v});
    for (std::size_t k = 0; k < list.size(); ++k) {
      Fields ic(list[k], m.at("initial") + "[" + std::to_string(k) + "]");
      InitialCondition init;
      const json* e = ic.get("expr");
      if (!e) Fields::fail(ic.at("expr"), "required");
      init.expr = combination(*e, ic.at("expr"));
      init.radius = ic.number("radius", 1.0);
      ic.finish();
      c.initial.push_back(std::move(init));
    }
  }
  const json* obj = m.get("objective");
  if (!obj) Fields::fail(m.at("objective"), "required");
  Fields o(*obj, m.at("objective"));
  const std::string type = o.string("type", "function_gap");
  if (type == "function_gap")
    c.objective = SchemeObjective::function_gap;
  else if (type == "norm_sq")
    c.objective = SchemeObjective::norm_sq;
  else
    Fields::fail(o.at("type"), "expected function_gap or norm_sq");
  if (const json* v = o.get("oracles")) c.objective_oracles = string_list(*v, o.at("oracles"));
  const json* at = o.get("at");
  if (!at) Fields::fail(o.at("at"), "required");
  c.objective_at = combination(*at, o.at("at"));
  o.finish();
}

SweepSpec parse_sweep(const json* j, MethodKind kind) {
  SweepSpec s;
  std::string axis = kind == MethodKind::region ? "region" : "none";
  std::optional<Fields> f;
  if (j) {
    f.emplace(*j, "sweep");
    axis = f->string("axis", axis);
  }
  if (axis == "none") {
    s.axis = SweepAxis::none;
  } else if (axis == "h") {
    s.axis = SweepAxis::h;
    s.from = 0.002, s.to = 1.998, s.step = 0.002;
  } else if (axis == "lambda") {
    s.axis = SweepAxis::lambda;
    s.from = 0.1, s.to = 0.9, s.step = 0.1;
  } else if (axis == "region") {
    s.axis = SweepAxis::region;
    s.from = -0.5, s.to = 2.5, s.step = 0.01;
    s.f_from = -0.5, s.f_to = 2.5, s.f_step = 0.01;
  } else {
    Fields::fail("sweep.axis", "expected none, h, lambda or region");
  }
  if (f) {
    s.from = f->number("from", s.from);
    s.to = f->number("to", s.to);
    s.step = f->number("step", s.step);
    if (s.axis == SweepAxis::region) {
      s.f_from = f->number("f_from", s.f_from);
      s.f_to = f->number("f_to", s.f_to);
      s.f_step = f->number("f_step", s.step);
    }
    f->finish();
  }
  if (s.axis != SweepAxis::none) {
    if (!(s.step > 0.0) || !(s.to >= s.from)) Fields::fail("sweep", "need step > 0 and to >= from");
    if (s.axis == SweepAxis::region && (!(s.f_step > 0.0) || !(s.f_to >= s.f_from)))
      Fields::fail("sweep", "need f_step > 0 and f_to >= f_from");
  }
  if (s.axis == SweepAxis::h && !(s.from > 0.0 && s.to < 2.0)) Fields::fail("sweep", "h grid must lie inside (0, 2)");
  if (s.axis == SweepAxis::lambda && !(s.from >= 0.0 && s.to < 1.0))
    Fields::fail("sweep", "lambda grid must lie inside [0, 1)");
  return s;
}

std::vector<double> make_grid(double from, double to, double step) {
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) {
    // Round to 12 significant digits so grid values print exactly as intended.
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", from + static_cast<double>(k) * step);
    out.push_back(std::stod(buf));
  }
  return out;
}

}  // namespace

std::vector<double> SweepSpec::grid() const { return make_grid(from, to, step); }
std::vector<double> SweepSpec::f_grid() const { return make_grid(f_from, f_to, f_step); }

ClassSpec parse_family(const json& j, const std::string& where) {
  if (j.is_string()) return parse_family(json{{"name", j}}, where);
  Fields f(j, where);
  const std::string name = f.string("name", "smooth-convex");
  ClassSpec s;
  try {
    if (name == "smooth-convex") {
      s = ClassSpec::smooth_convex(1.0);
    } else {
      s.family = family_from_string(name);
      if (s.family == Family::convex) s = ClassSpec::convex();
    }
  } catch (const ModelError& e) {
    Fields::fail(f.at("name"), e.what());
  }
  s.mu = f.number("mu", s.mu);
  s.L = f.number("L", s.L);
  s.M = f.number("M", s.M);
  s.beta = f.number("beta", s.beta);
  s.max_cycle = f.integer("max_cycle", s.max_cycle);
  s.allow_large_cycles = f.boolean("allow_large_cycles", s.allow_large_cycles);
  s.strict_equal_curvature = f.boolean("strict_equal_curvature", s.strict_equal_curvature);
  f.finish();
  try {
    s.validate();
  } catch (const ModelError& e) {
    Fields::fail(where, e.what());
  }
  return s;
}

Scenario parse_scenario(const json& doc) {
  Scenario s;
  s.source = doc;
  Fields top(doc, "");

  ClassSpec family = ClassSpec::smooth_convex(1.0);
  const json* fam = top.get("family");
  const json* method = top.get("method");
  if (!method) Fields::fail("method", "required");
  Fields m(*method, "method");
  const std::string type = m.string("type", "gradient");
  if (type == "gradient") {
    s.kind = MethodKind::gradient;
  } else if (type == "dgd") {
    s.kind = MethodKind::dgd;
    family = ClassSpec::convex_bounded_grad(1.0);
  } else if (type == "custom") {
    s.kind = MethodKind::custom;
  } else if (type == "region") {
    s.kind = MethodKind::region;
  } else {
    Fields::fail("method.type", "expected gradient, dgd, custom or region");
  }
  if (fam) family = parse_family(*fam, "family");

  try {
    switch (s.kind) {
      case MethodKind::gradient: parse_gradient(m, s, family); break;
      case MethodKind::dgd: parse_dgd(m, s, family); break;
      case MethodKind::custom: parse_custom(m, s); break;
      case MethodKind::region:
        s.region.x1 = m.number("x1", 0.0);
        s.region.x2 = m.number("x2", 1.0);
        s.region.g1 = m.number("g1", 1.0);
        s.region.f1 = m.number("f1", 0.0);
        s.region.L = m.number("L", 1.0);
        break;
    }
  } catch (const ModelError& e) {
    Fields::fail("method", e.what());
  }
  m.finish();

  s.sweep = parse_sweep(top.get("sweep"), s.kind);

  const std::string rep = top.string("representation", s.sweep.axis == SweepAxis::h ? "both" : "tight");
  if (rep == "both")
    s.representations = {Representation::relaxed, Representation::tight};
  else if (rep == "tight" || rep == "relaxed")
    s.representations = {representation_from_string(rep)};
  else
    Fields::fail("representation", "expected tight, relaxed or both");

  if (const json* out = top.get("output")) {
    Fields o(*out, "output");
    s.output.csv = o.string("csv", "");
    s.output.json = o.string("json", "");
    s.output.instance = o.string("instance", "");
    s.output.summary = o.string("summary", "");
    s.output.sdpa = o.string("sdpa", "");
    o.finish();
  }
  if (const json* tol = top.get("tolerances")) {
    Fields t(*tol, "tolerances");
    s.tol.gap = t.number("gap", s.tol.gap);
    s.tol.feas = t.number("feas", s.tol.feas);
    s.tol.max_iter = t.integer("max_iter", s.tol.max_iter);
    s.tol.verify = t.number("verify", s.tol.verify);
    s.tol.network = t.number("network", s.tol.network);
    s.tol.rank = t.number("rank", s.tol.rank);
    t.finish();
    if (!(s.tol.gap > 0.0 && s.tol.feas > 0.0 && s.tol.max_iter > 0))
      Fields::fail("tolerances", "gap, feas and max_iter must be positive");
  }
  top.finish();

  try {
    if (s.kind == MethodKind::gradient) s.gradient.validate();
    if (s.kind == MethodKind::dgd) {
      DgdSpec probe = s.dgd;
      if (s.sweep.axis == SweepAxis::lambda) probe.lam = s.sweep.from;
      probe.validate();
      if (s.network_matrix && s.network_matrix->rows() != s.dgd.agents)
        Fields::fail("method.network", "matrix size does not match the number of agents");
    }
  } catch (const ModelError& e) {
    Fields::fail("method", e.what());
  }
  if (s.sweep.axis == SweepAxis::h && s.kind != MethodKind::gradient)
    Fields::fail("sweep.axis", "h sweeps need a gradient method");
  if (s.sweep.axis == SweepAxis::lambda && s.kind != MethodKind::dgd)
    Fields::fail("sweep.axis", "lambda sweeps need a dgd method");
  if (s.sweep.axis == SweepAxis::region && s.kind != MethodKind::region)
    Fields::fail("sweep.axis", "region scans need method type region");
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::size_t line = 1;
    for (std::size_t k = 0; k < std::min(e.byte, text.size()); ++k)
      if (text[k] == '\n') ++line;
    throw ScenarioError("scenario syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

PepProblem build_problem(const Scenario& s, Representation rep) {
  switch (s.kind) {
    case MethodKind::gradient: return build_gradient_method(s.gradient, rep);
    case MethodKind::dgd:
      if (rep != Representation::tight) throw ScenarioError("DGD problems have no relaxed representation");
      return build_dgd_spectral(s.dgd);
    case MethodKind::custom:
      if (rep != Representation::tight) throw ScenarioError("custom schemes have no relaxed representation");
      return build_custom_method(s.custom);
    case MethodKind::region: break;
  }
  throw ScenarioError("region scans do not define a single problem");
}

}  // namespace pepforge
