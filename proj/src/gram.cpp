#include "pepforge/gram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

namespace pepforge {

namespace {

std::uint64_t next_owner_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

std::uint64_t merge_owner(std::uint64_t a, std::uint64_t b) {
  if (a == 0) return b;
  if (b == 0 || a == b) return a;
  throw ModelError("expressions from different problems cannot be combined");
}

}  // namespace

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::iterate_seed: return "iterate-seed";
    case BasisKind::gradient: return "gradient";
    case BasisKind::operator_output: return "operator-output";
    case BasisKind::auxiliary: return "auxiliary";
  }
  return "?";
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::eq0: return "eq0";
    case ConstraintKind::le0: return "le0";
    case ConstraintKind::lmi: return "lmi";
  }
  return "?";
}

// ---------------------------------------------------------------- VectorExpr

VectorExpr::VectorExpr(const BasisLabel& label, double coeff) : owner_(label.owner) {
  if (coeff != 0.0) terms_.emplace(label.id, Term{label, coeff});
}

double VectorExpr::coeff(int id) const {
  auto it = terms_.find(id);
  return it == terms_.end() ? 0.0 : it->second.coeff;
}

void VectorExpr::add_scaled(const VectorExpr& other, double s) {
  owner_ = merge_owner(owner_, other.owner_);
  for (const auto& [id, term] : other.terms_) {
    auto it = terms_.find(id);
    if (it == terms_.end()) {
      if (term.coeff * s != 0.0) terms_.emplace(id, Term{term.label, term.coeff * s});
      continue;
    }
    it->second.coeff += term.coeff * s;
    if (it->second.coeff == 0.0) terms_.erase(it);
  }
}

VectorExpr& VectorExpr::operator+=(const VectorExpr& other) {
  add_scaled(other, 1.0);
  return *this;
}

VectorExpr& VectorExpr::operator-=(const VectorExpr& other) {
  add_scaled(other, -1.0);
  return *this;
}

VectorExpr& VectorExpr::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [id, term] : terms_) term.coeff *= s;
  return *this;
}

Eigen::VectorXd VectorExpr::evaluate(std::span<const Eigen::VectorXd> basis_vectors) const {
  const Eigen::Index dim = basis_vectors.empty() ? 0 : basis_vectors.front().size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (const auto& [id, term] : terms_) {
    if (id < 0 || static_cast<std::size_t>(id) >= basis_vectors.size())
      throw ModelError("no numeric vector for basis label '" + term.label.tag + "'");
    out += term.coeff * basis_vectors[static_cast<std::size_t>(id)];
  }
  return out;
}

// ------------------------------------------------------------------ QuadExpr

QuadExpr::QuadExpr(const ScalarVar& var, double coeff) : owner_(var.owner) {
  if (coeff != 0.0) fval_.emplace(var.id, coeff);
}

double QuadExpr::gram_coeff(int a, int b) const {
  auto it = gram_.find({std::min(a, b), std::max(a, b)});
  return it == gram_.end() ? 0.0 : it->second;
}

double QuadExpr::fval_coeff(int id) const {
  auto it = fval_.find(id);
  return it == fval_.end() ? 0.0 : it->second;
}

void QuadExpr::adopt_owner(std::uint64_t owner) { owner_ = merge_owner(owner_, owner); }

void QuadExpr::add_gram(int a, int b, double c, std::uint64_t owner) {
  adopt_owner(owner);
  if (c == 0.0) return;
  GramKey key{std::min(a, b), std::max(a, b)};
  auto [it, inserted] = gram_.emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) gram_.erase(it);
  }
}

void QuadExpr::add_scaled(const QuadExpr& other, double s) {
  adopt_owner(other.owner_);
  for (const auto& [key, c] : other.gram_) add_gram(key.first, key.second, c * s, 0);
  for (const auto& [id, c] : other.fval_) {
    auto [it, inserted] = fval_.emplace(id, c * s);
    if (!inserted) {
      it->second += c * s;
      if (it->second == 0.0) fval_.erase(it);
    } else if (c * s == 0.0) {
      fval_.erase(it);
    }
  }
  constant_ += other.constant_ * s;
}

QuadExpr& QuadExpr::operator+=(const QuadExpr& other) {
  add_scaled(other, 1.0);
  return *this;
}

QuadExpr& QuadExpr::operator-=(const QuadExpr& other) {
  add_scaled(other, -1.0);
  return *this;
}

QuadExpr& QuadExpr::operator*=(double s) {
  if (s == 0.0) {
    gram_.clear();
    fval_.clear();
    constant_ = 0.0;
    return *this;
  }
  for (auto& [key, c] : gram_) c *= s;
  for (auto& [id, c] : fval_) c *= s;
  constant_ *= s;
  return *this;
}

double QuadExpr::evaluate(const Eigen::MatrixXd& gram, std::span<const double> fvals) const {
  double v = constant_;
  for (const auto& [key, c] : gram_) v += c * gram(key.first, key.second);
  for (const auto& [id, c] : fval_) v += c * fvals[static_cast<std::size_t>(id)];
  return v;
}

QuadExpr inner(const VectorExpr& u, const VectorExpr& v) {
  QuadExpr out;
  const std::uint64_t owner = merge_owner(u.owner(), v.owner());
  for (const auto& [a, ta] : u.terms())
    for (const auto& [b, tb] : v.terms()) out.add_gram(a, b, ta.coeff * tb.coeff, owner);
  return out;
}

// ---------------------------------------------------------------- Constraint

Constraint Constraint::le0(QuadExpr body, std::string label) {
  Constraint c;
  c.kind = ConstraintKind::le0;
  c.body = std::move(body);
  c.label = std::move(label);
  return c;
}

Constraint Constraint::eq0(QuadExpr body, std::string label) {
  Constraint c;
  c.kind = ConstraintKind::eq0;
  c.body = std::move(body);
  c.label = std::move(label);
  return c;
}

Constraint Constraint::lmi(std::vector<QuadExpr> matrix, int size, std::string label) {
  if (size <= 0 || matrix.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size))
    throw ModelError("LMI '" + label + "' body is not square");
  Constraint c;
  c.kind = ConstraintKind::lmi;
  c.size = size;
  c.matrix = std::move(matrix);
  c.label = std::move(label);
  return c;
}

double Constraint::residual(const Eigen::MatrixXd& gram, std::span<const double> fvals) const {
  switch (kind) {
    case ConstraintKind::le0: return std::max(0.0, body.evaluate(gram, fvals));
    case ConstraintKind::eq0: return std::abs(body.evaluate(gram, fvals));
    case ConstraintKind::lmi: {
      Eigen::MatrixXd m(size, size);
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) m(i, j) = entry(i, j).evaluate(gram, fvals);
      m = 0.5 * (m + m.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      return std::max(0.0, -es.eigenvalues()(0));
    }
  }
  return 0.0;
}

// ------------------------------------------------------------ ProblemBuilder

ProblemBuilder::ProblemBuilder() : owner_(next_owner_id()) {}

BasisLabel ProblemBuilder::add_label(BasisKind kind, std::string tag) {
  BasisLabel l{static_cast<int>(basis_.size()), owner_, kind, std::move(tag)};
  basis_.push_back(l);
  return l;
}

ScalarVar ProblemBuilder::add_scalar(std::string tag) {
  ScalarVar v{static_cast<int>(fvals_.size()), owner_, std::move(tag)};
  fvals_.push_back(v);
  return v;
}

void ProblemBuilder::check_vector(const VectorExpr& v) const {
  for (const auto& [id, term] : v.terms()) {
    const bool registered = term.label.owner == owner_ && id >= 0 && id < basis_size();
    if (!registered) throw ModelError("unregistered basis label '" + term.label.tag + "'");
  }
}

QuadExpr ProblemBuilder::inner(const VectorExpr& u, const VectorExpr& v) const {
  check_vector(u);
  check_vector(v);
  return pepforge::inner(u, v);
}

void ProblemBuilder::add_constraint(Constraint c) { constraints_.push_back(std::move(c)); }

void ProblemBuilder::add_constraints(std::vector<Constraint> cs) {
  for (auto& c : cs) constraints_.push_back(std::move(c));
}

void ProblemBuilder::set_objective(QuadExpr objective) {
  objective_ = std::move(objective);
  has_objective_ = true;
}

Problem ProblemBuilder::build() const {
  if (!has_objective_) throw ModelError("problem has no objective");
  if (constraints_.empty()) throw ModelError("problem has no constraints");

  auto check_expr = [&](const QuadExpr& e, const std::string& where) {
    if (e.owner() != 0 && e.owner() != owner_)
      throw ModelError(where + ": expression belongs to another problem");
    for (const auto& [key, c] : e.gram_coeffs()) {
      if (key.first < 0 || key.second >= basis_size())
        throw ModelError(where + ": dangling basis reference #" + std::to_string(key.second));
    }
    for (const auto& [id, c] : e.fval_coeffs()) {
      if (id < 0 || id >= scalar_count())
        throw ModelError(where + ": dangling scalar reference #" + std::to_string(id));
    }
  };

  check_expr(objective_, "objective");
  for (const auto& c : constraints_) {
    const std::string where = "constraint '" + c.label + "'";
    if (c.kind != ConstraintKind::lmi) {
      check_expr(c.body, where);
      continue;
    }
    if (c.size <= 0 || c.matrix.size() != static_cast<std::size_t>(c.size * c.size))
      throw ModelError(where + ": LMI body is not square");
    for (int i = 0; i < c.size; ++i) {
      for (int j = 0; j < c.size; ++j) {
        check_expr(c.entry(i, j), where);
        if (j <= i) continue;
        const QuadExpr diff = c.entry(i, j) - c.entry(j, i);
        bool symmetric = std::abs(diff.constant()) <= 1e-12;
        for (const auto& [k, v] : diff.gram_coeffs()) symmetric = symmetric && std::abs(v) <= 1e-12;
        for (const auto& [k, v] : diff.fval_coeffs()) symmetric = symmetric && std::abs(v) <= 1e-12;
        if (!symmetric) throw ModelError(where + ": LMI body is not symmetric");
      }
    }
  }

  Problem p;
  p.owner_ = owner_;
  p.basis_ = basis_;
  p.fvals_ = fvals_;
  p.constraints_ = constraints_;
  p.objective_ = objective_;
  return p;
}

double Problem::max_residual(const Eigen::MatrixXd& gram, std::span<const double> fvals) const {
  double worst = 0.0;
  for (const auto& c : constraints_) worst = std::max(worst, c.residual(gram, fvals));
  return worst;
}

}  // namespace pepforge
