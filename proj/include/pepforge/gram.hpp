#pragma once

// Symbolic layer for performance-estimation problems.
//
// Unknown vectors (iterates, gradients, operator outputs) are never
// materialized. Each one is a basis label, every other vector is a formal
// linear combination of labels, and every scalar quantity is affine in the
// pairwise inner products of labels (the Gram matrix) and in a set of scalar
// symbols (function values). Constraints and objectives are built only from
// such affine expressions, so a finished Problem is a linear program over a
// positive semidefinite Gram matrix.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pepforge {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BasisKind { iterate_seed, gradient, operator_output, auxiliary };

std::string to_string(BasisKind kind);

struct BasisLabel {
  int id = -1;              // Gram index inside the owning problem
  std::uint64_t owner = 0;  // builder that registered the label
  BasisKind kind = BasisKind::auxiliary;
  std::string tag;
};

struct ScalarVar {
  int id = -1;
  std::uint64_t owner = 0;
  std::string tag;
};

/// Formal linear combination of basis labels. The empty expression is the
/// origin.
class VectorExpr {
 public:
  VectorExpr() = default;
  explicit VectorExpr(const BasisLabel& label, double coeff = 1.0);

  static VectorExpr zero() { return {}; }

  bool is_zero() const { return terms_.empty(); }
  std::uint64_t owner() const { return owner_; }
  double coeff(int id) const;

  struct Term {
    BasisLabel label;
    double coeff;
  };
  const std::map<int, Term>& terms() const { return terms_; }

  VectorExpr& operator+=(const VectorExpr& other);
  VectorExpr& operator-=(const VectorExpr& other);
  VectorExpr& operator*=(double s);

  friend VectorExpr operator+(VectorExpr a, const VectorExpr& b) { return a += b; }
  friend VectorExpr operator-(VectorExpr a, const VectorExpr& b) { return a -= b; }
  friend VectorExpr operator*(double s, VectorExpr a) { return a *= s; }
  friend VectorExpr operator*(VectorExpr a, double s) { return a *= s; }
  friend VectorExpr operator-(VectorExpr a) { return a *= -1.0; }

  /// Numeric value given one coordinate vector per Gram index.
  Eigen::VectorXd evaluate(std::span<const Eigen::VectorXd> basis_vectors) const;

 private:
  void add_scaled(const VectorExpr& other, double s);

  std::map<int, Term> terms_;
  std::uint64_t owner_ = 0;
};

/// Affine expression in Gram entries and scalar symbols. Gram coefficients are
/// keyed by the unordered pair (min id, max id): the coefficient multiplies
/// G[a,b] once, so an off-diagonal coefficient c contributes c * G[a,b].
class QuadExpr {
 public:
  QuadExpr() = default;
  QuadExpr(double constant) : constant_(constant) {}  // NOLINT: constants are expressions
  explicit QuadExpr(const ScalarVar& var, double coeff = 1.0);

  using GramKey = std::pair<int, int>;

  const std::map<GramKey, double>& gram_coeffs() const { return gram_; }
  const std::map<int, double>& fval_coeffs() const { return fval_; }
  double constant() const { return constant_; }
  std::uint64_t owner() const { return owner_; }

  double gram_coeff(int a, int b) const;
  double fval_coeff(int id) const;

  /// True when no Gram or scalar symbol appears (the constant may be nonzero).
  bool is_constant() const { return gram_.empty() && fval_.empty(); }

  QuadExpr& operator+=(const QuadExpr& other);
  QuadExpr& operator-=(const QuadExpr& other);
  QuadExpr& operator*=(double s);

  friend QuadExpr operator+(QuadExpr a, const QuadExpr& b) { return a += b; }
  friend QuadExpr operator-(QuadExpr a, const QuadExpr& b) { return a -= b; }
  friend QuadExpr operator*(double s, QuadExpr a) { return a *= s; }
  friend QuadExpr operator*(QuadExpr a, double s) { return a *= s; }
  friend QuadExpr operator-(QuadExpr a) { return a *= -1.0; }

  void add_gram(int a, int b, double c, std::uint64_t owner);

  /// Value at a numeric Gram matrix and scalar assignment (indices are ids).
  double evaluate(const Eigen::MatrixXd& gram, std::span<const double> fvals) const;

 private:
  void adopt_owner(std::uint64_t owner);
  void add_scaled(const QuadExpr& other, double s);

  std::map<GramKey, double> gram_;
  std::map<int, double> fval_;
  double constant_ = 0.0;
  std::uint64_t owner_ = 0;
};

/// Gram lift of the inner product <u, v>. Bilinear, symmetric. Throws when the
/// expressions belong to different problems.
QuadExpr inner(const VectorExpr& u, const VectorExpr& v);
inline QuadExpr norm_sq(const VectorExpr& u) { return inner(u, u); }

enum class ConstraintKind { eq0, le0, lmi };

std::string to_string(ConstraintKind kind);

/// eq0: body == 0. le0: body <= 0. lmi: the symmetric matrix of expressions
/// (row-major, size x size) is positive semidefinite.
struct Constraint {
  ConstraintKind kind = ConstraintKind::le0;
  QuadExpr body;
  int size = 0;
  std::vector<QuadExpr> matrix;
  std::string label;

  static Constraint le0(QuadExpr body, std::string label);
  static Constraint eq0(QuadExpr body, std::string label);
  static Constraint lmi(std::vector<QuadExpr> matrix, int size, std::string label);

  const QuadExpr& entry(int i, int j) const { return matrix[static_cast<std::size_t>(i * size + j)]; }

  /// Violation at a numeric point: max(0, body) for le0, |body| for eq0 and
  /// max(0, -lambda_min) for lmi.
  double residual(const Eigen::MatrixXd& gram, std::span<const double> fvals) const;
};

class Problem;

/// Registration-ordered construction of a Problem. Not thread-safe; a built
/// Problem is immutable.
class ProblemBuilder {
 public:
  ProblemBuilder();

  BasisLabel add_label(BasisKind kind, std::string tag);
  VectorExpr add_vector(BasisKind kind, std::string tag) { return VectorExpr(add_label(kind, std::move(tag))); }
  ScalarVar add_scalar(std::string tag);

  std::uint64_t id() const { return owner_; }
  int basis_size() const { return static_cast<int>(basis_.size()); }
  int scalar_count() const { return static_cast<int>(fvals_.size()); }

  /// Checked inner product: every label must be registered here.
  QuadExpr inner(const VectorExpr& u, const VectorExpr& v) const;

  void add_constraint(Constraint c);
  void add_constraints(std::vector<Constraint> cs);
  void set_objective(QuadExpr objective);

  /// Validates and freezes. Throws ModelError on dangling references, a
  /// missing objective, an empty constraint list or malformed LMI bodies.
  Problem build() const;

 private:
  void check_vector(const VectorExpr& v) const;

  std::uint64_t owner_;
  std::vector<BasisLabel> basis_;
  std::vector<ScalarVar> fvals_;
  std::vector<Constraint> constraints_;
  QuadExpr objective_;
  bool has_objective_ = false;
};

/// Maximize objective subject to constraints over (G psd, fvals free).
class Problem {
 public:
  const std::vector<BasisLabel>& basis() const { return basis_; }
  const std::vector<ScalarVar>& fvals() const { return fvals_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const QuadExpr& objective() const { return objective_; }
  std::uint64_t owner() const { return owner_; }

  int basis_size() const { return static_cast<int>(basis_.size()); }
  int scalar_count() const { return static_cast<int>(fvals_.size()); }

  /// Largest constraint residual at a numeric point.
  double max_residual(const Eigen::MatrixXd& gram, std::span<const double> fvals) const;

 private:
  friend class ProblemBuilder;
  std::uint64_t owner_ = 0;
  std::vector<BasisLabel> basis_;
  std::vector<ScalarVar> fvals_;
  std::vector<Constraint> constraints_;
  QuadExpr objective_;
};

}  // namespace pepforge
