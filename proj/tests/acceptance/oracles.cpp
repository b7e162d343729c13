#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acceptance {

double huber_gradient_gap(int N, double L, double R) {
  const double tau = L * R / (2.0 * N + 1.0);
  auto f = [&](double x) {
    const double a = std::abs(x);
    return a >= tau / L ? tau * a - tau * tau / (2.0 * L) : 0.5 * L * x * x;
  };
  auto df = [&](double x) { return std::abs(x) >= tau / L ? tau * (x > 0 ? 1.0 : -1.0) : L * x; };
  double x = R;
  for (int i = 0; i < N; ++i) x -= df(x) / L;
  return f(x) - f(0.0);
}

std::pair<bool, bool> region_cell(double g2, double f2, double L, double tol) {
  const double x1 = 0.0, x2 = 1.0, g1 = 1.0, f1 = 0.0;
  // Convexity both ways and the Lipschitz bound on gradients.
  const bool grey = f2 >= f1 + g1 * (x2 - x1) - tol && f1 >= f2 + g2 * (x1 - x2) - tol &&
                    (g2 - g1) * (g2 - g1) <= L * L * (x2 - x1) * (x2 - x1) + tol;
  // Smooth convex interpolation both ways.
  const double d = (g2 - g1) * (g2 - g1) / (2.0 * L);
  const bool black = f2 >= f1 + g1 * (x2 - x1) + d - tol && f1 >= f2 + g2 * (x1 - x2) + d - tol;
  return {grey, black};
}

Eigen::MatrixXd random_contraction(int rows, int cols, double L, std::mt19937& rng) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = n01(rng);
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
  // Every tenth draw sits on the boundary sigma_max = L.
  const double target = rng() % 10 == 0 ? L : L * frac(rng);
  return M * (target / s);
}

Eigen::MatrixXd random_network_matrix(int agents, double lam, std::mt19937& rng) {
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(agents));
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(agents, agents);
  const int terms = 1 + static_cast<int>(rng() % 3);
  for (int t = 0; t < terms; ++t) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int a = 0; a < agents; ++a) {
      P(a, perm[static_cast<std::size_t>(a)]) += 0.5 / terms;
      P(perm[static_cast<std::size_t>(a)], a) += 0.5 / terms;
    }
  }
  // P is symmetric doubly stochastic, so its spectrum lies in [-1, 1].
  const double t = lam * frac(rng);
  return (1.0 - t) * Eigen::MatrixXd::Constant(agents, agents, 1.0 / agents) + t * P;
}

double SoftplusFunction::value(double x) const {
  double v = 0.5 * mu * x * x;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    const double z = slope[k] * x + shift[k];
    v += weight[k] * (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
  }
  return v;
}

double SoftplusFunction::derivative(double x) const {
  double d = mu * x;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    const double z = slope[k] * x + shift[k];
    d += weight[k] * slope[k] / (1.0 + std::exp(-z));
  }
  return d;
}

double SoftplusFunction::curvature_bound() const {
  double L = mu;
  for (std::size_t k = 0; k < weight.size(); ++k) L += 0.25 * weight[k] * slope[k] * slope[k];
  return L;
}

SoftplusFunction random_softplus(std::mt19937& rng) {
  std::uniform_real_distribution<double> w(0.1, 2.0), a(0.5, 3.0), b(-2.0, 2.0), m(0.0, 0.5);
  SoftplusFunction f;
  const int terms = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < terms; ++k) {
    f.weight.push_back(w(rng));
    // Slopes bounded away from zero keep L - mu from collapsing.
    f.slope.push_back(rng() % 2 ? a(rng) : -a(rng));
    f.shift.push_back(b(rng));
  }
  f.mu = rng() % 2 ? m(rng) : 0.0;
  return f;
}

}  // namespace acceptance
