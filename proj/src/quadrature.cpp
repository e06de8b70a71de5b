#include "gradclust/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace gradclust {

// Nodes start from the eigenvalues of the Jacobi matrix (Golub-Welsch) and
// are polished by Newton steps on the orthonormal Hermite recurrence, which
// also yields the weights without relying on eigenvector accuracy.
GaussHermiteRule gauss_hermite(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_hermite: order must be positive");
  const int n = static_cast<int>(order);

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    jacobi(j, j - 1) = jacobi(j - 1, j) = std::sqrt(j / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd guess = solver.eigenvalues();

  const double pim4 = std::pow(M_PI, -0.25);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < n; ++i) {
    double z = guess(i);
    double pp = 0.0;
    for (int it = 0; it < 8; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = M_SQRT2 * z;
    rule.weights[i] = 2.0 / (pp * pp) / std::sqrt(M_PI);
  }
  return rule;
}

const GaussHermiteRule& default_hermite_rule() {
  static const GaussHermiteRule rule = gauss_hermite(64);
  return rule;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace gradclust
