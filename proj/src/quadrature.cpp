#include "qcorr/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "qcorr/errors.hpp"

namespace qcorr {

QuadratureRule gauss_hermite_normal(int n) {
  if (n < 1) throw ValidationError("quadrature needs at least one node");
  // Jacobi matrix of He_k: x He_k = He_{k+1} + k He_{k-1}.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jac(k, k - 1) = std::sqrt(static_cast<double>(k));
    jac(k - 1, k) = jac(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  // Symmetrise nodes against eigen-solver roundoff.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace qcorr
