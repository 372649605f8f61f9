#pragma once

#include <vector>

namespace qcorr {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for expectations over a standard normal variable:
// E[f(Z)] ~ sum_i w_i f(x_i), weights summing to one.  Computed with the
// Golub-Welsch eigenvalue method on the probabilists' Hermite recurrence.
QuadratureRule gauss_hermite_normal(int n);

}  // namespace qcorr
