#pragma once

#include <Eigen/Dense>

namespace erlab {

struct DvInner {
  double value;       // J(nu)
  Eigen::VectorXd w;  // maximizer, w = ln u up to an additive constant
};

/// J(nu) = sup_w sum_j nu_j (w_j - ln (P e^w)_j), solved by damped Newton
/// from w = 0.
DvInner dv_functional(const Eigen::MatrixXd& transition, const Eigen::VectorXd& nu);

/// min J(nu) over probability vectors with sum nu_j G_j = beta, where G is
/// centered under the stationary law. Projected gradient with backtracking;
/// throws DomainError unless beta lies strictly inside (beta-, beta+).
double dv_rate(const Eigen::MatrixXd& transition, const Eigen::VectorXd& values, double beta);

/// Euclidean projection onto {nu >= 0, sum nu = 1, sum nu g = beta}.
Eigen::VectorXd project_simplex_slice(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                      double beta);

}  // namespace erlab
