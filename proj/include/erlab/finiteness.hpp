#pragma once

#include <Eigen/Dense>

namespace erlab {

struct Interval {
  double lower;
  double upper;
  bool contains(double x, double tol = 0.0) const { return x >= lower - tol && x <= upper + tol; }
};

/// Largest mean of w over the nodes of a cycle in the graph of positive
/// transitions (Karp). Walks are scored by the weight of each node entered.
double max_mean_cycle(const Eigen::MatrixXd& transition, const Eigen::VectorXd& w);

/// [beta-, beta+] for the scalar observable g: min and max cycle means. The
/// observable is used as given; callers pass the centered one.
Interval finiteness_domain(const Eigen::MatrixXd& transition, const Eigen::VectorXd& g);

/// Suspension analogue: extreme cycle ratios sum(g sigma) / sum(sigma).
Interval finiteness_domain_time_weighted(const Eigen::MatrixXd& transition,
                                         const Eigen::VectorXd& g, const Eigen::VectorXd& roof);

}  // namespace erlab
