#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace erlab {

/// Path [0,1] -> R^d sampled at u_k = k/K, k = 0..K, read as piecewise
/// linear between nodes. Node values are stored row-major.
class Curve {
 public:
  Curve() = default;
  Curve(std::size_t segments, std::size_t dim)
      : segments_(segments), dim_(dim), values_((segments + 1) * dim, 0.0) {}
  Curve(std::size_t segments, std::size_t dim, std::vector<double> values);

  /// u -> u * slope.
  static Curve line(std::size_t segments, const Eigen::VectorXd& slope);
  /// Scalar curve with the given per-segment slopes, starting at 0.
  static Curve from_slopes(std::span<const double> slopes);

  std::size_t segments() const { return segments_; }
  std::size_t dim() const { return dim_; }
  double u(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(segments_);
  }
  double* node(std::size_t k) { return values_.data() + k * dim_; }
  const double* node(std::size_t k) const { return values_.data() + k * dim_; }
  double operator()(std::size_t k, std::size_t i = 0) const { return values_[k * dim_ + i]; }
  double& operator()(std::size_t k, std::size_t i = 0) { return values_[k * dim_ + i]; }
  const std::vector<double>& values() const { return values_; }

  bool starts_at_zero(double tol = 0.0) const;
  /// max_k |gamma(u_k)|.
  double sup_norm() const;

 private:
  std::size_t segments_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Uniform metric: max over nodes of the Euclidean distance. For piecewise
/// linear curves on a common grid this is the sup over all u in [0,1].
double rho(const Curve& a, const Curve& b);

/// rho(a, b) when it is below `cap`; otherwise some value >= cap, found
/// without scanning the remaining nodes.
double rho_capped(const Curve& a, const Curve& b, double cap);

/// CSV with columns u, V_1..V_d.
void write_curve_csv(std::ostream& os, const Curve& curve);

}  // namespace erlab
