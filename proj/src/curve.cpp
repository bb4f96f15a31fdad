#include "erlab/curve.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "erlab/errors.hpp"

namespace erlab {

namespace {

void check_compatible(const Curve& a, const Curve& b) {
  if (a.segments() != b.segments() || a.dim() != b.dim()) {
    throw UsageError(fmt::format("rho: curves on different grids ({}x{} vs {}x{})",
                                 a.segments(), a.dim(), b.segments(), b.dim()));
  }
}

double node_distance(const Curve& a, const Curve& b, std::size_t k) {
  const double* x = a.node(k);
  const double* y = b.node(k);
  if (a.dim() == 1) return std::abs(x[0] - y[0]);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

Curve::Curve(std::size_t segments, std::size_t dim, std::vector<double> values)
    : segments_(segments), dim_(dim), values_(std::move(values)) {
  if (segments_ == 0 || dim_ == 0 || values_.size() != (segments_ + 1) * dim_) {
    throw UsageError(fmt::format("Curve: {} values do not fit K = {}, d = {}", values_.size(),
                                 segments_, dim_));
  }
}

Curve Curve::line(std::size_t segments, const Eigen::VectorXd& slope) {
  Curve c(segments, static_cast<std::size_t>(slope.size()));
  for (std::size_t k = 0; k <= segments; ++k) {
    for (std::size_t i = 0; i < c.dim(); ++i) {
      c(k, i) = c.u(k) * slope(static_cast<Eigen::Index>(i));
    }
  }
  return c;
}

Curve Curve::from_slopes(std::span<const double> slopes) {
  Curve c(slopes.size(), 1);
  const double h = 1.0 / static_cast<double>(slopes.size());
  for (std::size_t k = 0; k < slopes.size(); ++k) c(k + 1) = c(k) + h * slopes[k];
  return c;
}

bool Curve::starts_at_zero(double tol) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    if (std::abs(values_[i]) > tol) return false;
  }
  return true;
}

double Curve::sup_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k <= segments_; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += values_[k * dim_ + i] * values_[k * dim_ + i];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double rho(const Curve& a, const Curve& b) {
  check_compatible(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k <= a.segments(); ++k) m = std::max(m, node_distance(a, b, k));
  return m;
}

double rho_capped(const Curve& a, const Curve& b, double cap) {
  check_compatible(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k <= a.segments(); ++k) {
    m = std::max(m, node_distance(a, b, k));
    if (m >= cap) return m;
  }
  return m;
}

void write_curve_csv(std::ostream& os, const Curve& curve) {
  os << 'u';
  for (std::size_t i = 0; i < curve.dim(); ++i) os << ",V_" << (i + 1);
  os << '\n';
  for (std::size_t k = 0; k <= curve.segments(); ++k) {
    fmt::print(os, "{}", curve.u(k));
    for (std::size_t i = 0; i < curve.dim(); ++i) fmt::print(os, ",{}", curve(k, i));
    os << '\n';
  }
}

}  // namespace erlab
