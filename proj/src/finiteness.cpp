#include "erlab/finiteness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "erlab/errors.hpp"

namespace erlab {

double max_mean_cycle(const Eigen::MatrixXd& p, const Eigen::VectorXd& w) {
  const auto n = static_cast<std::size_t>(p.rows());
  if (n == 0 || p.cols() != p.rows() || w.size() != p.rows()) {
    throw UsageError("max_mean_cycle: need a square matrix and one weight per node");
  }
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  // d[k][v]: best weight of a k-edge walk ending at v, from any start.
  std::vector<std::vector<double>> d(n + 1, std::vector<double>(n, kNone));
  std::fill(d[0].begin(), d[0].end(), 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t u = 0; u < n; ++u) {
      if (d[k - 1][u] == kNone) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0) {
          d[k][v] = std::max(d[k][v], d[k - 1][u] + w(static_cast<Eigen::Index>(v)));
        }
      }
    }
  }
  double best = kNone;
  for (std::size_t v = 0; v < n; ++v) {
    if (d[n][v] == kNone) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (d[k][v] == kNone) continue;
      worst = std::min(worst, (d[n][v] - d[k][v]) / static_cast<double>(n - k));
    }
    best = std::max(best, worst);
  }
  if (best == kNone) throw UsageError("max_mean_cycle: graph has no cycle");
  return best;
}

Interval finiteness_domain(const Eigen::MatrixXd& p, const Eigen::VectorXd& g) {
  return {-max_mean_cycle(p, -g), max_mean_cycle(p, g)};
}

namespace {

// Largest cycle ratio sum(g sigma) / sum(sigma): the root of
// lambda -> max mean cycle of (g - lambda) sigma, which is decreasing.
double max_cycle_ratio(const Eigen::MatrixXd& p, const Eigen::VectorXd& g,
                       const Eigen::VectorXd& roof) {
  double lo = g.minCoeff();
  double hi = g.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const Eigen::VectorXd w = (g.array() - mid).matrix().cwiseProduct(roof);
    (max_mean_cycle(p, w) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Interval finiteness_domain_time_weighted(const Eigen::MatrixXd& p, const Eigen::VectorXd& g,
                                         const Eigen::VectorXd& roof) {
  if (roof.size() != g.size()) throw UsageError("finiteness_domain: roof/observable size mismatch");
  return {-max_cycle_ratio(p, -g, roof), max_cycle_ratio(p, g, roof)};
}

}  // namespace erlab
