#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "erlab/curve.hpp"
#include "erlab/rate_model.hpp"

namespace erlab {

/// Phi(a) = {gamma : gamma(0) = 0, S(gamma) <= a}, restricted to curves that
/// are piecewise linear on the K-grid. Slopes are capped at 2 L1.
struct CurveSetSpec {
  double a = 0.0;
  std::shared_ptr<const RateModel> rate;
  std::size_t segments = 8;
  double slope_bound = 0.0;

  CurveSetSpec with_budget(double budget) const {
    CurveSetSpec s = *this;
    s.a = budget;
    return s;
  }
};

CurveSetSpec make_curve_set(double a, std::shared_ptr<const RateModel> rate, std::size_t segments);

/// Minimum of S over piecewise-linear curves with gamma(0) = 0 and
/// |gamma(u_k) - V(u_k)| <= delta at every node (scalar curves).
double tube_min_action(const Curve& v, const CurveSetSpec& set, double delta);

/// rho(V, Phi(a)) for scalar curves, bisection on delta to 1e-6.
double level_set_distance(const Curve& v, const CurveSetSpec& set);

/// True when some member of Phi(a) lies within delta of V.
bool within_level_set(const Curve& v, const CurveSetSpec& set, double delta);

/// Slopes j * delta / 2 inside the finiteness domain and the 2 L1 cap.
std::vector<double> net_slope_grid(const CurveSetSpec& set, double delta);

/// delta-net of the slope-discretized Phi(a): grid slope tuples with mean
/// rate <= a, greedily thinned in lexicographic order so each candidate is
/// within delta of a retained curve. Throws BudgetError above 1e7 candidates.
std::vector<Curve> level_set_net(const CurveSetSpec& set, double delta);

}  // namespace erlab
