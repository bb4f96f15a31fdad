#include "erlab/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "erlab/errors.hpp"

namespace erlab {

namespace {

constexpr double kBudgetSlack = 1e-12;
constexpr double kOutsidePenalty = 1e6;
constexpr double kNetBudget = 1e7;

struct SlopeRange {
  double lo;
  double hi;
};

SlopeRange slope_range(const CurveSetSpec& set) {
  const RateModel& m = *set.rate;
  return {std::max(m.beta_minus(), -set.slope_bound), std::min(m.beta_plus(), set.slope_bound)};
}

// Taut string through the tube [lower_k, upper_k], k = 0..K, with both
// endpoints pinned (lower = upper there). It minimizes sum phi(slope) for
// every convex phi simultaneously.
void taut_string(const std::vector<double>& lower, const std::vector<double>& upper,
                 std::vector<double>& y) {
  const std::size_t k_end = lower.size() - 1;
  y.assign(lower.size(), 0.0);
  y[0] = lower[0];
  std::size_t i = 0;
  while (i < k_end) {
    const double ya = y[i];
    double smin = -std::numeric_limits<double>::infinity();
    double smax = std::numeric_limits<double>::infinity();
    std::size_t jmin = i;
    std::size_t jmax = i;
    std::size_t next = k_end;
    double slope = 0.0;
    bool on_upper = false;
    for (std::size_t j = i + 1; j <= k_end; ++j) {
      const double span = static_cast<double>(j - i);
      const double lo_s = (lower[j] - ya) / span;
      const double hi_s = (upper[j] - ya) / span;
      if (lo_s > smax) {  // wraps over the ceiling at jmax, slope then rises
        next = jmax;
        slope = smax;
        on_upper = true;
        break;
      }
      if (hi_s < smin) {  // wraps under the floor at jmin, slope then falls
        next = jmin;
        slope = smin;
        break;
      }
      if (lo_s > smin) {
        smin = lo_s;
        jmin = j;
      }
      if (hi_s < smax) {
        smax = hi_s;
        jmax = j;
      }
      if (j == k_end) slope = 0.5 * (smin + smax);
    }
    for (std::size_t k = i + 1; k <= next; ++k) y[k] = ya + slope * static_cast<double>(k - i);
    if (next < k_end) y[next] = on_upper ? upper[next] : lower[next];
    else y[k_end] = lower[k_end];
    i = next;
  }
}

class TubeSolver {
 public:
  TubeSolver(const Curve& v, const CurveSetSpec& set, double delta)
      : set_(set), range_(slope_range(set)), k_(v.segments()) {
    lower_.resize(k_ + 1);
    upper_.resize(k_ + 1);
    for (std::size_t k = 1; k < k_; ++k) {
      lower_[k] = v(k) - delta;
      upper_[k] = v(k) + delta;
    }
    end_lo_ = v(k_) - delta;
    end_hi_ = v(k_) + delta;
    edge_lo_ = set.rate->rate(range_.lo);
    edge_hi_ = set.rate->rate(range_.hi);
  }

  // Minimum over the free endpoint of the true action; +inf when infeasible.
  double min_action() {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = end_lo_;
    double hi = end_hi_;
    double c = hi - r * (hi - lo);
    double d = lo + r * (hi - lo);
    double fc = extended_cost(c);
    double fd = extended_cost(d);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
      if (fc <= fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - r * (hi - lo);
        fc = extended_cost(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + r * (hi - lo);
        fd = extended_cost(d);
      }
    }
    return true_cost(0.5 * (lo + hi));
  }

 private:
  void solve(double end) {
    lower_[0] = upper_[0] = 0.0;
    lower_[k_] = upper_[k_] = end;
    taut_string(lower_, upper_, y_);
  }

  // Convex extension of I past the slope range keeps the search well posed.
  double extended_rate(double s) const {
    if (s > range_.hi) return edge_hi_ + kOutsidePenalty * (s - range_.hi);
    if (s < range_.lo) return edge_lo_ + kOutsidePenalty * (range_.lo - s);
    return set_.rate->rate(s);
  }

  double extended_cost(double end) {
    solve(end);
    const double scale = static_cast<double>(k_);
    double total = 0.0;
    for (std::size_t k = 0; k < k_; ++k) total += extended_rate(scale * (y_[k + 1] - y_[k]));
    return total / scale;
  }

  double true_cost(double end) {
    solve(end);
    const double scale = static_cast<double>(k_);
    double total = 0.0;
    for (std::size_t k = 0; k < k_; ++k) total += set_.rate->rate(scale * (y_[k + 1] - y_[k]));
    return total / scale;
  }

  const CurveSetSpec& set_;
  SlopeRange range_;
  std::size_t k_;
  std::vector<double> lower_, upper_, y_;
  double end_lo_ = 0.0, end_hi_ = 0.0;
  double edge_lo_ = 0.0, edge_hi_ = 0.0;
};

void check_curve(const Curve& v, const CurveSetSpec& set) {
  if (!set.rate) throw UsageError("level set: missing rate model");
  if (v.dim() != 1 || set.rate->dim() != 1) {
    throw UsageError("level set: only scalar curves (d = 1) are supported");
  }
  if (v.segments() != set.segments) {
    throw UsageError(fmt::format("level set: curve has K = {}, set has K = {}", v.segments(),
                                 set.segments));
  }
  if (!v.starts_at_zero(1e-12)) throw UsageError("level set: curve must start at 0");
}

}  // namespace

CurveSetSpec make_curve_set(double a, std::shared_ptr<const RateModel> rate,
                            std::size_t segments) {
  if (!(a >= 0.0)) throw UsageError(fmt::format("curve set: budget a = {} must be >= 0", a));
  if (segments == 0) throw UsageError("curve set: K must be >= 1");
  const double cap = 2.0 * rate->l1();
  return {a, std::move(rate), segments, cap};
}

double tube_min_action(const Curve& v, const CurveSetSpec& set, double delta) {
  check_curve(v, set);
  return TubeSolver(v, set, delta).min_action();
}

bool within_level_set(const Curve& v, const CurveSetSpec& set, double delta) {
  check_curve(v, set);
  // V itself is a member when its own action fits the budget.
  if (action(v, *set.rate) <= set.a + kBudgetSlack) return true;
  return TubeSolver(v, set, delta).min_action() <= set.a + kBudgetSlack;
}

double level_set_distance(const Curve& v, const CurveSetSpec& set) {
  check_curve(v, set);
  if (action(v, *set.rate) <= set.a + kBudgetSlack) return 0.0;
  // The zero curve is in Phi(a) and sits within sup|V| of V.
  double lo = 0.0;
  double hi = v.sup_norm();
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (TubeSolver(v, set, mid).min_action() <= set.a + kBudgetSlack ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> net_slope_grid(const CurveSetSpec& set, double delta) {
  if (!(delta > 0.0)) throw UsageError(fmt::format("level_set_net: delta = {} must be > 0", delta));
  const SlopeRange r = slope_range(set);
  const double pitch = 0.5 * delta;
  const auto jlo = static_cast<long>(std::ceil(r.lo / pitch - 1e-9));
  const auto jhi = static_cast<long>(std::floor(r.hi / pitch + 1e-9));
  std::vector<double> grid;
  for (long j = jlo; j <= jhi; ++j) grid.push_back(static_cast<double>(j) * pitch);
  return grid;
}

std::vector<Curve> level_set_net(const CurveSetSpec& set, double delta) {
  if (!set.rate || set.rate->dim() != 1) {
    throw UsageError("level_set_net: only scalar curves (d = 1) are supported");
  }
  const std::vector<double> grid = net_slope_grid(set, delta);
  const std::size_t m = grid.size();
  const std::size_t k = set.segments;
  const double candidates = std::pow(static_cast<double>(m), static_cast<double>(k));
  if (candidates > kNetBudget) {
    throw BudgetError(fmt::format(
        "level_set_net: {} slopes over K = {} segments gives {:.3g} candidates (> 1e7); "
        "increase delta or decrease K",
        m, k, candidates));
  }
  std::vector<double> cost(m);
  for (std::size_t i = 0; i < m; ++i) cost[i] = set.rate->rate_exact(grid[i]);

  std::vector<Curve> net;
  std::vector<std::size_t> digit(k, 0);
  std::vector<double> slopes(k);
  const double scale = static_cast<double>(k);
  while (true) {
    double total = 0.0;
    for (std::size_t s = 0; s < k; ++s) total += cost[digit[s]];
    if (total / scale <= set.a + 1e-9) {
      for (std::size_t s = 0; s < k; ++s) slopes[s] = grid[digit[s]];
      Curve c = Curve::from_slopes(slopes);
      bool covered = false;
      for (const Curve& kept : net) {
        if (rho_capped(c, kept, delta) < delta) {
          covered = true;
          break;
        }
      }
      if (!covered) net.push_back(std::move(c));
    }
    // Odometer with the first segment most significant.
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++digit[pos] < m) break;
      digit[pos] = 0;
      if (pos == 0) return net;
    }
    if (k == 0) return net;
  }
}

}  // namespace erlab
