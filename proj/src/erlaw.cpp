#include "erlab/erlaw.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "erlab/errors.hpp"

namespace erlab {

PrefixSums::PrefixSums(const FastPath& path, const Eigen::MatrixXd& values)
    : n_(path.size()), dim_(static_cast<std::size_t>(values.cols())), sums_((n_ + 1) * dim_, 0.0) {
  for (std::size_t j = 0; j < n_; ++j) {
    const auto s = static_cast<Eigen::Index>(path.states[j]);
    for (std::size_t i = 0; i < dim_; ++i) {
      sums_[(j + 1) * dim_ + i] = sums_[j * dim_ + i] + values(s, static_cast<Eigen::Index>(i));
    }
  }
}

PrefixSums::PrefixSums(std::span<const double> values)
    : n_(values.size()), dim_(1), sums_(n_ + 1, 0.0) {
  for (std::size_t j = 0; j < n_; ++j) sums_[j + 1] = sums_[j] + values[j];
}

Curve partial_sum_curve(const PrefixSums& sums, std::size_t offset, double r,
                        std::size_t segments) {
  if (!(r > 0.0)) throw UsageError(fmt::format("partial_sum_curve: r = {} must be > 0", r));
  const auto last = static_cast<std::size_t>(std::floor(r));
  if (offset + last > sums.size()) {
    throw RangeError(fmt::format("partial_sum_curve: window [{}, {}) exceeds path length {}",
                                 offset, offset + last, sums.size()));
  }
  Curve c(segments, sums.dim());
  const double* base = sums.at(offset);
  for (std::size_t k = 1; k <= segments; ++k) {
    const auto m = static_cast<std::size_t>(
        std::floor(r * static_cast<double>(k) / static_cast<double>(segments)));
    const double* top = sums.at(offset + m);
    for (std::size_t i = 0; i < sums.dim(); ++i) c(k, i) = (top[i] - base[i]) / r;
  }
  return c;
}

DriftCentering DriftCentering::constant(Eigen::VectorXd drift) {
  DriftCentering d;
  d.constant_ = std::move(drift);
  return d;
}

DriftCentering DriftCentering::averaged(const Trajectory& avg, const AveragedField& field) {
  DriftCentering d;
  d.avg_ = &avg;
  d.field_ = &field;
  return d;
}

Eigen::VectorXd DriftCentering::at(double fast_time) const {
  if (!avg_) return constant_;
  return (*field_)(averaged_state_at(*avg_, *field_, fast_time, &hint_));
}

namespace {

void fill_er_nodes(Curve& out, std::size_t segments, std::size_t dim, const double* x0,
                   const Eigen::VectorXd& drift, double scale,
                   const std::function<const double*(std::size_t)>& node) {
  if (out.segments() != segments || out.dim() != dim) out = Curve(segments, dim);
  for (std::size_t i = 0; i < dim; ++i) out(0, i) = 0.0;
  for (std::size_t k = 1; k <= segments; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(segments);
    const double* x = node(k);
    for (std::size_t i = 0; i < dim; ++i) {
      out(k, i) = (x[i] - x0[i]) / scale - u * drift(static_cast<Eigen::Index>(i));
    }
  }
}

std::size_t window_steps(double b, std::size_t k, std::size_t segments) {
  return static_cast<std::size_t>(
      std::floor(b * static_cast<double>(k) / static_cast<double>(segments)));
}

}  // namespace

Curve er_curve(const Trajectory& traj, const DriftCentering& centering, const WindowParams& wp,
               std::size_t l) {
  const double b = wp.window(l);
  const std::size_t top = l + window_steps(b, wp.segments, wp.segments);
  if (top >= traj.size()) {
    throw RangeError(fmt::format("er_curve: needs trajectory index {}, have {}", top, traj.size()));
  }
  Curve out(wp.segments, traj.dim());
  fill_er_nodes(out, wp.segments, traj.dim(), traj.state(l).data(),
                centering.at(static_cast<double>(l)), wp.epsilon * b, [&](std::size_t k) {
                  return traj.state(l + window_steps(b, k, wp.segments)).data();
                });
  return out;
}

Curve er_curve_continuous(const Trajectory& traj, const DynamicsSpec& dyn, const FastPath& path,
                          const DriftCentering& centering, const WindowParams& wp,
                          std::size_t l) {
  const double b = wp.window(l);
  const double t0 = static_cast<double>(l);
  if (t0 + b > traj.times().back()) {
    throw RangeError(fmt::format("er_curve: needs time {}, trajectory ends at {}", t0 + b,
                                 traj.times().back()));
  }
  const Eigen::VectorXd x0 = state_at(traj, dyn, path, t0);
  std::vector<Eigen::VectorXd> nodes(wp.segments + 1);
  for (std::size_t k = 1; k <= wp.segments; ++k) {
    nodes[k] = state_at(traj, dyn, path,
                        t0 + b * static_cast<double>(k) / static_cast<double>(wp.segments));
  }
  Curve out(wp.segments, traj.dim());
  fill_er_nodes(out, wp.segments, traj.dim(), x0.data(), centering.at(t0), wp.epsilon * b,
                [&](std::size_t k) { return nodes[k].data(); });
  return out;
}

CurveList::CurveList(std::vector<Curve> curves, std::vector<double> times)
    : curves_(std::move(curves)), times_(std::move(times)) {
  if (curves_.empty()) throw UsageError("CurveList: empty family");
  if (times_.empty()) {
    for (std::size_t i = 0; i < curves_.size(); ++i) times_.push_back(static_cast<double>(i));
  }
  if (times_.size() != curves_.size()) throw UsageError("CurveList: one time per curve required");
}

DiscreteErFamily::DiscreteErFamily(const Trajectory& traj, const DriftCentering& centering,
                                   WindowParams wp)
    : traj_(traj), centering_(centering), wp_(std::move(wp)) {
  wp_.validate();
  stride_ = wp_.effective_stride();
  count_ = wp_.last_index() / stride_ + 1;
  const std::size_t last = index(count_ - 1);
  const std::size_t need = last + static_cast<std::size_t>(std::floor(wp_.max_window()));
  if (need >= traj_.size()) {
    throw RangeError(fmt::format(
        "er family: horizon T = {} with window {} needs {} steps, trajectory has {}", wp_.horizon,
        wp_.max_window(), need, traj_.size() - 1));
  }
}

void DiscreteErFamily::curve_into(std::size_t i, Curve& out) const {
  const std::size_t l = index(i);
  const double b = wp_.window(l);
  fill_er_nodes(out, wp_.segments, traj_.dim(), traj_.state(l).data(),
                centering_.at(static_cast<double>(l)), wp_.epsilon * b, [&](std::size_t k) {
                  return traj_.state(l + window_steps(b, k, wp_.segments)).data();
                });
}

ContinuousErFamily::ContinuousErFamily(const Trajectory& traj, const DynamicsSpec& dyn,
                                       const FastPath& path, const DriftCentering& centering,
                                       WindowParams wp)
    : traj_(traj), dyn_(dyn), path_(path), centering_(centering), wp_(std::move(wp)) {
  wp_.validate();
  stride_ = wp_.effective_stride();
  count_ = wp_.last_index() / stride_ + 1;
  const double need = static_cast<double>(index(count_ - 1)) + wp_.max_window();
  if (need > traj_.times().back()) {
    throw RangeError(fmt::format("er family: needs time {}, trajectory ends at {}", need,
                                 traj_.times().back()));
  }
  hints_.assign(wp_.segments + 1, 0);
}

void ContinuousErFamily::curve_into(std::size_t i, Curve& out) const {
  const std::size_t l = index(i);
  const double b = wp_.window(l);
  const double t0 = static_cast<double>(l);
  std::vector<Eigen::VectorXd> nodes(wp_.segments + 1);
  for (std::size_t k = 0; k <= wp_.segments; ++k) {
    nodes[k] = state_at(traj_, dyn_, path_,
                        t0 + b * static_cast<double>(k) / static_cast<double>(wp_.segments),
                        &hints_[k]);
  }
  fill_er_nodes(out, wp_.segments, traj_.dim(), nodes[0].data(), centering_.at(t0),
                wp_.epsilon * b, [&](std::size_t k) { return nodes[k].data(); });
}

ClassicMax er_classic_max(std::span<const double> values, std::size_t n, std::size_t k) {
  if (n > values.size()) {
    throw UsageError(fmt::format("er_classic_max: n = {} exceeds {} values", n, values.size()));
  }
  if (k == 0 || k > n) {
    throw UsageError(fmt::format("er_classic_max: window k = {} must lie in [1, n = {}]", k, n));
  }
  const PrefixSums sums(values.first(n));
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t m = 0; m + k <= n; ++m) {
    const double inc = *sums.at(m + k) - *sums.at(m);
    if (inc > best) {
      best = inc;
      arg = m;
    }
  }
  return {best, best / static_cast<double>(k), arg};
}

namespace {

SupResult upper_impl(const CurveFamily& family, const CurveSetSpec& set,
                     const WindowParams* wp) {
  SupResult best{0.0, family.size() ? family.time(0) : 0.0, 0};
  Curve v;
  for (std::size_t i = 0; i < family.size(); ++i) {
    family.curve_into(i, v);
    // rho(V, Phi) <= sup|V| since the zero curve is in Phi.
    if (v.sup_norm() <= best.value) continue;
    const CurveSetSpec s = wp ? set.with_budget(1.0 / wp->c_at(family.index(i))) : set;
    if (best.value > 0.0 && within_level_set(v, s, best.value)) continue;
    const double d = level_set_distance(v, s);
    if (d > best.value) best = {d, family.time(i), i};
  }
  return best;
}

}  // namespace

SupResult upper_statistic(const CurveFamily& family, const CurveSetSpec& set) {
  return upper_impl(family, set, nullptr);
}

SupResult upper_statistic(const CurveFamily& family, const CurveSetSpec& set,
                          const WindowParams& wp) {
  return upper_impl(family, set, &wp);
}

LowerResult lower_statistic(const CurveFamily& family, const std::vector<Curve>& net) {
  if (net.empty()) throw UsageError("lower_statistic: empty net");
  if (family.size() == 0) throw UsageError("lower_statistic: empty family");
  std::vector<double> closest(net.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> where(net.size(), 0);
  Curve v;
  for (std::size_t i = 0; i < family.size(); ++i) {
    family.curve_into(i, v);
    for (std::size_t g = 0; g < net.size(); ++g) {
      const double d = rho_capped(v, net[g], closest[g]);
      if (d < closest[g]) {
        closest[g] = d;
        where[g] = i;
      }
    }
  }
  std::size_t worst = 0;
  for (std::size_t g = 1; g < net.size(); ++g) {
    if (closest[g] > closest[worst]) worst = g;
  }
  return {closest[worst], worst, family.time(where[worst])};
}

double hausdorff(const std::vector<Curve>& a, const std::vector<Curve>& b) {
  if (a.empty() || b.empty()) throw UsageError("hausdorff: both sets must be nonempty");
  const auto directed = [](const std::vector<Curve>& x, const std::vector<Curve>& y) {
    double sup = 0.0;
    for (const Curve& p : x) {
      double inf = std::numeric_limits<double>::infinity();
      for (const Curve& q : y) inf = std::min(inf, rho_capped(p, q, inf));
      sup = std::max(sup, inf);
    }
    return sup;
  };
  return std::max(directed(a, b), directed(b, a));
}

HausdorffReport hausdorff_level_set(const CurveFamily& family, const CurveSetSpec& set,
                                    const std::vector<Curve>& net, double delta) {
  if (family.size() == 0 || net.empty()) throw UsageError("hausdorff: both sets must be nonempty");
  const double exact = upper_statistic(family, set).value;
  const double sampled = lower_statistic(family, net).value;
  return {std::max(exact, sampled), exact, sampled, delta};
}

SupResult endpoint_statistic(const CurveFamily& family, const RateModel& model, double beta) {
  if (family.dim() != 1 || model.dim() != 1) {
    throw UsageError("endpoint_statistic: requires d = 1");
  }
  if (!model.finite_at(beta)) {
    throw DomainError(fmt::format("endpoint_statistic: I({}) is infinite (domain [{}, {}])", beta,
                                  model.beta_minus(), model.beta_plus()));
  }
  if (family.size() == 0) throw UsageError("endpoint_statistic: empty family");
  SupResult best{-std::numeric_limits<double>::infinity(), 0.0, 0};
  Curve v;
  for (std::size_t i = 0; i < family.size(); ++i) {
    family.curve_into(i, v);
    const double end = v(v.segments());
    if (end > best.value) best = {end, family.time(i), i};
  }
  return best;
}

}  // namespace erlab
