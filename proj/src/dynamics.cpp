#include "erlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

std::string_view to_string(FieldForm form) {
  switch (form) {
    case FieldForm::affine:
      return "affine";
    case FieldForm::clamped_affine:
      return "clamped_affine";
  }
  return "?";
}

FieldForm field_form_from_string(std::string_view name) {
  if (name == "affine") return FieldForm::affine;
  if (name == "clamped_affine") return FieldForm::clamped_affine;
  throw ValidationError(fmt::format(
      "dynamics.form: unknown form '{}' (expected affine or clamped_affine)", name));
}

namespace {

// Classical RK4 for x' = f(x) with scratch buffers reused across steps.
class Rk4 {
 public:
  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  template <class F>
  void step(double* x, double h, F&& f) {
    const std::size_t d = k1_.size();
    f(x, k1_.data());
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    f(tmp_.data(), k2_.data());
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    f(tmp_.data(), k3_.data());
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + h * k3_[i];
    f(tmp_.data(), k4_.data());
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

// Row s holds C y_s + b for driver state s.
Eigen::MatrixXd input_table(const DynamicsSpec& dyn, const ProcessSpec& spec) {
  if (spec.value_dim() != dyn.input_dim()) {
    throw ValidationError(fmt::format(
        "dynamics: field expects {}-dimensional state values, process has {}",
        dyn.input_dim(), spec.value_dim()));
  }
  Eigen::MatrixXd table(spec.values.rows(), static_cast<Eigen::Index>(dyn.dim()));
  for (Eigen::Index s = 0; s < spec.values.rows(); ++s) {
    table.row(s) = dyn.input_part(spec.values.row(s).transpose()).transpose();
  }
  return table;
}

void check_start(const DynamicsSpec& dyn, const Eigen::VectorXd& x0, double epsilon) {
  if (static_cast<std::size_t>(x0.size()) != dyn.dim()) {
    throw UsageError(
        fmt::format("dynamics: x0 has dimension {}, field has {}", x0.size(), dyn.dim()));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw UsageError(fmt::format("dynamics: epsilon = {} must be finite and > 0", epsilon));
  }
}

bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

}  // namespace

DynamicsSpec DynamicsSpec::affine(Eigen::MatrixXd a, Eigen::MatrixXd c, Eigen::VectorXd b,
                                  double l1, double state_radius) {
  DynamicsSpec d;
  d.form_ = FieldForm::affine;
  d.a_ = std::move(a);
  d.c_ = std::move(c);
  d.b_ = std::move(b);
  d.l1_ = l1;
  d.radius_ = state_radius;
  d.check_shapes();
  return d;
}

DynamicsSpec DynamicsSpec::clamped_affine(Eigen::MatrixXd a, double saturation,
                                          Eigen::MatrixXd c, Eigen::VectorXd b, double l1,
                                          double state_radius) {
  if (!(saturation > 0.0) || !std::isfinite(saturation)) {
    throw ValidationError(
        fmt::format("dynamics.saturation: {} must be finite and > 0", saturation));
  }
  DynamicsSpec d = affine(std::move(a), std::move(c), std::move(b), l1, state_radius);
  d.form_ = FieldForm::clamped_affine;
  d.saturation_ = saturation;
  return d;
}

DynamicsSpec DynamicsSpec::observable(double l1, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return affine(Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n),
                Eigen::VectorXd::Zero(n), l1);
}

void DynamicsSpec::check_shapes() const {
  const auto d = a_.rows();
  if (d == 0 || a_.cols() != d) {
    throw ValidationError(
        fmt::format("dynamics.A: must be square and nonempty, got {}x{}", a_.rows(), a_.cols()));
  }
  if (c_.rows() != d || c_.cols() == 0) {
    throw ValidationError(
        fmt::format("dynamics.C: expected {} rows and >= 1 column, got {}x{}", d, c_.rows(),
                    c_.cols()));
  }
  if (b_.size() != d) {
    throw ValidationError(fmt::format("dynamics.b: expected length {}, got {}", d, b_.size()));
  }
  if (!a_.allFinite() || !c_.allFinite() || !b_.allFinite()) {
    throw ValidationError("dynamics: parameters must be finite");
  }
  if (!(l1_ > 0.0) || !std::isfinite(l1_)) {
    throw ValidationError(fmt::format("dynamics.L1: {} must be finite and > 0", l1_));
  }
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw ValidationError(fmt::format("dynamics.radius: {} must be finite and > 0", radius_));
  }
}

void DynamicsSpec::state_part(const double* x, double* out) const {
  const auto d = a_.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += a_(i, j) * x[j];
    if (form_ == FieldForm::clamped_affine) s = std::clamp(s, -saturation_, saturation_);
    out[i] = s;
  }
}

Eigen::VectorXd DynamicsSpec::input_part(const Eigen::VectorXd& y) const {
  return c_ * y + b_;
}

Eigen::VectorXd DynamicsSpec::operator()(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(a_.rows());
  state_part(x.data(), out.data());
  return out + input_part(y);
}

void DynamicsSpec::certify(const Eigen::MatrixXd& state_values, std::uint64_t seed,
                           std::size_t samples) const {
  if (static_cast<std::size_t>(state_values.cols()) != input_dim()) {
    throw ValidationError(fmt::format(
        "dynamics: field expects {}-dimensional state values, process has {}", input_dim(),
        state_values.cols()));
  }
  const double slack = 1.0 + 1e-12;
  const auto d = static_cast<Eigen::Index>(dim());
  Rng rng(seed);
  Eigen::VectorXd x(d), z(d);
  for (std::size_t n = 0; n < samples; ++n) {
    for (Eigen::Index i = 0; i < d; ++i) {
      x(i) = radius_ * (2.0 * rng.uniform() - 1.0);
      z(i) = radius_ * (2.0 * rng.uniform() - 1.0);
    }
    const auto s = static_cast<Eigen::Index>(
        rng() % static_cast<std::uint64_t>(state_values.rows()));
    const Eigen::VectorXd y = state_values.row(s).transpose();
    const Eigen::VectorXd bx = (*this)(x, y);
    const Eigen::VectorXd bz = (*this)(z, y);
    if (bx.norm() > l1_ * slack) {
      throw ValidationError(fmt::format(
          "dynamics.L1: |B(x, y)| = {:.6g} exceeds L1 = {} at sample {} (state {})", bx.norm(),
          l1_, n, s));
    }
    if ((bx - bz).norm() > l1_ * (x - z).norm() * slack) {
      throw ValidationError(fmt::format(
          "dynamics.L1: Lipschitz ratio {:.6g} exceeds L1 = {} at sample {} (state {})",
          (bx - bz).norm() / (x - z).norm(), l1_, n, s));
    }
  }
}

std::size_t Trajectory::locate(double t, std::size_t* hint) const {
  if (times_.empty() || t < times_.front()) {
    throw RangeError(fmt::format("trajectory: time {} precedes the first grid time", t));
  }
  auto first = times_.begin();
  if (hint && *hint < times_.size() && times_[*hint] <= t) first += static_cast<long>(*hint);
  const auto it = std::upper_bound(first, times_.end(), t);
  const auto i = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (hint) *hint = i;
  return i;
}

Trajectory integrate_slow_discrete(const DynamicsSpec& dyn, const Eigen::VectorXd& x0,
                                   double epsilon, const FastPath& path, std::size_t steps) {
  check_start(dyn, x0, epsilon);
  if (steps > path.size()) {
    throw RangeError(fmt::format("integrate_slow_discrete: {} steps requested, path has {}",
                                 steps, path.size()));
  }
  const Eigen::MatrixXd input = input_table(dyn, *path.spec);
  const std::size_t d = dyn.dim();
  const bool state_free = !dyn.depends_on_state();

  Trajectory traj(d, epsilon, TrajectoryKind::true_motion);
  traj.reserve(steps + 1);
  std::vector<double> x(x0.data(), x0.data() + d);
  std::vector<double> bx(d, 0.0);
  traj.push(0.0, x.data());
  if (state_free) {
    // X_n = x0 + eps * S_n with S_n the running sum of the inputs, so the
    // trajectory agrees bit-for-bit with eps-scaled prefix sums.
    std::vector<double> sum(d, 0.0);
    for (std::size_t n = 0; n < steps; ++n) {
      const auto s = static_cast<Eigen::Index>(path.states[n]);
      for (std::size_t i = 0; i < d; ++i) {
        sum[i] += input(s, static_cast<Eigen::Index>(i));
        x[i] = x0(static_cast<Eigen::Index>(i)) + epsilon * sum[i];
      }
      traj.push(static_cast<double>(n + 1), x.data());
    }
    return traj;
  }
  for (std::size_t n = 0; n < steps; ++n) {
    dyn.state_part(x.data(), bx.data());
    const auto s = static_cast<Eigen::Index>(path.states[n]);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += epsilon * (bx[i] + input(s, static_cast<Eigen::Index>(i)));
    }
    traj.push(static_cast<double>(n + 1), x.data());
  }
  return traj;
}

Trajectory integrate_slow_continuous(const DynamicsSpec& dyn, const Eigen::VectorXd& x0,
                                     double epsilon, const FastPath& path, double total_time) {
  check_start(dyn, x0, epsilon);
  if (path.cumulative_times.empty()) {
    throw UsageError("integrate_slow_continuous: requires a suspension path");
  }
  if (!(total_time >= 0.0) || path.total_time() < total_time) {
    throw RangeError(fmt::format(
        "integrate_slow_continuous: path covers [0, {}], need [0, {}]", path.total_time(),
        total_time));
  }
  const Eigen::MatrixXd input = input_table(dyn, *path.spec);
  const std::size_t d = dyn.dim();
  const double hmax = 1e-2 / (epsilon * dyn.lipschitz());
  const auto& c = path.cumulative_times;

  Trajectory traj(d, epsilon, TrajectoryKind::true_motion);
  traj.reserve(path.size() + 1);
  std::vector<double> x(x0.data(), x0.data() + d);
  traj.push(0.0, x.data());
  Rk4 rk(d);
  for (std::size_t k = 0; k < path.size() && c[k] < total_time; ++k) {
    const double start = c[k];
    const double end = std::min(c[k + 1], total_time);
    const auto s = static_cast<Eigen::Index>(path.states[k]);
    const auto field = [&](const double* y, double* out) {
      dyn.state_part(y, out);
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = epsilon * (out[i] + input(s, static_cast<Eigen::Index>(i)));
      }
    };
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((end - start) / hmax)));
    const double h = (end - start) / static_cast<double>(m);
    for (std::size_t i = 1; i <= m; ++i) {
      rk.step(x.data(), h, field);
      traj.push(i == m ? end : start + static_cast<double>(i) * h, x.data());
    }
  }
  return traj;
}

Eigen::VectorXd state_at(const Trajectory& traj, const DynamicsSpec& dyn, const FastPath& path,
                         double t, std::size_t* hint) {
  if (traj.size() == 0 || t > traj.times().back()) {
    throw RangeError(fmt::format("state_at: time {} beyond the integrated range", t));
  }
  const std::size_t i = traj.locate(t, hint);
  Eigen::VectorXd x = traj.state_vector(i);
  const double dt = t - traj.time(i);
  if (dt <= 0.0) return x;
  const auto point = suspension_time_index(path, 0.5 * (traj.time(i) + t));
  const Eigen::VectorXd offset =
      dyn.input_part(path.spec->values.row(path.states[point.index]).transpose());
  const double eps = traj.epsilon();
  if (!dyn.depends_on_state()) return x + eps * dt * offset;
  const std::size_t d = dyn.dim();
  Rk4 rk(d);
  rk.step(x.data(), dt, [&](const double* y, double* out) {
    dyn.state_part(y, out);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = eps * (out[j] + offset(static_cast<Eigen::Index>(j)));
    }
  });
  return x;
}

AveragedField::AveragedField(const DynamicsSpec& dyn, const ProcessSpec& spec) : dyn_(dyn) {
  spec.validate();
  const Eigen::MatrixXd input = input_table(dyn, spec);
  mean_input_ = input.transpose() * spec.time_weights();
}

void AveragedField::evaluate(const double* x, double* out) const {
  dyn_.state_part(x, out);
  for (Eigen::Index i = 0; i < mean_input_.size(); ++i) out[i] += mean_input_(i);
}

Eigen::VectorXd AveragedField::operator()(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(mean_input_.size());
  evaluate(x.data(), out.data());
  return out;
}

Eigen::VectorXd averaged_drift(const DynamicsSpec& dyn, const ProcessSpec& spec,
                               const Eigen::VectorXd& x) {
  return AveragedField(dyn, spec)(x);
}

Trajectory solve_averaged(const AveragedField& field, const Eigen::VectorXd& x0, double epsilon,
                          double total_time, std::span<const double> output_times) {
  check_start(field.dynamics(), x0, epsilon);
  if (!(total_time >= 0.0) || !std::isfinite(total_time)) {
    throw UsageError(fmt::format("solve_averaged: total_time = {} must be >= 0", total_time));
  }
  const std::size_t d = field.dim();
  const double h = 1e-2 / epsilon;
  const auto rhs = [&](const double* y, double* out) {
    field.evaluate(y, out);
    for (std::size_t i = 0; i < d; ++i) out[i] *= epsilon;
  };

  Trajectory traj(d, epsilon, TrajectoryKind::averaged);
  traj.reserve(static_cast<std::size_t>(total_time / h) + output_times.size() + 2);
  std::vector<double> x(x0.data(), x0.data() + d);
  traj.push(0.0, x.data());
  Rk4 rk(d);

  // Nodes: the uniform grid j*h, every requested output time, and total_time.
  double t = 0.0;
  std::size_t j = 1;
  std::size_t o = 0;
  while (t < total_time && !same_time(t, total_time)) {
    while (o < output_times.size() && (output_times[o] <= t || same_time(output_times[o], t))) ++o;
    double next = std::min(static_cast<double>(j) * h, total_time);
    if (o < output_times.size() && output_times[o] < next) next = output_times[o];
    if (same_time(next, static_cast<double>(j) * h)) ++j;
    if (o < output_times.size() && same_time(next, output_times[o])) next = output_times[o];
    rk.step(x.data(), next - t, rhs);
    t = next;
    traj.push(t, x.data());
  }
  return traj;
}

Trajectory solve_averaged(const DynamicsSpec& dyn, const ProcessSpec& spec,
                          const Eigen::VectorXd& x0, double epsilon, double total_time) {
  return solve_averaged(AveragedField(dyn, spec), x0, epsilon, total_time);
}

Eigen::VectorXd averaged_state_at(const Trajectory& avg, const AveragedField& field, double t,
                                  std::size_t* hint) {
  if (avg.size() == 0 || t > avg.times().back()) {
    throw RangeError(fmt::format("averaged_state_at: time {} beyond the solved range", t));
  }
  const std::size_t i = avg.locate(t, hint);
  Eigen::VectorXd x = avg.state_vector(i);
  const double dt = t - avg.time(i);
  if (dt <= 0.0) return x;
  const double eps = avg.epsilon();
  const std::size_t d = field.dim();
  Rk4 rk(d);
  rk.step(x.data(), dt, [&](const double* y, double* out) {
    field.evaluate(y, out);
    for (std::size_t j = 0; j < d; ++j) out[j] *= eps;
  });
  return x;
}

double averaging_gap(const Trajectory& true_traj, const Trajectory& avg_traj, double horizon) {
  if (true_traj.epsilon() != avg_traj.epsilon()) {
    throw UsageError(fmt::format("averaging_gap: epsilon mismatch ({} vs {})",
                                 true_traj.epsilon(), avg_traj.epsilon()));
  }
  if (true_traj.dim() != avg_traj.dim()) {
    throw UsageError("averaging_gap: trajectories have different dimensions");
  }
  for (const Trajectory* tr : {&true_traj, &avg_traj}) {
    if (tr->size() == 0 || (tr->times().back() < horizon && !same_time(tr->times().back(), horizon))) {
      throw RangeError(fmt::format("averaging_gap: a trajectory ends before horizon {}", horizon));
    }
  }
  const auto& ta = true_traj.times();
  const auto& tb = avg_traj.times();
  double gap = 0.0;
  std::size_t shared = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ta.size() && j < tb.size()) {
    if (ta[i] > horizon && !same_time(ta[i], horizon)) break;
    if (same_time(ta[i], tb[j])) {
      double s = 0.0;
      const auto a = true_traj.state(i);
      const auto b = avg_traj.state(j);
      for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      gap = std::max(gap, std::sqrt(s));
      ++shared;
      ++i;
      ++j;
    } else if (ta[i] < tb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  if (shared == 0) throw UsageError("averaging_gap: trajectories share no grid time");
  return gap;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "time";
  for (std::size_t i = 1; i <= traj.dim(); ++i) os << ",x_" << i;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << fmt::format("{}", traj.time(k));
    for (double x : traj.state(k)) os << fmt::format(",{}", x);
    os << '\n';
  }
}

}  // namespace erlab
