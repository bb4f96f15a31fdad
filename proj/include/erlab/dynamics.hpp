#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "erlab/processes.hpp"

namespace erlab {

enum class FieldForm { affine, clamped_affine };

std::string_view to_string(FieldForm form);
FieldForm field_form_from_string(std::string_view name);

/// Slow-motion vector field B : R^d x R^k -> R^d taken from a registry of
/// parametric forms whose global bounds can be declared:
///
///   affine          B(x, y) = A x + C y + b
///   clamped_affine  B(x, y) = clamp(A x, -s, s) + C y + b   (componentwise)
///
/// `L1` is the declared constant with |B| <= L1 and |B(x,y) - B(z,y)| <=
/// L1 |x - z|. For forms that grow with x the bound is certified on the box
/// |x_i| <= state_radius, the region the experiments keep the motion in.
class DynamicsSpec {
 public:
  static DynamicsSpec affine(Eigen::MatrixXd a, Eigen::MatrixXd c, Eigen::VectorXd b,
                             double l1, double state_radius = 1.0);
  static DynamicsSpec clamped_affine(Eigen::MatrixXd a, double saturation, Eigen::MatrixXd c,
                                     Eigen::VectorXd b, double l1, double state_radius = 1.0);
  /// B(x, y) = y; the plain ergodic-sum case. `l1` bounds |y| over states.
  static DynamicsSpec observable(double l1, std::size_t dim = 1);

  FieldForm form() const { return form_; }
  std::size_t dim() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(c_.cols()); }
  double lipschitz() const { return l1_; }
  double state_radius() const { return radius_; }
  double saturation() const { return saturation_; }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& c() const { return c_; }
  const Eigen::VectorXd& b() const { return b_; }

  /// True when B depends on the slow state x.
  bool depends_on_state() const { return !a_.isZero(0.0); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// Part of B that depends on x only: A x, or clamp(A x).
  void state_part(const double* x, double* out) const;
  /// Part of B that depends on y only: C y + b.
  Eigen::VectorXd input_part(const Eigen::VectorXd& y) const;

  /// Spot-checks the declared bound and Lipschitz constant on `samples`
  /// random triples (x, z, y) with y drawn from the rows of `state_values`.
  /// Throws ValidationError on the first violation.
  void certify(const Eigen::MatrixXd& state_values, std::uint64_t seed,
               std::size_t samples = 1000) const;

 private:
  DynamicsSpec() = default;
  void check_shapes() const;

  FieldForm form_ = FieldForm::affine;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd c_;
  Eigen::VectorXd b_;
  double saturation_ = 0.0;
  double l1_ = 0.0;
  double radius_ = 1.0;
};

enum class TrajectoryKind { true_motion, averaged };

/// Time-indexed slow-motion states, stored row-major.
class Trajectory {
 public:
  Trajectory(std::size_t dim, double epsilon, TrajectoryKind kind)
      : dim_(dim), epsilon_(epsilon), kind_(kind) {}

  void reserve(std::size_t n) {
    times_.reserve(n);
    states_.reserve(n * dim_);
  }
  void push(double t, const double* x) {
    times_.push_back(t);
    states_.insert(states_.end(), x, x + dim_);
  }

  std::size_t size() const { return times_.size(); }
  std::size_t dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  TrajectoryKind kind() const { return kind_; }
  const std::vector<double>& times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * dim_, dim_};
  }
  Eigen::VectorXd state_vector(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXd>(states_.data() + i * dim_,
                                             static_cast<Eigen::Index>(dim_));
  }

  /// Largest i with time(i) <= t, starting the search from `hint` when the
  /// caller scans forward. Requires time(0) <= t.
  std::size_t locate(double t, std::size_t* hint = nullptr) const;

 private:
  std::size_t dim_;
  double epsilon_;
  TrajectoryKind kind_;
  std::vector<double> times_;
  std::vector<double> states_;
};

/// CSV with columns time, x_1..x_d.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// X_{n+1} = X_n + eps B(X_n, xi_n), n < steps. Times are the step indices.
Trajectory integrate_slow_discrete(const DynamicsSpec& dyn, const Eigen::VectorXd& x0,
                                   double epsilon, const FastPath& path, std::size_t steps);

/// dX/dt = eps B(X, xi_t) over [0, total_time] for a suspension path. Each
/// holding interval is integrated with classical RK4 at a fixed step no
/// larger than min(interval, 1e-2 / (eps L1)); the grid records every
/// interval endpoint and every integrator step.
Trajectory integrate_slow_continuous(const DynamicsSpec& dyn, const Eigen::VectorXd& x0,
                                     double epsilon, const FastPath& path, double total_time);

/// State of a continuous trajectory at an arbitrary time: one RK4 step from
/// the preceding grid point under the driver state holding at t.
Eigen::VectorXd state_at(const Trajectory& traj, const DynamicsSpec& dyn, const FastPath& path,
                         double t, std::size_t* hint = nullptr);

/// Averaged field: the stationary mean of B(x, .) over the fast motion,
/// time-weighted by the roof for suspensions.
class AveragedField {
 public:
  AveragedField(const DynamicsSpec& dyn, const ProcessSpec& spec);

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  void evaluate(const double* x, double* out) const;
  std::size_t dim() const { return dyn_.dim(); }
  const DynamicsSpec& dynamics() const { return dyn_; }
  /// Weighted mean of C y + b, the x-independent part of the average.
  const Eigen::VectorXd& mean_input() const { return mean_input_; }

 private:
  DynamicsSpec dyn_;
  Eigen::VectorXd mean_input_;
};

Eigen::VectorXd averaged_drift(const DynamicsSpec& dyn, const ProcessSpec& spec,
                               const Eigen::VectorXd& x);

/// dXbar/dt = eps Bbar(Xbar) by fixed-step RK4 with step 1e-2/eps. Every
/// time in `output_times` (sorted, within [0, total_time]) is also a grid
/// point, which is how gap measurements get a shared time grid.
Trajectory solve_averaged(const AveragedField& field, const Eigen::VectorXd& x0, double epsilon,
                          double total_time, std::span<const double> output_times = {});
Trajectory solve_averaged(const DynamicsSpec& dyn, const ProcessSpec& spec,
                          const Eigen::VectorXd& x0, double epsilon, double total_time);

/// Averaged state at any time in the solved range (dense RK4 evaluation).
Eigen::VectorXd averaged_state_at(const Trajectory& avg, const AveragedField& field, double t,
                                  std::size_t* hint = nullptr);

/// sup over shared grid times <= horizon of |X(t) - Xbar(t)|.
double averaging_gap(const Trajectory& true_traj, const Trajectory& avg_traj, double horizon);

}  // namespace erlab
