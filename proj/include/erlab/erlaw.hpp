#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "erlab/curve.hpp"
#include "erlab/dynamics.hpp"
#include "erlab/level_set.hpp"
#include "erlab/processes.hpp"
#include "erlab/rate_model.hpp"
#include "erlab/window.hpp"

namespace erlab {

/// Running sums S_n = sum_{j<n} G(xi_j), one row of d values per n.
class PrefixSums {
 public:
  /// `values` holds G per driver state, one row per state.
  PrefixSums(const FastPath& path, const Eigen::MatrixXd& values);
  /// Scalar sequence.
  explicit PrefixSums(std::span<const double> values);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  const double* at(std::size_t n) const { return sums_.data() + n * dim_; }

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 1;
  std::vector<double> sums_;
};

/// Y(u_k) = (1/r) sum_{j < floor(r u_k)} G(xi_{offset + j}), u_k = k/K.
Curve partial_sum_curve(const PrefixSums& sums, std::size_t offset, double r, std::size_t segments);

/// Centering drift Bbar_t: either fixed, or Bbar(Zbar_t) read off an averaged
/// trajectory. Holds a forward-scan cursor, so one instance per trial.
class DriftCentering {
 public:
  static DriftCentering constant(Eigen::VectorXd drift);
  static DriftCentering averaged(const Trajectory& avg, const AveragedField& field);

  /// Bbar at fast time s (s = t / epsilon).
  Eigen::VectorXd at(double fast_time) const;

 private:
  Eigen::VectorXd constant_;
  const Trajectory* avg_ = nullptr;
  const AveragedField* field_ = nullptr;
  mutable std::size_t hint_ = 0;
};

/// V_t(u_k) = (X_{l + floor(b u_k)} - X_l) / (eps b) - u_k Bbar_t for the
/// discrete slow motion, t = l eps, b = b_t(eps, N).
Curve er_curve(const Trajectory& traj, const DriftCentering& centering, const WindowParams& wp,
               std::size_t l);

/// Continuous-time counterpart, reading X at real times l + b u_k.
Curve er_curve_continuous(const Trajectory& traj, const DynamicsSpec& dyn, const FastPath& path,
                          const DriftCentering& centering, const WindowParams& wp, std::size_t l);

/// Indexed collection of curves, produced on demand.
class CurveFamily {
 public:
  virtual ~CurveFamily() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t segments() const = 0;
  virtual std::size_t dim() const = 0;
  /// Grid index l of member i (t = l epsilon).
  virtual std::size_t index(std::size_t i) const { return i; }
  /// Slow time of member i.
  virtual double time(std::size_t i) const { return static_cast<double>(i); }
  virtual void curve_into(std::size_t i, Curve& out) const = 0;
  Curve curve(std::size_t i) const {
    Curve c;
    curve_into(i, c);
    return c;
  }
};

class CurveList final : public CurveFamily {
 public:
  explicit CurveList(std::vector<Curve> curves, std::vector<double> times = {});
  std::size_t size() const override { return curves_.size(); }
  std::size_t segments() const override { return curves_.front().segments(); }
  std::size_t dim() const override { return curves_.front().dim(); }
  double time(std::size_t i) const override { return times_[i]; }
  void curve_into(std::size_t i, Curve& out) const override { out = curves_[i]; }

 private:
  std::vector<Curve> curves_;
  std::vector<double> times_;
};

/// {V_t : t = l eps, l = 0, s, 2s, ... <= T/eps} for stride s.
class DiscreteErFamily final : public CurveFamily {
 public:
  DiscreteErFamily(const Trajectory& traj, const DriftCentering& centering, WindowParams wp);
  std::size_t size() const override { return count_; }
  std::size_t segments() const override { return wp_.segments; }
  std::size_t dim() const override { return traj_.dim(); }
  std::size_t index(std::size_t i) const override { return i * stride_; }
  double time(std::size_t i) const override { return wp_.time(index(i)); }
  void curve_into(std::size_t i, Curve& out) const override;

 private:
  const Trajectory& traj_;
  const DriftCentering& centering_;
  WindowParams wp_;
  std::size_t stride_;
  std::size_t count_;
};

class ContinuousErFamily final : public CurveFamily {
 public:
  ContinuousErFamily(const Trajectory& traj, const DynamicsSpec& dyn, const FastPath& path,
                     const DriftCentering& centering, WindowParams wp);
  std::size_t size() const override { return count_; }
  std::size_t segments() const override { return wp_.segments; }
  std::size_t dim() const override { return traj_.dim(); }
  std::size_t index(std::size_t i) const override { return i * stride_; }
  double time(std::size_t i) const override { return wp_.time(index(i)); }
  void curve_into(std::size_t i, Curve& out) const override;

 private:
  const Trajectory& traj_;
  const DynamicsSpec& dyn_;
  const FastPath& path_;
  const DriftCentering& centering_;
  WindowParams wp_;
  std::size_t stride_;
  std::size_t count_;
  mutable std::vector<std::size_t> hints_;  // one forward cursor per node
};

struct ClassicMax {
  double max_increment;
  double mean;  // max_increment / k
  std::size_t argmax;
};

/// max over 0 <= m <= n - k of S_{m+k} - S_m in O(n); ties go to the
/// smallest m.
ClassicMax er_classic_max(std::span<const double> values, std::size_t n, std::size_t k);

struct SupResult {
  double value;
  double argmax_t;
  std::size_t argmax_index;
};

/// sup_i rho(V_i, Phi(a)) with the set's fixed budget.
SupResult upper_statistic(const CurveFamily& family, const CurveSetSpec& set);
/// Budget a = 1 / c_{tau(t, N)} for each member.
SupResult upper_statistic(const CurveFamily& family, const CurveSetSpec& set,
                          const WindowParams& wp);

struct LowerResult {
  double value;
  std::size_t worst_net_index;
  double approach_t;  // time of the family member closest to the worst net curve
};

/// max over net curves of min over the family of rho(V_t, gamma).
LowerResult lower_statistic(const CurveFamily& family, const std::vector<Curve>& net);

/// Hausdorff distance between finite curve sets under rho.
double hausdorff(const std::vector<Curve>& a, const std::vector<Curve>& b);

struct HausdorffReport {
  double value;
  double exact_side;    // sup_V rho(V, Phi(a)), solved exactly per curve
  double sampled_side;  // sup over net curves of inf_V rho(V, gamma)
  double net_bias;      // delta of the net
};

HausdorffReport hausdorff_level_set(const CurveFamily& family, const CurveSetSpec& set,
                                    const std::vector<Curve>& net, double delta);

/// sup_t V_t(1). Requires d = 1 and I(beta) finite for the target beta.
SupResult endpoint_statistic(const CurveFamily& family, const RateModel& model, double beta);

}  // namespace erlab
