#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "erlab/cgf.hpp"
#include "erlab/curve.hpp"
#include "erlab/dynamics.hpp"
#include "erlab/finiteness.hpp"
#include "erlab/processes.hpp"

namespace erlab {

/// Distinguished value of I outside its finiteness domain.
inline constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

/// Product of per-coordinate finiteness intervals.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

struct LegendreResult {
  double value;          // I(beta), possibly kInfiniteRate
  Eigen::VectorXd dual;  // maximizing b
  bool boundary;         // beta sits on the edge of the domain
  double residual;       // |grad Pi(b) - beta| at exit
  bool finite() const { return value < kInfiniteRate; }
};

/// Pi together with its Legendre transform I, the finiteness domain and the
/// L1 cap (I is infinite where |beta| > 2 L1). Immutable after construction;
/// scalar models carry a 512-node table of I for fast evaluation.
class RateModel {
 public:
  RateModel(std::shared_ptr<const Cgf> cgf, Box domain, double l1);

  /// Spectral model of the observable `values` on a finite chain; G is
  /// centered under the stationary law.
  static RateModel from_chain(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                              double l1);
  /// Model of G = B(x, .) - Bbar(x) for the fast motion `spec`. For the
  /// registered forms G does not depend on x. Suspensions use the
  /// time-normalized CGF and cycle ratios.
  static RateModel from_process(const ProcessSpec& spec, const DynamicsSpec& dyn);

  std::size_t dim() const { return cgf_->dim(); }
  const Cgf& cgf() const { return *cgf_; }
  const Box& domain() const { return domain_; }
  double l1() const { return l1_; }
  double beta_minus() const { return domain_.lower(0); }
  double beta_plus() const { return domain_.upper(0); }

  /// True where I is finite: inside the domain and |beta| <= 2 L1.
  bool finite_at(const Eigen::VectorXd& beta) const;
  bool finite_at(double beta) const;

  /// Table-interpolated I (scalar models).
  double rate(double beta) const;
  /// Table for d = 1, exact solve otherwise.
  double rate(const Eigen::VectorXd& beta) const;

  LegendreResult rate_exact(const Eigen::VectorXd& beta) const;
  double rate_exact(double beta) const {
    return rate_exact(Eigen::VectorXd::Constant(1, beta)).value;
  }

  /// Columns b, Pi(b), beta, I(beta) over the cached table.
  void write_table_csv(std::ostream& os) const;

 private:
  void build_table();

  std::shared_ptr<const Cgf> cgf_;
  Box domain_;
  double l1_;
  // Table nodes, increasing in beta, with I and I' = b at each node.
  std::vector<double> beta_;
  std::vector<double> value_;
  std::vector<double> slope_;
  std::vector<double> dual_;
};

/// sup_b (b, beta) - Pi(b). Scalar case: bisection on Pi'(b) = beta over
/// |b| <= 50 with golden-section fallback; d > 1: damped Newton with a
/// finite-difference Hessian. Infinite outside the domain.
LegendreResult legendre(const RateModel& model, const Eigen::VectorXd& beta);
double legendre(const RateModel& model, double beta);

/// S(gamma) = (1/K) sum_k I(K (gamma_{k+1} - gamma_k)); requires gamma(0) = 0.
double action(const Curve& gamma, const RateModel& model);

struct VarianceResult {
  double value;
  bool degenerate;  // value <= 1e-8: coboundary-type observable
};

/// Second derivative of Pi at 0 along `direction`: central difference with
/// step 1e-3, Richardson-extrapolated.
VarianceResult variance_at_zero(const Cgf& cgf, const Eigen::VectorXd& direction);
VarianceResult variance_at_zero(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                                const Eigen::VectorXd& direction);

}  // namespace erlab
