#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "erlab/processes.hpp"

namespace erlab {

/// Cumulant generating function Pi : R^d -> R of a centered observable.
class Cgf {
 public:
  virtual ~Cgf() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Eigen::VectorXd& b) const = 0;
  /// Central differences with step 1e-5 unless overridden.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& b) const;

  double value(double b) const { return value(Eigen::VectorXd::Constant(1, b)); }
  double derivative(double b) const { return gradient(Eigen::VectorXd::Constant(1, b))(0); }
};

/// Subtracts the `weights`-mean from each column of per-state values.
Eigen::MatrixXd center_values(const Eigen::MatrixXd& values, const Eigen::VectorXd& weights);

struct PerronResult {
  double log_eigenvalue;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
  std::size_t iterations;
  double residual;  // relative Collatz-Wielandt gap at exit
};

/// Perron root of a nonnegative irreducible matrix by power iteration with
/// max-norm normalization. Stops when the Collatz-Wielandt bracket has
/// relative width <= 1e-12; throws ConvergenceError after 1e5 iterations.
/// A matrix with zero entries is shifted by a multiple of the identity so the
/// iteration matrix is primitive.
PerronResult perron(const Eigen::MatrixXd& q, bool with_left = false);

/// Pi(b) = ln lambda(P(i,j) exp((b, G_j))) with G centered under pi.
class SpectralCgf final : public Cgf {
 public:
  SpectralCgf(Eigen::MatrixXd transition, const Eigen::MatrixXd& values);

  using Cgf::value;
  std::size_t dim() const override { return static_cast<std::size_t>(g_.cols()); }
  double value(const Eigen::VectorXd& b) const override;
  /// Pi'(b) = sum l_j r_j G_j / sum l_j r_j from left/right Perron vectors.
  Eigen::VectorXd gradient(const Eigen::VectorXd& b) const override;

  const Eigen::MatrixXd& transition() const { return p_; }
  const Eigen::MatrixXd& centered_values() const { return g_; }
  PerronResult tilted_perron(const Eigen::VectorXd& b, bool with_left) const;

 private:
  Eigen::MatrixXd p_;
  Eigen::MatrixXd g_;
};

double cgf_spectral(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                    const Eigen::VectorXd& b);

/// Time-normalized CGF of the integral of (b, G(xi_s)) along a suspension
/// flow: the lambda with spectral radius of P diag(exp(((b, G_j) - lambda)
/// sigma_j)) equal to 1. G is centered under the flow-invariant weights.
class SuspensionCgf final : public Cgf {
 public:
  SuspensionCgf(const ProcessSpec& spec, const Eigen::MatrixXd& values);

  using Cgf::value;
  std::size_t dim() const override { return static_cast<std::size_t>(g_.cols()); }
  double value(const Eigen::VectorXd& b) const override;

  const Eigen::MatrixXd& centered_values() const { return g_; }

 private:
  Eigen::MatrixXd p_;
  Eigen::VectorXd roof_;
  Eigen::MatrixXd g_;
};

/// Closed-form Pi supplied as a callable (test models such as b^2/2).
class FunctionCgf final : public Cgf {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&)>;
  using Grad = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  FunctionCgf(std::size_t dim, Fn f, Grad grad = {})
      : dim_(dim), f_(std::move(f)), grad_(std::move(grad)) {}

  using Cgf::value;
  std::size_t dim() const override { return dim_; }
  double value(const Eigen::VectorXd& b) const override { return f_(b); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& b) const override {
    return grad_ ? grad_(b) : Cgf::gradient(b);
  }

 private:
  std::size_t dim_;
  Fn f_;
  Grad grad_;
};

struct EmpiricalCgf {
  double value;
  double std_error;
  std::size_t block;  // m, the tilting block length (steps or time units)
  std::size_t reps;
};

/// Monte Carlo estimate of Pi(b) for the observable given by per-state
/// `values` (used as given, not centered). Each of `reps` independent paths
/// of length r (time r for suspensions) is cut into blocks of length 2m and
///
///   Pi_hat = [ln mean exp(S_2m) - ln mean exp(S_m)] / m,
///
/// pooled over all blocks in log-sum-exp form, where S_m is the sum over the
/// first m steps of a block. The difference cancels the O(1) boundary term of
/// ln E exp(S_n). m is the largest power of two for which the pooled
/// effective sample size of exp(S_2m) stays >= 1000. The standard error is a
/// leave-one-path-out jackknife.
EmpiricalCgf cgf_empirical(const ProcessSpec& spec, const Eigen::MatrixXd& values,
                           const Eigen::VectorXd& b, std::size_t r, std::size_t reps,
                           std::uint64_t seed);

}  // namespace erlab
