#include "erlab/cgf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <fmt/format.h>

#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

Eigen::VectorXd Cgf::gradient(const Eigen::VectorXd& b) const {
  constexpr double h = 1e-5;
  Eigen::VectorXd g(b.size());
  Eigen::VectorXd e = b;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    e(i) = b(i) + h;
    const double up = value(e);
    e(i) = b(i) - h;
    const double down = value(e);
    e(i) = b(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd center_values(const Eigen::MatrixXd& values, const Eigen::VectorXd& weights) {
  const Eigen::RowVectorXd mean = weights.transpose() * values;
  return values.rowwise() - mean;
}

namespace {

PerronResult power_iteration(const Eigen::MatrixXd& m, double shift) {
  const auto n = m.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w(n);
  double lo = 0.0;
  double hi = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  constexpr std::size_t kMaxIter = 100000;
  for (std::size_t it = 1; it <= kMaxIter; ++it) {
    w.noalias() = m * v;
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ratio = w(i) / v(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    gap = (hi - lo) / hi;
    v = w / w.maxCoeff();
    if (gap <= 1e-12) {
      return {std::log(0.5 * (lo + hi) - shift), v, Eigen::VectorXd(), it, gap};
    }
  }
  throw ConvergenceError(
      fmt::format("perron: power iteration did not converge in {} iterations (relative gap {:.3e})",
                  kMaxIter, gap),
      gap);
}

}  // namespace

PerronResult perron(const Eigen::MatrixXd& q, bool with_left) {
  if (q.rows() == 0 || q.rows() != q.cols()) {
    throw UsageError("perron: matrix must be square and nonempty");
  }
  // A positive diagonal makes an irreducible matrix primitive.
  double shift = 0.0;
  if ((q.array() <= 0.0).any()) shift = 0.5 * q.rowwise().sum().maxCoeff();
  Eigen::MatrixXd m = q;
  m.diagonal().array() += shift;
  PerronResult out = power_iteration(m, shift);
  if (with_left) {
    const PerronResult left = power_iteration(m.transpose(), shift);
    out.left = left.right;
    out.iterations += left.iterations;
    out.residual = std::max(out.residual, left.residual);
  }
  return out;
}

SpectralCgf::SpectralCgf(Eigen::MatrixXd transition, const Eigen::MatrixXd& values)
    : p_(std::move(transition)) {
  if (values.rows() != p_.rows()) {
    throw UsageError(fmt::format("cgf_spectral: {} value rows for a {}-state chain",
                                 values.rows(), p_.rows()));
  }
  g_ = center_values(values, stationary_law(p_));
}

PerronResult SpectralCgf::tilted_perron(const Eigen::VectorXd& b, bool with_left) const {
  if (static_cast<std::size_t>(b.size()) != dim()) {
    throw UsageError(fmt::format("cgf_spectral: b has dimension {}, observable {}", b.size(), dim()));
  }
  const Eigen::VectorXd h = g_ * b;
  const double top = h.maxCoeff();
  const Eigen::RowVectorXd tilt = (h.array() - top).exp().matrix().transpose();
  const Eigen::MatrixXd q = p_.array().rowwise() * tilt.array();
  PerronResult r = perron(q, with_left);
  r.log_eigenvalue += top;
  return r;
}

double SpectralCgf::value(const Eigen::VectorXd& b) const {
  if (b.isZero(0.0)) return 0.0;
  return tilted_perron(b, false).log_eigenvalue;
}

Eigen::VectorXd SpectralCgf::gradient(const Eigen::VectorXd& b) const {
  const PerronResult r = tilted_perron(b, true);
  const Eigen::VectorXd w = r.left.cwiseProduct(r.right);
  return g_.transpose() * w / w.sum();
}

double cgf_spectral(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                    const Eigen::VectorXd& b) {
  return SpectralCgf(transition, values).value(b);
}

SuspensionCgf::SuspensionCgf(const ProcessSpec& spec, const Eigen::MatrixXd& values)
    : p_(spec.kernel()), roof_(spec.roof) {
  spec.validate();
  if (!spec.is_suspension()) throw UsageError("SuspensionCgf: requires a suspension process");
  if (values.rows() != p_.rows()) {
    throw UsageError(fmt::format("SuspensionCgf: {} value rows for a {}-state chain",
                                 values.rows(), p_.rows()));
  }
  g_ = center_values(values, spec.time_weights());
}

double SuspensionCgf::value(const Eigen::VectorXd& b) const {
  if (static_cast<std::size_t>(b.size()) != dim()) {
    throw UsageError(fmt::format("SuspensionCgf: b has dimension {}, observable {}", b.size(), dim()));
  }
  if (b.isZero(0.0)) return 0.0;
  const Eigen::VectorXd h = g_ * b;
  // ln rho(P diag(exp((h - lambda) sigma))) is decreasing in lambda and
  // changes sign on [min h, max h].
  const auto log_radius = [&](double lambda) {
    const Eigen::ArrayXd expo = (h.array() - lambda) * roof_.array();
    const double top = expo.maxCoeff();
    const Eigen::RowVectorXd tilt = (expo - top).exp().matrix().transpose();
    const Eigen::MatrixXd q = p_.array().rowwise() * tilt.array();
    return perron(q).log_eigenvalue + top;
  };
  double lo = h.minCoeff();
  double hi = h.maxCoeff();
  if (hi - lo <= 0.0) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (log_radius(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Streaming log-sum-exp.
struct Lse {
  double top = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  void add(double x) {
    if (x > top) {
      sum = sum * std::exp(top - x) + 1.0;
      top = x;
    } else {
      sum += std::exp(x - top);
    }
  }
  void merge(const Lse& o) {
    if (o.sum == 0.0) return;
    if (o.top > top) {
      sum = sum * std::exp(top - o.top) + o.sum;
      top = o.top;
    } else {
      sum += o.sum * std::exp(o.top - top);
    }
  }
  double value() const { return top + std::log(sum); }
};

// Per-path accumulators for one block length m.
struct BlockStats {
  Lse first;   // exp(S_m)
  Lse whole;   // exp(S_2m)
  Lse squared; // exp(2 S_2m)
  std::size_t blocks = 0;
};

// Returns ln(exp(a) - exp(b)) for a > b.
double log_diff(double a, double b) { return a + std::log1p(-std::exp(b - a)); }

}  // namespace

EmpiricalCgf cgf_empirical(const ProcessSpec& spec, const Eigen::MatrixXd& values,
                           const Eigen::VectorXd& b, std::size_t r, std::size_t reps,
                           std::uint64_t seed) {
  spec.validate();
  if (r < 1000) throw UsageError(fmt::format("cgf_empirical: r = {} must be >= 1000", r));
  if (reps < 10) throw UsageError(fmt::format("cgf_empirical: reps = {} must be >= 10", reps));
  if (values.rows() != static_cast<Eigen::Index>(spec.num_states()) || values.cols() != b.size()) {
    throw UsageError("cgf_empirical: observable shape does not match process and b");
  }
  const Eigen::VectorXd h = values * b;
  if (b.isZero(0.0)) return {0.0, 0.0, 0, reps};
  if (h.maxCoeff() == h.minCoeff()) return {h(0), 0.0, 0, reps};

  std::vector<std::size_t> lengths;
  for (std::size_t m = 1; 2 * m <= r; m *= 2) lengths.push_back(m);
  std::vector<std::vector<BlockStats>> stats(reps, std::vector<BlockStats>(lengths.size()));

  auto shared = std::make_shared<const ProcessSpec>(spec);
  Rng master(seed);
  std::vector<double> prefix(r + 1);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const std::uint64_t path_seed = master();
    // prefix[n] = integral (or sum) of h over the first n time units.
    if (spec.is_suspension()) {
      const FastPath path = sample_path_covering(shared, path_seed, static_cast<double>(r));
      const auto& c = path.cumulative_times;
      double acc = 0.0;
      std::size_t k = 0;
      prefix[0] = 0.0;
      for (std::size_t n = 1; n <= r; ++n) {
        const double t = static_cast<double>(n);
        while (c[k + 1] <= t) {
          acc += h(path.states[k]) * (c[k + 1] - c[k]);
          ++k;
        }
        prefix[n] = acc + h(path.states[k]) * (t - c[k]);
      }
    } else {
      const FastPath path = sample_path(shared, path_seed, r);
      prefix[0] = 0.0;
      for (std::size_t n = 0; n < r; ++n) prefix[n + 1] = prefix[n] + h(path.states[n]);
    }
    for (std::size_t li = 0; li < lengths.size(); ++li) {
      const std::size_t m = lengths[li];
      BlockStats& s = stats[rep][li];
      for (std::size_t start = 0; start + 2 * m <= r; start += 2 * m) {
        const double s1 = prefix[start + m] - prefix[start];
        const double s2 = prefix[start + 2 * m] - prefix[start];
        s.first.add(s1);
        s.whole.add(s2);
        s.squared.add(2.0 * s2);
        ++s.blocks;
      }
    }
  }

  std::size_t chosen = 0;
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    Lse whole, squared;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      whole.merge(stats[rep][li].whole);
      squared.merge(stats[rep][li].squared);
    }
    const double ess = std::exp(2.0 * whole.value() - squared.value());
    if (ess >= 1000.0) chosen = li;
  }

  const auto m = static_cast<double>(lengths[chosen]);
  Lse first, whole;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    first.merge(stats[rep][chosen].first);
    whole.merge(stats[rep][chosen].whole);
  }
  const double lf = first.value();
  const double lw = whole.value();
  const double estimate = (lw - lf) / m;

  std::vector<double> jack(reps);
  double mean = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const double f = log_diff(lf, stats[rep][chosen].first.value());
    const double w = log_diff(lw, stats[rep][chosen].whole.value());
    jack[rep] = (w - f) / m;
    mean += jack[rep];
  }
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (double j : jack) ss += (j - mean) * (j - mean);
  const double n = static_cast<double>(reps);
  return {estimate, std::sqrt((n - 1.0) / n * ss), lengths[chosen], reps};
}

}  // namespace erlab
