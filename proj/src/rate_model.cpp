#include "erlab/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "erlab/errors.hpp"

namespace erlab {

namespace {

constexpr double kDualBound = 50.0;
constexpr double kDualTol = 1e-9;
constexpr double kEdgeTol = 1e-12;

// Golden-section maximization of a concave function on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - r * (hi - lo);
  double d = lo + r * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - r * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + r * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

LegendreResult solve_scalar(const Cgf& cgf, double beta) {
  if (beta == 0.0) return {0.0, Eigen::VectorXd::Zero(1), false, 0.0};
  const double sign = beta > 0.0 ? 1.0 : -1.0;
  // Pi' is increasing and Pi'(0) = 0, so the root lies on beta's side.
  double lo = 0.0;
  double hi = sign * kDualBound;
  double b = hi;
  double residual = std::abs(cgf.derivative(hi) - beta);
  if ((cgf.derivative(hi) - beta) * sign > 0.0) {
    for (int it = 0; it < 200; ++it) {
      b = 0.5 * (lo + hi);
      const double g = cgf.derivative(b) - beta;
      residual = std::abs(g);
      if (residual <= kDualTol || std::abs(hi - lo) < 1e-15) break;
      ((g * sign > 0.0) ? hi : lo) = b;
    }
  }
  const auto objective = [&](double x) { return x * beta - cgf.value(x); };
  if (residual > 1e-6 && std::abs(b) < kDualBound) {
    b = golden_max(objective, std::min(0.0, sign * kDualBound), std::max(0.0, sign * kDualBound),
                   1e-10);
    residual = std::abs(cgf.derivative(b) - beta);
  }
  return {std::max(0.0, objective(b)), Eigen::VectorXd::Constant(1, b), false, residual};
}

LegendreResult solve_vector(const Cgf& cgf, const Eigen::VectorXd& beta) {
  const auto n = beta.size();
  const auto objective = [&](const Eigen::VectorXd& x) { return x.dot(beta) - cgf.value(x); };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = beta - cgf.gradient(b);
  double f = 0.0;
  const double cap = kDualBound * std::sqrt(static_cast<double>(n));
  for (int it = 0; it < 100 && g.norm() > kDualTol; ++it) {
    Eigen::MatrixXd hess(n, n);
    constexpr double h = 1e-5;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(j) = h;
      hess.col(j) = (cgf.gradient(b + e) - cgf.gradient(b - e)) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose());
    Eigen::VectorXd step = hess.ldlt().solve(g);
    if (!step.allFinite() || step.dot(g) <= 0.0) step = g;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = b + t * step;
      if (trial.norm() > cap) continue;
      const double ft = objective(trial);
      if (ft >= f) {
        b = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    g = beta - cgf.gradient(b);
    if (!moved) break;
  }
  // Newton stall: golden-section line searches along the ascent direction.
  for (int it = 0; it < 200 && g.norm() > kDualTol; ++it) {
    const Eigen::VectorXd dir = g / g.norm();
    const double t = golden_max([&](double s) { return objective(b + s * dir); }, 0.0,
                                std::max(0.0, cap - b.norm()), 1e-12);
    if (t <= 0.0) break;
    b += t * dir;
    g = beta - cgf.gradient(b);
  }
  return {std::max(0.0, objective(b)), b, false, g.norm()};
}

// Fritsch-Carlson limiter applied to exact node derivatives.
void limit_slopes(const std::vector<double>& x, const std::vector<double>& y,
                  std::vector<double>& m) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    if (delta == 0.0) {
      m[i] = m[i + 1] = 0.0;
      continue;
    }
    if (m[i] * delta < 0.0) m[i] = 0.0;
    if (m[i + 1] * delta < 0.0) m[i + 1] = 0.0;
    const double a = m[i] / delta;
    const double b = m[i + 1] / delta;
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * a * delta;
      m[i + 1] = tau * b * delta;
    }
  }
}

}  // namespace

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < lower(i) - tol || x(i) > upper(i) + tol) return false;
  }
  return true;
}

RateModel::RateModel(std::shared_ptr<const Cgf> cgf, Box domain, double l1)
    : cgf_(std::move(cgf)), domain_(std::move(domain)), l1_(l1) {
  if (!cgf_) throw UsageError("RateModel: null CGF");
  if (domain_.dim() != cgf_->dim() || domain_.upper.size() != domain_.lower.size()) {
    throw UsageError("RateModel: domain dimension does not match the CGF");
  }
  if (!(l1_ > 0.0)) throw UsageError("RateModel: L1 must be > 0");
  if (dim() == 1) build_table();
}

RateModel RateModel::from_chain(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                                double l1) {
  auto cgf = std::make_shared<const SpectralCgf>(transition, values);
  const Eigen::MatrixXd& g = cgf->centered_values();
  Box box{Eigen::VectorXd(g.cols()), Eigen::VectorXd(g.cols())};
  for (Eigen::Index i = 0; i < g.cols(); ++i) {
    const Interval iv = finiteness_domain(transition, g.col(i));
    box.lower(i) = iv.lower;
    box.upper(i) = iv.upper;
  }
  return RateModel(std::move(cgf), std::move(box), l1);
}

RateModel RateModel::from_process(const ProcessSpec& spec, const DynamicsSpec& dyn) {
  spec.validate();
  if (spec.value_dim() != dyn.input_dim()) {
    throw ValidationError(fmt::format(
        "dynamics: field expects {}-dimensional state values, process has {}", dyn.input_dim(),
        spec.value_dim()));
  }
  Eigen::MatrixXd g(spec.values.rows(), static_cast<Eigen::Index>(dyn.dim()));
  for (Eigen::Index s = 0; s < g.rows(); ++s) {
    g.row(s) = dyn.input_part(spec.values.row(s).transpose()).transpose();
  }
  if (!spec.is_suspension()) return from_chain(spec.kernel(), g, dyn.lipschitz());

  auto cgf = std::make_shared<const SuspensionCgf>(spec, g);
  const Eigen::MatrixXd& gc = cgf->centered_values();
  Box box{Eigen::VectorXd(gc.cols()), Eigen::VectorXd(gc.cols())};
  for (Eigen::Index i = 0; i < gc.cols(); ++i) {
    const Interval iv = finiteness_domain_time_weighted(spec.transition, gc.col(i), spec.roof);
    box.lower(i) = iv.lower;
    box.upper(i) = iv.upper;
  }
  return RateModel(std::move(cgf), std::move(box), dyn.lipschitz());
}

bool RateModel::finite_at(const Eigen::VectorXd& beta) const {
  if (static_cast<std::size_t>(beta.size()) != dim()) {
    throw UsageError(fmt::format("rate: beta has dimension {}, model {}", beta.size(), dim()));
  }
  return domain_.contains(beta, kEdgeTol) && beta.norm() <= 2.0 * l1_ + kEdgeTol;
}

bool RateModel::finite_at(double beta) const {
  if (dim() != 1) throw UsageError("rate: scalar beta on a vector model");
  return beta >= domain_.lower(0) - kEdgeTol && beta <= domain_.upper(0) + kEdgeTol &&
         std::abs(beta) <= 2.0 * l1_ + kEdgeTol;
}

void RateModel::build_table() {
  constexpr std::size_t kHalf = 256;
  const double lo = std::max(domain_.lower(0), -2.0 * l1_);
  const double hi = std::min(domain_.upper(0), 2.0 * l1_);
  // Nodes cluster toward the domain edges, where I steepens.
  std::vector<double> nodes;
  if (lo < 0.0) {
    for (std::size_t k = kHalf - 1; k >= 1; --k) {
      nodes.push_back(lo * std::sin(0.5 * std::numbers::pi * static_cast<double>(k) /
                                    static_cast<double>(kHalf - 1)));
    }
  }
  nodes.push_back(0.0);
  if (hi > 0.0) {
    for (std::size_t k = 1; k < kHalf; ++k) {
      nodes.push_back(hi * std::sin(0.5 * std::numbers::pi * static_cast<double>(k) /
                                    static_cast<double>(kHalf - 1)));
    }
  }
  if (lo < 0.0) nodes.front() = lo;
  if (hi > 0.0) nodes.back() = hi;
  beta_ = nodes;
  value_.resize(nodes.size());
  slope_.resize(nodes.size());
  dual_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const LegendreResult r = solve_scalar(*cgf_, nodes[i]);
    value_[i] = r.value;
    dual_[i] = r.dual(0);
    slope_[i] = r.dual(0);
  }
  limit_slopes(beta_, value_, slope_);
}

double RateModel::rate(double beta) const {
  if (dim() != 1) throw UsageError("rate: scalar evaluation on a vector model");
  if (!finite_at(beta)) return kInfiniteRate;
  if (beta_.size() == 1) return 0.0;
  const double x = std::clamp(beta, beta_.front(), beta_.back());
  auto it = std::upper_bound(beta_.begin(), beta_.end(), x);
  std::size_t i = it == beta_.end() ? beta_.size() - 2 : static_cast<std::size_t>(it - beta_.begin()) - 1;
  const double h = beta_[i + 1] - beta_[i];
  const double t = (x - beta_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double v = (2 * t3 - 3 * t2 + 1) * value_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
                   (-2 * t3 + 3 * t2) * value_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  return std::max(0.0, v);
}

double RateModel::rate(const Eigen::VectorXd& beta) const {
  if (dim() == 1 && beta.size() == 1) return rate(beta(0));
  return rate_exact(beta).value;
}

LegendreResult RateModel::rate_exact(const Eigen::VectorXd& beta) const {
  return legendre(*this, beta);
}

void RateModel::write_table_csv(std::ostream& os) const {
  os << "b,Pi_b,beta,I_beta\n";
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    fmt::print(os, "{},{},{},{}\n", dual_[i], cgf_->value(dual_[i]), beta_[i], value_[i]);
  }
}

LegendreResult legendre(const RateModel& model, const Eigen::VectorXd& beta) {
  if (!model.finite_at(beta)) {
    return {kInfiniteRate, Eigen::VectorXd::Zero(beta.size()), false, 0.0};
  }
  const Box& box = model.domain();
  bool boundary = false;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (box.upper(i) > box.lower(i) && (std::abs(beta(i) - box.upper(i)) <= kEdgeTol ||
                                        std::abs(beta(i) - box.lower(i)) <= kEdgeTol)) {
      boundary = true;
    }
  }
  LegendreResult r =
      beta.size() == 1 ? solve_scalar(model.cgf(), beta(0)) : solve_vector(model.cgf(), beta);
  r.boundary = boundary;
  return r;
}

double legendre(const RateModel& model, double beta) {
  return legendre(model, Eigen::VectorXd::Constant(1, beta)).value;
}

double action(const Curve& gamma, const RateModel& model) {
  if (gamma.dim() != model.dim()) {
    throw UsageError(fmt::format("action: curve dimension {} vs model {}", gamma.dim(), model.dim()));
  }
  if (!gamma.starts_at_zero(1e-12)) throw UsageError("action: curve must start at 0");
  const std::size_t k = gamma.segments();
  const double scale = static_cast<double>(k);
  double total = 0.0;
  if (gamma.dim() == 1) {
    for (std::size_t i = 0; i < k; ++i) total += model.rate(scale * (gamma(i + 1) - gamma(i)));
  } else {
    Eigen::VectorXd slope(static_cast<Eigen::Index>(gamma.dim()));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < gamma.dim(); ++j) {
        slope(static_cast<Eigen::Index>(j)) = scale * (gamma(i + 1, j) - gamma(i, j));
      }
      total += model.rate(slope);
    }
  }
  return total / scale;
}

VarianceResult variance_at_zero(const Cgf& cgf, const Eigen::VectorXd& direction) {
  const auto second = [&](double h) {
    return (cgf.value(h * direction) + cgf.value(-h * direction) - 2.0 * cgf.value(Eigen::VectorXd::Zero(direction.size()))) /
           (h * h);
  };
  constexpr double h = 1e-3;
  const double v = (4.0 * second(0.5 * h) - second(h)) / 3.0;
  return {v, v <= 1e-8};
}

VarianceResult variance_at_zero(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& values,
                                const Eigen::VectorXd& direction) {
  return variance_at_zero(SpectralCgf(transition, values), direction);
}

}  // namespace erlab
