#include "erlab/donsker_varadhan.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "erlab/cgf.hpp"
#include "erlab/errors.hpp"
#include "erlab/finiteness.hpp"
#include "erlab/processes.hpp"

namespace erlab {

namespace {

double objective(const Eigen::MatrixXd& p, const Eigen::VectorXd& nu, const Eigen::VectorXd& w) {
  const double top = w.maxCoeff();
  const Eigen::VectorXd pe = p * (w.array() - top).exp().matrix();
  double f = 0.0;
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu(j) > 0.0) f += nu(j) * (w(j) - top - std::log(pe(j)));
  }
  return f;
}

// Sum of nu over max(0, y - lambda - mu g) as a function of lambda is
// decreasing; returns the lambda making it 1.
double simplex_shift(const Eigen::VectorXd& z) {
  double lo = z.minCoeff() - 1.0;
  double hi = z.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((z.array() - mid).max(0.0).sum() > 1.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-16 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DvInner dv_functional(const Eigen::MatrixXd& p, const Eigen::VectorXd& nu) {
  const auto n = nu.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  double f = objective(p, nu, w);
  for (int it = 0; it < 200; ++it) {
    // q_jk = P_jk e^{w_k} / (P e^w)_j, row-stochastic.
    const double top = w.maxCoeff();
    const Eigen::VectorXd ew = (w.array() - top).exp().matrix();
    const Eigen::VectorXd pe = p * ew;
    Eigen::MatrixXd q = p * ew.asDiagonal();
    for (Eigen::Index j = 0; j < n; ++j) q.row(j) /= pe(j);
    const Eigen::VectorXd grad = nu - q.transpose() * nu;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-13) break;
    Eigen::MatrixXd neg_hess = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (nu(j) <= 0.0) continue;
      const Eigen::VectorXd qj = q.row(j).transpose();
      neg_hess += nu(j) * (Eigen::MatrixXd(qj.asDiagonal()) - qj * qj.transpose());
    }
    // Constants are a null direction; the ridge removes it.
    neg_hess.diagonal().array() += 1e-12 + 1e-9 * neg_hess.diagonal().maxCoeff();
    Eigen::VectorXd step = neg_hess.ldlt().solve(grad);
    if (!step.allFinite()) step = grad;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = w + t * step;
      const double ft = objective(p, nu, trial);
      if (ft >= f) {
        moved = ft > f || t == 1.0;
        w = trial;
        f = ft;
        break;
      }
    }
    if (!moved) break;
  }
  return {f, w.array() - w.mean()};
}

Eigen::VectorXd project_simplex_slice(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                                      double beta) {
  const auto at = [&](double mu) {
    const Eigen::VectorXd z = y - mu * g;
    return Eigen::VectorXd((z.array() - simplex_shift(z)).max(0.0));
  };
  const auto excess = [&](double mu) { return at(mu).dot(g) - beta; };
  double lo = -1.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && excess(lo) < 0.0; ++it) lo *= 2.0;
  for (int it = 0; it < 200 && excess(hi) > 0.0; ++it) hi *= 2.0;
  if (excess(lo) < 0.0 || excess(hi) > 0.0) {
    throw DomainError(fmt::format("dv_rate: no probability vector has mean {}", beta));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

double dv_rate(const Eigen::MatrixXd& p, const Eigen::VectorXd& values, double beta) {
  const Eigen::VectorXd pi = stationary_law(p);
  const Eigen::VectorXd g = center_values(values, pi);
  const Interval dom = finiteness_domain(p, g);
  if (!(beta > dom.lower && beta < dom.upper)) {
    throw DomainError(fmt::format("dv_rate: beta = {} not strictly inside ({}, {})", beta,
                                  dom.lower, dom.upper));
  }
  if (beta == 0.0) return 0.0;

  const auto n = g.size();
  if (n == 2) {
    // The two linear constraints pin nu down.
    Eigen::VectorXd nu(2);
    nu(0) = (beta - g(1)) / (g(0) - g(1));
    nu(1) = 1.0 - nu(0);
    return dv_functional(p, nu).value;
  }

  Eigen::VectorXd nu = project_simplex_slice(pi, g, beta);
  DvInner cur = dv_functional(p, nu);
  double step = 1.0;
  for (int it = 0; it < 5000; ++it) {
    // Envelope theorem: dJ/dnu_j = w_j - ln (P e^w)_j.
    const double top = cur.w.maxCoeff();
    const Eigen::VectorXd pe = p * (cur.w.array() - top).exp().matrix();
    const Eigen::VectorXd grad = cur.w.array() - top - pe.array().log();
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const Eigen::VectorXd trial = project_simplex_slice(nu - step * grad, g, beta);
      const DvInner next = dv_functional(p, trial);
      if (next.value <= cur.value - 1e-4 * grad.dot(nu - trial)) {
        const double moved = (trial - nu).norm();
        nu = trial;
        cur = next;
        improved = moved > 1e-14;
        step *= 2.0;
        break;
      }
    }
    if (!improved) break;
  }
  return cur.value;
}

}  // namespace erlab
