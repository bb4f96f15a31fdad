#include <cmath>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "erlab/cgf.hpp"
#include "erlab/donsker_varadhan.hpp"
#include "erlab/errors.hpp"
#include "erlab/finiteness.hpp"
#include "erlab/level_set.hpp"
#include "erlab/oracle.hpp"
#include "erlab/processes.hpp"
#include "erlab/rate_model.hpp"

using namespace erlab;

namespace {

const auto& fixtures() {
  static const auto f = oracle::read_fixtures(ERLAB_FIXTURE_DIR "/oracle_fixtures.csv");
  return f;
}

Eigen::MatrixXd flip(double p) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0 - p, p, p, 1.0 - p;
  return m;
}

Eigen::MatrixXd pm_one() {
  Eigen::MatrixXd v(2, 1);
  v << 1.0, -1.0;
  return v;
}

Eigen::VectorXd b1(double b) { return Eigen::VectorXd::Constant(1, b); }

std::shared_ptr<const RateModel> coin_model() {
  static const auto m =
      std::make_shared<const RateModel>(RateModel::from_chain(flip(0.5), pm_one(), 1.0));
  return m;
}

std::shared_ptr<const RateModel> flip_model() {
  static const auto m =
      std::make_shared<const RateModel>(RateModel::from_chain(flip(0.3), pm_one(), 1.0));
  return m;
}

RateModel quadratic_model() {
  auto cgf = std::make_shared<FunctionCgf>(
      1, [](const Eigen::VectorXd& b) { return 0.5 * b.squaredNorm(); },
      [](const Eigen::VectorXd& b) { return Eigen::VectorXd(b); });
  return RateModel(cgf, Box{b1(-5.0), b1(5.0)}, 10.0);
}

Curve nodes(std::vector<double> v) {
  const std::size_t k = v.size() - 1;
  return Curve(k, 1, std::move(v));
}

}  // namespace

// --- Pi ---------------------------------------------------------------------

TEST(Spectral, ZeroAtOrigin) {
  EXPECT_EQ(cgf_spectral(flip(0.3), pm_one(), b1(0.0)), 0.0);
  EXPECT_NEAR(SpectralCgf(flip(0.2), pm_one()).tilted_perron(b1(0.0), false).log_eigenvalue, 0.0,
              1e-10);
}

TEST(Spectral, IidCoinIsLogCosh) {
  for (double b : {-2.0, -0.3, 0.7, 1.0, 3.0}) {
    EXPECT_NEAR(cgf_spectral(flip(0.5), pm_one(), b1(b)), std::log(std::cosh(b)), 1e-12);
  }
}

TEST(Spectral, FlipChainMatchesClosedForm) {
  for (double b : {-1.0, -0.5, 0.5, 1.0}) {
    const auto& f = fixtures().at(fmt::format("flip_cgf_b{}", b));
    EXPECT_NEAR(cgf_spectral(flip(0.3), pm_one(), b1(b)), f.value, 1e-10) << b;
  }
}

TEST(Spectral, AnalyticGradientMatchesDifferences) {
  const SpectralCgf cgf(flip(0.3), pm_one());
  for (double b : {-1.0, 0.0, 0.4}) {
    const double h = 1e-5;
    const double fd = (cgf.value(b + h) - cgf.value(b - h)) / (2 * h);
    EXPECT_NEAR(cgf.derivative(b), fd, 1e-6);
  }
  EXPECT_LE(std::abs(cgf.derivative(0.0)), 1e-6);
}

TEST(Spectral, ConvexMidpoints) {
  const SpectralCgf cgf(flip(0.3), pm_one());
  for (double a = -3.0; a <= 3.0; a += 0.5) {
    for (double b = a + 0.5; b <= 3.0; b += 0.5) {
      EXPECT_LE(cgf.value(0.5 * (a + b)), 0.5 * (cgf.value(a) + cgf.value(b)) + 1e-9);
    }
  }
}

TEST(Spectral, ZerosInTransitionConverge) {
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;  // periodic
  Eigen::MatrixXd g(2, 1);
  g << 0.0, 1.0;
  EXPECT_NEAR(cgf_spectral(p, g, b1(2.0)), 0.0, 1e-10);  // centered G = (-1/2, 1/2)
}

TEST(Empirical, ZeroAndConstant) {
  EXPECT_EQ(cgf_empirical(flip_chain(0.3), pm_one(), b1(0.0), 1000, 10, 1).value, 0.0);
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(2, 1, 0.7);
  EXPECT_DOUBLE_EQ(cgf_empirical(flip_chain(0.3), c, b1(2.0), 1000, 10, 1).value, 1.4);
  EXPECT_THROW(cgf_empirical(flip_chain(0.3), pm_one(), b1(1.0), 999, 10, 1), UsageError);
  EXPECT_THROW(cgf_empirical(flip_chain(0.3), pm_one(), b1(1.0), 1000, 9, 1), UsageError);
}

TEST(Empirical, CoinLogCosh) {
  const auto r = cgf_empirical(fair_coin(), pm_one(), b1(1.0), 100000, 50, 11);
  EXPECT_NEAR(r.value, fixtures().at("coin_cgf_b1").value, 0.02);
  EXPECT_GT(r.std_error, 0.0);
}

TEST(Empirical, FlipMatchesSpectral) {
  const auto r = cgf_empirical(flip_chain(0.3), pm_one(), b1(0.5), 100000, 50, 12);
  EXPECT_NEAR(r.value, cgf_spectral(flip(0.3), pm_one(), b1(0.5)), 0.02);
}

TEST(Empirical, TwoPointLaw) {
  Eigen::MatrixXd v(2, 1);
  v << 2.0, -1.0;
  Eigen::VectorXd law(2);
  law << 0.3, 0.7;
  const auto r = cgf_empirical(make_iid(v, law), v, b1(0.5), 100000, 50, 13);
  EXPECT_NEAR(r.value, fixtures().at("twopoint_cgf").value, std::max(0.02, 3 * r.std_error));
}

// --- I ----------------------------------------------------------------------

TEST(Legendre, Examples) {
  EXPECT_EQ(legendre(*coin_model(), 0.0), 0.0);
  const RateModel q = quadratic_model();
  for (double beta : {-2.0, 0.3, 1.7}) EXPECT_NEAR(legendre(q, beta), 0.5 * beta * beta, 1e-9);
  EXPECT_NEAR(legendre(*coin_model(), 0.5), fixtures().at("coin_rate_0.5").value, 1e-9);
  EXPECT_NEAR(legendre(*flip_model(), 0.4), fixtures().at("flip_rate_0.4").value, 1e-9);
}

TEST(Legendre, CoinMatchesClosedFormOnGrid) {
  for (double beta = -0.95; beta <= 0.951; beta += 0.05) {
    EXPECT_NEAR(coin_model()->rate_exact(beta), oracle::coin_rate(beta), 1e-9) << beta;
    EXPECT_NEAR(coin_model()->rate(beta), oracle::coin_rate(beta), 1e-6) << beta;
  }
}

TEST(Legendre, BoundaryAndOutside) {
  const auto at_edge = legendre(*coin_model(), b1(1.0));
  EXPECT_TRUE(at_edge.boundary);
  EXPECT_TRUE(at_edge.finite());
  EXPECT_NEAR(at_edge.value, std::log(2.0), 1e-6);
  EXPECT_EQ(legendre(*coin_model(), 1.1), kInfiniteRate);
  EXPECT_EQ(coin_model()->rate(-1.1), kInfiniteRate);
}

TEST(Legendre, PositiveAndStrictlyIncreasing) {
  for (const auto& m : {coin_model(), flip_model()}) {
    for (double beta = -0.9; beta <= 0.91; beta += 0.1) {
      if (std::abs(beta) < 1e-12) continue;
      const double i = m->rate_exact(beta);
      EXPECT_GT(i, 0.0);
      for (double d : {0.1, 0.5}) {
        const double scaled = (1.0 + d) * beta;
        if (std::abs(scaled) < 1.0) {
          EXPECT_GT(m->rate_exact(scaled), i);
        } else {
          EXPECT_EQ(m->rate_exact(scaled), kInfiniteRate);
        }
      }
    }
  }
}

TEST(Legendre, LinearGrowthCutoff) {
  // A bounded observable with a cap tighter than its range: |beta| > 2 L1 is infinite.
  const RateModel m = RateModel::from_chain(flip(0.5), pm_one() * 3.0, 1.0);
  EXPECT_TRUE(std::isfinite(m.rate(1.9)));
  EXPECT_EQ(m.rate(2.1), kInfiniteRate);
  EXPECT_EQ(m.rate_exact(-2.1), kInfiniteRate);
}

TEST(Legendre, VectorCase) {
  // Independent coordinates: I(b1, b2) = I(b1) + I(b2).
  auto cgf = std::make_shared<FunctionCgf>(2, [](const Eigen::VectorXd& b) {
    return std::log(std::cosh(b(0))) + std::log(std::cosh(b(1)));
  });
  Eigen::VectorXd lo(2), hi(2);
  lo << -1, -1;
  hi << 1, 1;
  const RateModel m(cgf, Box{lo, hi}, 1.0);
  Eigen::VectorXd beta(2);
  beta << 0.5, -0.3;
  EXPECT_NEAR(m.rate(beta), oracle::coin_rate(0.5) + oracle::coin_rate(-0.3), 1e-6);
  beta << 1.2, 0.0;
  EXPECT_EQ(m.rate(beta), kInfiniteRate);
}

TEST(Legendre, TableCsv) {
  std::ostringstream os;
  coin_model()->write_table_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "b,Pi_b,beta,I_beta");
}

// --- action -------------------------------------------------------------------

TEST(Action, Examples) {
  const auto& m = *coin_model();
  EXPECT_EQ(action(nodes({0, 0, 0, 0}), m), 0.0);
  EXPECT_NEAR(action(Curve::line(8, b1(0.5)), m), m.rate(0.5), 1e-12);
  EXPECT_NEAR(action(nodes({0.0, 0.3, 0.0}), m), 0.5 * m.rate(0.6) + 0.5 * m.rate(-0.6), 1e-12);
  EXPECT_EQ(action(nodes({0.0, 0.6, 0.0}), m), kInfiniteRate);
  EXPECT_THROW(action(nodes({0.1, 0.2}), m), UsageError);
}

// --- finiteness -----------------------------------------------------------------

TEST(Finiteness, Examples) {
  const auto coin = finiteness_domain(flip(0.5), pm_one().col(0));
  EXPECT_EQ(coin.lower, -1.0);
  EXPECT_EQ(coin.upper, 1.0);
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  Eigen::VectorXd g(2);
  g << 0.0, 1.0;
  EXPECT_NEAR(max_mean_cycle(p, g), fixtures().at("cycle_mean_two_cycle").value, 1e-15);
}

TEST(Finiteness, KarpMatchesCycleEnumeration) {
  std::uint64_t s = 99;
  const auto next = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(s >> 11) * 0x1.0p-53;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::vector<double>> pv(n, std::vector<double>(n, 0.0));
    Eigen::VectorXd w(n);
    std::vector<double> wv(n);
    for (int i = 0; i < n; ++i) {
      p(i, (i + 1) % n) = 1.0;  // keeps the graph strongly connected
      for (int j = 0; j < n; ++j) {
        if (next() < 0.3) p(i, j) = 1.0;
      }
      p.row(i) /= p.row(i).sum();
      w(i) = wv[i] = std::round(next() * 20.0 - 10.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pv[i][j] = p(i, j);
    EXPECT_NEAR(max_mean_cycle(p, w), oracle::brute_max_cycle_mean(pv, wv), 1e-12);
  }
}

TEST(Finiteness, SuspensionCycleRatio) {
  Eigen::MatrixXd p(2, 2);
  p << 0.6, 0.4, 0.4, 0.6;
  Eigen::VectorXd g(2), roof(2);
  g << 1.0, -1.0;
  roof << 2.0, 0.5;
  const Interval d = finiteness_domain_time_weighted(p, g, roof);
  EXPECT_NEAR(d.upper, 1.0, 1e-9);  // self-loop on the first state
  EXPECT_NEAR(d.lower, -1.0, 1e-9);
}

// --- Donsker-Varadhan -------------------------------------------------------------

TEST(DonskerVaradhan, StationaryIsZero) {
  const Eigen::VectorXd pi = stationary_law(flip(0.3));
  EXPECT_NEAR(dv_functional(flip(0.3), pi).value, 0.0, 1e-12);
  EXPECT_EQ(dv_rate(flip(0.3), pm_one().col(0), 0.0), 0.0);
}

TEST(DonskerVaradhan, AgreesWithLegendre) {
  EXPECT_NEAR(dv_rate(flip(0.5), pm_one().col(0), 0.5), fixtures().at("coin_rate_0.5").value, 1e-4);
  EXPECT_NEAR(dv_rate(flip(0.3), pm_one().col(0), 0.4), legendre(*flip_model(), 0.4), 1e-4);
}

TEST(DonskerVaradhan, ThreeStateChain) {
  Eigen::MatrixXd p(3, 3);
  p << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2;
  Eigen::MatrixXd g(3, 1);
  g << 1.0, 0.0, -2.0;
  const RateModel m = RateModel::from_chain(p, g, 2.0);
  for (double t : {-0.6, -0.2, 0.3, 0.7}) {
    const double beta = m.beta_minus() + (m.beta_plus() - m.beta_minus()) * (t + 1.0) / 2.0;
    EXPECT_NEAR(dv_rate(p, g.col(0), beta), m.rate_exact(beta), 1e-4) << beta;
  }
}

TEST(DonskerVaradhan, InfeasibleIsDomainError) {
  EXPECT_THROW(dv_rate(flip(0.3), pm_one().col(0), 1.0), DomainError);
  EXPECT_THROW(dv_rate(flip(0.3), pm_one().col(0), -1.5), DomainError);
}

TEST(Projection, LandsOnSlice) {
  Eigen::VectorXd y(3), g(3);
  y << 0.9, -0.2, 0.5;
  g << 1.0, 0.0, -1.0;
  const Eigen::VectorXd nu = project_simplex_slice(y, g, 0.25);
  EXPECT_NEAR(nu.sum(), 1.0, 1e-10);
  EXPECT_NEAR(nu.dot(g), 0.25, 1e-10);
  EXPECT_GE(nu.minCoeff(), 0.0);
}

// --- variance --------------------------------------------------------------------

TEST(Variance, Examples) {
  EXPECT_NEAR(variance_at_zero(flip(0.5), pm_one(), b1(1.0)).value, 1.0, 1e-6);
  const auto zero = variance_at_zero(flip(0.3), Eigen::MatrixXd::Zero(2, 1), b1(1.0));
  EXPECT_TRUE(zero.degenerate);
  EXPECT_NEAR(variance_at_zero(flip(0.3), pm_one(), b1(1.0)).value,
              fixtures().at("flip_variance").value, 1e-6);
}

TEST(Variance, BatchMeansAgree) {
  // Long-run batch-means estimate of the asymptotic variance.
  const auto spec = std::make_shared<const ProcessSpec>(flip_chain(0.3));
  const std::size_t n = 10000000, batch = 10000;
  const FastPath path = sample_path(spec, 21, n);
  double sum_sq = 0.0;
  for (std::size_t start = 0; start < n; start += batch) {
    double s = 0.0;
    for (std::size_t i = start; i < start + batch; ++i) s += path.value(i)(0);
    sum_sq += s * s / batch;
  }
  const double est = sum_sq / (n / batch);
  EXPECT_NEAR(est, fixtures().at("flip_variance").value, 0.15);
}

// --- level sets --------------------------------------------------------------------

TEST(LevelSet, Examples) {
  const auto set = make_curve_set(legendre(*coin_model(), 0.5), coin_model(), 4);
  EXPECT_EQ(level_set_distance(Curve::line(4, b1(0.3)), set), 0.0);
  const Curve v = nodes({0.0, 0.2, -0.1, 0.4, 0.1});
  EXPECT_NEAR(level_set_distance(v, set.with_budget(0.0)), 0.4, 1e-6);
  EXPECT_NEAR(level_set_distance(Curve::line(4, b1(0.8)), set),
              fixtures().at("level_line_0.8").value, 1e-5);
}

TEST(LevelSet, MatchesBruteForceOracle) {
  const std::vector<double> grid = oracle::default_slope_grid();
  for (const auto& c : oracle::level_cases()) {
    const Curve v(c.nodes.size() - 1, 1, c.nodes);
    const auto set = make_curve_set(c.budget, coin_model(), v.segments());
    const double fast = level_set_distance(v, set);
    const double brute = fixtures().at(c.id).value;
    const double coarse = fixtures().at(c.id + "_coarse").value;
    // Grid oracles can only overshoot the continuous optimum.
    EXPECT_LE(fast, brute + 1e-5) << c.id;
    EXPECT_LE(brute, coarse) << c.id;
    EXPECT_NEAR(fast, brute, 2e-3) << c.id;
  }
}

TEST(LevelSet, MonotoneInBudget) {
  const Curve v = nodes({0.0, 0.3, 0.1, 0.5, 0.9});
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.0, 0.02, 0.05, 0.1, 0.2, 0.4}) {
    const double d = level_set_distance(v, make_curve_set(a, coin_model(), 4));
    EXPECT_LE(d, prev + 1e-6);
    prev = d;
  }
}

TEST(LevelSet, ChecksInput) {
  const auto set = make_curve_set(0.1, coin_model(), 4);
  EXPECT_THROW(level_set_distance(Curve::line(3, b1(0.1)), set), UsageError);
  EXPECT_THROW(level_set_distance(nodes({0.1, 0, 0, 0, 0}), set), UsageError);
}

TEST(LevelSetNet, Examples) {
  EXPECT_EQ(level_set_net(make_curve_set(0.0, coin_model(), 3), 0.2).size(), 1u);
  const auto single = level_set_net(make_curve_set(legendre(*coin_model(), 0.5), coin_model(), 1), 0.2);
  for (const Curve& c : single) EXPECT_LE(coin_model()->rate(c(1)), legendre(*coin_model(), 0.5) + 1e-9);
  const auto net = level_set_net(make_curve_set(legendre(*coin_model(), 0.5), coin_model(), 3), 0.2);
  EXPECT_EQ(static_cast<double>(net.size()), fixtures().at("net_count_k3").value);
}

TEST(LevelSetNet, BudgetGuard) {
  EXPECT_THROW(level_set_net(make_curve_set(0.5, coin_model(), 12), 0.05), BudgetError);
}

TEST(LevelSetNet, CoversSlopeGridFamily) {
  const double a = legendre(*coin_model(), 0.5);
  const auto set = make_curve_set(a, coin_model(), 3);
  const auto net = level_set_net(set, 0.2);
  const auto grid = net_slope_grid(set, 0.2);
  for (double s0 : grid)
    for (double s1 : grid)
      for (double s2 : grid) {
        const std::vector<double> s{s0, s1, s2};
        if ((coin_model()->rate_exact(s0) + coin_model()->rate_exact(s1) +
             coin_model()->rate_exact(s2)) / 3.0 > a + 1e-9)
          continue;
        const Curve c = Curve::from_slopes(s);
        double best = std::numeric_limits<double>::infinity();
        for (const Curve& g : net) best = std::min(best, rho(c, g));
        ASSERT_LT(best, 0.2);
      }
}
