#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "erlab/dynamics.hpp"
#include "erlab/erlaw.hpp"
#include "erlab/errors.hpp"
#include "erlab/level_set.hpp"
#include "erlab/oracle.hpp"
#include "erlab/processes.hpp"
#include "erlab/rate_model.hpp"
#include "erlab/window.hpp"

using namespace erlab;

namespace {

const auto& fixtures() {
  static const auto f = oracle::read_fixtures(ERLAB_FIXTURE_DIR "/oracle_fixtures.csv");
  return f;
}

Eigen::VectorXd v1(double v) { return Eigen::VectorXd::Constant(1, v); }
Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

std::shared_ptr<const ProcessSpec> coin() {
  static const auto s = std::make_shared<const ProcessSpec>(fair_coin());
  return s;
}

std::shared_ptr<const RateModel> coin_model() {
  static const auto m = std::make_shared<const RateModel>(RateModel::from_process(*coin(), DynamicsSpec::observable(1.0)));
  return m;
}

double coin_i05() { return fixtures().at("coin_rate_0.5").value; }

WindowParams coin_window(double log_inv_eps, std::size_t segments, double horizon) {
  WindowParams wp;
  wp.epsilon = std::exp(-log_inv_eps);
  wp.horizon = horizon;
  wp.grid = 8;
  wp.c = {1.0 / coin_i05()};
  wp.segments = segments;
  return wp;
}

Curve random_curve(std::mt19937_64& g, std::size_t segments) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Curve c(segments, 1);
  for (std::size_t k = 1; k <= segments; ++k) c(k) = u(g);
  return c;
}

std::vector<Curve> random_set(std::mt19937_64& g, std::size_t size, std::size_t segments) {
  std::vector<Curve> out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(random_curve(g, segments));
  return out;
}

}  // namespace

// --- partial sums -------------------------------------------------------------

TEST(PartialSum, ZeroValues) {
  const std::vector<double> z(20, 0.0);
  const Curve c = partial_sum_curve(PrefixSums(z), 3, 8.0, 4);
  EXPECT_EQ(c.sup_norm(), 0.0);
}

TEST(PartialSum, ConstantWithinOneCell) {
  const std::vector<double> g(100, 0.7);
  const double r = 13.0;
  const Curve c = partial_sum_curve(PrefixSums(g), 5, r, 8);
  for (std::size_t k = 0; k <= 8; ++k) EXPECT_LE(std::abs(c(k) - c.u(k) * 0.7), 0.7 / r + 1e-12);
}

TEST(PartialSum, MatchesHandSum) {
  const std::vector<double> v{1.0, -1.0, 1.0, 1.0};
  const Curve c = partial_sum_curve(PrefixSums(v), 0, 4.0, 4);
  for (std::size_t k = 0; k <= 4; ++k) {
    EXPECT_DOUBLE_EQ(c(k), fixtures().at(fmt::format("partial_sum_u{}", k)).value);
  }
  const auto brute = oracle::brute_partial_sums(v, 4.0, 4);
  for (std::size_t k = 0; k <= 4; ++k) EXPECT_DOUBLE_EQ(c(k), brute[k]);
}

TEST(PartialSum, OverrunIsRangeError) {
  const std::vector<double> v(10, 1.0);
  EXPECT_THROW(partial_sum_curve(PrefixSums(v), 5, 6.0, 3), RangeError);
}

// --- er_curve -------------------------------------------------------------------

TEST(ErCurve, ConstantFieldCancels) {
  const double v = 0.8;
  const auto dyn = DynamicsSpec::affine(m1(0.0), m1(0.0), v1(v), 1.0);
  const WindowParams wp = coin_window(6.0, 4, 0.5);
  const std::size_t steps = wp.last_index() + static_cast<std::size_t>(wp.max_window()) + 2;
  const Trajectory t =
      integrate_slow_discrete(dyn, v1(0.0), wp.epsilon, sample_path(coin(), 4, steps), steps);
  const DriftCentering centering = DriftCentering::constant(v1(v));
  for (std::size_t l : {0ul, 7ul, 100ul}) {
    const Curve c = er_curve(t, centering, wp, l);
    EXPECT_LE(c.sup_norm(), 2.0 * v / wp.window(l));
  }
}

TEST(ErCurve, ObservableDriftIsPartialSum) {
  const WindowParams wp = coin_window(7.0, 8, 0.2);
  const std::size_t steps = wp.last_index() + static_cast<std::size_t>(wp.max_window()) + 2;
  const FastPath path = sample_path(coin(), 9, steps);
  const Trajectory t =
      integrate_slow_discrete(DynamicsSpec::observable(1.0), v1(0.0), wp.epsilon, path, steps);
  const PrefixSums sums(path, coin()->values);
  const DriftCentering centering = DriftCentering::constant(v1(0.0));
  for (std::size_t l = 0; l <= wp.last_index(); l += 17) {
    const Curve a = er_curve(t, centering, wp, l);
    const Curve b = partial_sum_curve(sums, l, wp.window(l), wp.segments);
    // Equal up to the rounding of accumulating eps * y into X.
    EXPECT_LE(rho(a, b), 1e-9) << l;
  }
}

TEST(ErCurve, ShortTrajectoryIsRangeError) {
  const WindowParams wp = coin_window(6.0, 4, 0.5);
  const Trajectory t = integrate_slow_discrete(DynamicsSpec::observable(1.0), v1(0.0), wp.epsilon,
                                               sample_path(coin(), 1, 50), 50);
  EXPECT_THROW(er_curve(t, DriftCentering::constant(v1(0.0)), wp, 10), RangeError);
  EXPECT_THROW(DiscreteErFamily(t, DriftCentering::constant(v1(0.0)), wp), RangeError);
}

// --- classic maximum ----------------------------------------------------------------

TEST(ClassicMax, AllOnes) {
  const std::vector<double> v(30, 1.0);
  for (std::size_t k : {1ul, 5ul, 30ul}) {
    const ClassicMax r = er_classic_max(v, v.size(), k);
    EXPECT_EQ(r.mean, 1.0);
    EXPECT_EQ(r.argmax, 0u);
  }
}

TEST(ClassicMax, HandExample) {
  const std::vector<double> v{1.0, -1.0, 1.0, 1.0, -1.0};
  const ClassicMax r = er_classic_max(v, v.size(), 2);
  EXPECT_EQ(r.max_increment, fixtures().at("er_max_k2").value);
  EXPECT_EQ(r.argmax, 2u);
}

TEST(ClassicMax, MatchesExhaustiveScan) {
  std::mt19937_64 g(11);
  std::uniform_int_distribution<int> val(-5, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + g() % 60;
    std::vector<double> v(n);
    for (double& x : v) x = val(g);
    const std::size_t k = 1 + g() % n;
    EXPECT_EQ(er_classic_max(v, n, k).max_increment, oracle::brute_er_max(v, k));
  }
}

TEST(ClassicMax, MaxIncrementGrowsWithWindowForNonnegativeValues) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(200);
  for (double& x : v) x = u(g);
  double prev = -1.0;
  for (std::size_t k = 1; k <= v.size(); ++k) {
    const double m = er_classic_max(v, v.size(), k).max_increment;
    EXPECT_GE(m, prev - 1e-12);
    prev = m;
  }
}

TEST(ClassicMax, BadWindowIsUsageError) {
  const std::vector<double> v(5, 1.0);
  EXPECT_THROW(er_classic_max(v, 5, 6), UsageError);
  EXPECT_THROW(er_classic_max(v, 5, 0), UsageError);
  EXPECT_THROW(er_classic_max(v, 6, 2), UsageError);
}

// --- upper / lower / Hausdorff ------------------------------------------------------

TEST(Upper, ZeroFamily) {
  const auto set = make_curve_set(coin_i05(), coin_model(), 4);
  const CurveList fam({Curve(4, 1), Curve(4, 1), Curve(4, 1)});
  EXPECT_EQ(upper_statistic(fam, set).value, 0.0);
}

TEST(Upper, SingleCurveIsLevelDistance) {
  const auto set = make_curve_set(coin_i05(), coin_model(), 4);
  const Curve v = Curve::line(4, v1(0.8));
  const CurveList fam({v}, {0.25});
  const SupResult r = upper_statistic(fam, set);
  EXPECT_EQ(r.value, level_set_distance(v, set));
  EXPECT_EQ(r.argmax_t, 0.25);
}

TEST(Upper, NonincreasingInBudget) {
  std::mt19937_64 g(3);
  const CurveList fam(random_set(g, 12, 4));
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.0, 0.05, 0.13, 0.3, 0.6}) {
    const double s = upper_statistic(fam, make_curve_set(a, coin_model(), 4)).value;
    EXPECT_LE(s, prev + 1e-6) << a;
    prev = s;
  }
}

TEST(Lower, ZeroNet) {
  const CurveList fam({Curve::line(4, v1(0.5)), Curve::line(4, v1(1e-3))}, {0.0, 1.0});
  const LowerResult r = lower_statistic(fam, {Curve(4, 1)});
  EXPECT_NEAR(r.value, 1e-3, 1e-15);
  EXPECT_EQ(r.approach_t, 1.0);
}

TEST(Lower, NetMemberInFamily) {
  std::mt19937_64 g(8);
  auto curves = random_set(g, 6, 4);
  const std::vector<Curve> net{curves[4]};
  const CurveList fam(std::move(curves));
  EXPECT_EQ(lower_statistic(fam, net).value, 0.0);
}

TEST(Lower, EmptyNetIsUsageError) {
  const CurveList fam({Curve(4, 1)});
  EXPECT_THROW(lower_statistic(fam, {}), UsageError);
}

TEST(Hausdorff, Examples) {
  std::mt19937_64 g(1);
  const auto a = random_set(g, 5, 6);
  EXPECT_EQ(hausdorff(a, a), 0.0);
  EXPECT_DOUBLE_EQ(hausdorff({Curve(6, 1)}, {Curve::line(6, v1(-0.45))}), 0.45);
  EXPECT_THROW(hausdorff({}, a), UsageError);
  EXPECT_THROW(hausdorff(a, {}), UsageError);
}

TEST(Hausdorff, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_set(g, 1 + g() % 5, 5);
    const auto b = random_set(g, 1 + g() % 5, 5);
    const auto c = random_set(g, 1 + g() % 5, 5);
    EXPECT_EQ(hausdorff(a, b), hausdorff(b, a));
    EXPECT_LE(hausdorff(a, c), hausdorff(a, b) + hausdorff(b, c) + 1e-12);
  }
}

TEST(Hausdorff, LevelSetReportsBothSides) {
  const auto set = make_curve_set(coin_i05(), coin_model(), 3);
  const auto net = level_set_net(set, 0.2);
  const CurveList fam({Curve::line(3, v1(0.9)), Curve(3, 1)});
  const HausdorffReport h = hausdorff_level_set(fam, set, net, 0.2);
  EXPECT_EQ(h.value, std::max(h.exact_side, h.sampled_side));
  EXPECT_NEAR(h.exact_side, level_set_distance(Curve::line(3, v1(0.9)), set), 1e-12);
  EXPECT_EQ(h.net_bias, 0.2);
}

// --- endpoint --------------------------------------------------------------------------

TEST(Endpoint, InjectedSpike) {
  const CurveList fam({Curve::line(4, v1(0.1)), Curve::line(4, v1(0.7)), Curve::line(4, v1(-0.2))},
                      {0.0, 0.5, 1.0});
  const SupResult r = endpoint_statistic(fam, *coin_model(), 0.5);
  EXPECT_DOUBLE_EQ(r.value, 0.7);
  EXPECT_EQ(r.argmax_t, 0.5);
  EXPECT_EQ(r.argmax_index, 1u);
}

TEST(Endpoint, ConstantIncrementsGiveZero) {
  const auto dyn = DynamicsSpec::affine(m1(0.0), m1(0.0), v1(0.4), 1.0);
  const WindowParams wp = coin_window(6.0, 4, 0.3);
  const std::size_t steps = wp.last_index() + static_cast<std::size_t>(wp.max_window()) + 2;
  const Trajectory t =
      integrate_slow_discrete(dyn, v1(0.0), wp.epsilon, sample_path(coin(), 2, steps), steps);
  const DriftCentering centering = DriftCentering::constant(v1(0.4));
  const DiscreteErFamily fam(t, centering, wp);
  // Only the floor of the window separates V(1) from 0.
  EXPECT_NEAR(endpoint_statistic(fam, *coin_model(), 0.5).value, 0.0, 0.4 / wp.window(0));
}

TEST(Endpoint, OutsideDomainIsDomainError) {
  const CurveList fam({Curve(4, 1)});
  EXPECT_THROW(endpoint_statistic(fam, *coin_model(), 1.5), DomainError);
}

// --- window parameters ------------------------------------------------------------------

TEST(Window, DerivedQuantities) {
  WindowParams wp = coin_window(20.0, 8, 1.0);
  EXPECT_EQ(WindowParams::default_stride(wp.epsilon), 400u);
  EXPECT_EQ(WindowParams::default_stride(0.5), 1u);
  EXPECT_NEAR(wp.window(0), fixtures().at("window_b_e-20").value, 1e-9);
  wp.epsilon = 0.01;
  EXPECT_EQ(wp.last_index(), 100u);
  EXPECT_EQ(wp.grid_cell(37), 2u);
  EXPECT_DOUBLE_EQ(wp.tau(37), 0.25);
  EXPECT_DOUBLE_EQ(wp.tau(100), 1.0);
}

TEST(Window, ValidationNamesTheConstraint) {
  WindowParams wp = coin_window(5.0, 4, 1.0);
  wp.epsilon = 1.5;
  EXPECT_THROW(wp.validate(), ValidationError);
  wp = coin_window(5.0, 4, 1.0);
  wp.c = {-1.0};
  EXPECT_THROW(wp.validate(), ValidationError);
}

// --- discretization -------------------------------------------------------------------

TEST(Discretization, DoublingSegmentsMovesUpperByAtMostTwoLipschitzOverK) {
  const double l1 = 1.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const WindowParams w4 = coin_window(8.0, 4, 0.05);
    WindowParams w8 = w4;
    w8.segments = 8;
    const std::size_t steps = w4.last_index() + static_cast<std::size_t>(w4.max_window()) + 2;
    const Trajectory t = integrate_slow_discrete(DynamicsSpec::observable(l1), v1(0.0), w4.epsilon,
                                                 sample_path(coin(), seed, steps), steps);
    const DriftCentering centering = DriftCentering::constant(v1(0.0));
    const double a = 1.0 / w4.c[0];
    const double r4 = upper_statistic(DiscreteErFamily(t, centering, w4),
                                      make_curve_set(a, coin_model(), 4)).value;
    const double r8 = upper_statistic(DiscreteErFamily(t, centering, w8),
                                      make_curve_set(a, coin_model(), 8)).value;
    EXPECT_LE(std::abs(r4 - r8), 2.0 * l1 / 4.0 + 1e-5) << seed;
  }
}
