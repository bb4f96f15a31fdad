#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "erlab/curve.hpp"
#include "erlab/errors.hpp"
#include "erlab/oracle.hpp"

using namespace erlab;

namespace {

const auto& fixtures() {
  static const auto f = oracle::read_fixtures(ERLAB_FIXTURE_DIR "/oracle_fixtures.csv");
  return f;
}

}  // namespace

TEST(TwoPointCgf, Examples) {
  EXPECT_NEAR(oracle::brute_cgf_twopoint(0.5, {1.0, -1.0}, 1.0), std::log(std::cosh(1.0)), 1e-15);
  EXPECT_EQ(oracle::brute_cgf_twopoint(0.3, {2.0, -1.0}, 0.0), 0.0);
  EXPECT_NEAR(oracle::brute_cgf_twopoint(0.3, {2.0, -1.0}, 0.5),
              std::log(0.3 * std::exp(1.0) + 0.7 * std::exp(-0.5)), 1e-15);
}

TEST(BruteErMax, Examples) {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_EQ(oracle::brute_er_max(ones, 2), 2.0);
  const std::vector<double> v{1.0, -1.0, 1.0, 1.0, -1.0};
  EXPECT_EQ(oracle::brute_er_max(v, 2), 2.0);
  EXPECT_THROW(oracle::brute_er_max(ones, 4), UsageError);
}

TEST(BruteLevelDistance, Examples) {
  const auto grid = oracle::default_slope_grid();
  const auto rate = [](double s) { return oracle::coin_rate(s); };
  EXPECT_EQ(oracle::brute_level_distance(Curve(4, 1), rate, 0.1, grid), 0.0);
  const Curve v(4, 1, {0.0, 0.2, -0.1, 0.4, 0.1});
  EXPECT_NEAR(oracle::brute_level_distance(v, rate, 0.0, grid), 0.4, 1e-12);
  EXPECT_THROW(oracle::brute_level_distance(Curve(5, 1), rate, 0.1, grid), BudgetError);
}

TEST(Eigen2x2, Examples) {
  EXPECT_NEAR(oracle::eigen2x2_closed_form({{{0.7, 0.3}, {0.3, 0.7}}}), 1.0, 1e-15);
  EXPECT_NEAR(oracle::eigen2x2_closed_form({{{2.0, 1.0}, {1.0, 2.0}}}), 3.0, 1e-15);
  EXPECT_NEAR(std::log(oracle::eigen2x2_closed_form(
                  {{{0.7 * std::exp(0.5), 0.3 * std::exp(-0.5)},
                    {0.3 * std::exp(0.5), 0.7 * std::exp(-0.5)}}})),
              fixtures().at("flip_cgf_b0.5").value, 1e-14);
}

TEST(SmallOracles, AgreeWithHandValues) {
  const auto pi = oracle::stationary_2x2({{{0.9, 0.1}, {0.5, 0.5}}});
  EXPECT_NEAR(pi[0], 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(oracle::flip_chain_variance(1.0 / 3.0), 2.0, 1e-12);
  EXPECT_NEAR(oracle::suspension_mean_2({0.5, 0.5}, {2.0, 0.5}, {1.0, -1.0}), 0.6, 1e-15);
  EXPECT_NEAR(oracle::flip_chain_rate(0.5, 0.5), oracle::coin_rate(0.5), 1e-10);
  const std::vector<double> roofs{1.0, 2.0, 0.5};
  double residual = 0.0;
  EXPECT_EQ(oracle::brute_suspension_index(roofs, 3.25, &residual), 2u);
  EXPECT_NEAR(residual, 0.25, 1e-15);
}

TEST(Report, PassIffWithinTolerance) {
  EXPECT_TRUE(oracle::compare("a", 1.0, 1.0 + 1e-9, 1e-8).pass);
  EXPECT_FALSE(oracle::compare("b", 1.0, 1.1, 1e-8).pass);
  const auto r = oracle::compare("c", 2.0, 1.5, 0.5);
  EXPECT_EQ(r.difference, 0.5);
  EXPECT_TRUE(r.pass);
}

TEST(Fixtures, CommittedFileIsReproduced) {
  const auto rows = oracle::compute_fixtures();
  ASSERT_EQ(rows.size(), fixtures().size());
  for (const auto& row : rows) {
    const auto it = fixtures().find(row.case_id);
    ASSERT_NE(it, fixtures().end()) << row.case_id;
    EXPECT_EQ(it->second.value, row.value) << row.case_id;
    EXPECT_EQ(it->second.oracle_name, row.oracle_name) << row.case_id;
    EXPECT_EQ(it->second.parameters, row.parameters) << row.case_id;
  }
}

TEST(Fixtures, RoundTripThroughCsv) {
  const auto path = std::filesystem::temp_directory_path() / "erlab_fixture_roundtrip.csv";
  const std::vector<oracle::FixtureRow> rows{{"x", 0.1, "o", "p=1, q=\"2\""}, {"y", -3e-300, "o", ""}};
  oracle::write_fixtures(path.string(), rows);
  const auto back = oracle::read_fixtures(path.string());
  EXPECT_EQ(back.at("x").value, 0.1);
  EXPECT_EQ(back.at("x").parameters, rows[0].parameters);
  EXPECT_EQ(back.at("y").value, -3e-300);
  std::filesystem::remove(path);
}
