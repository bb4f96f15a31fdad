#pragma once

// Brute-force references. Nothing here calls into the fast paths; the only
// shared type is Curve, read as plain node data.

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "erlab/curve.hpp"

namespace erlab::oracle {

struct OracleReport {
  std::string case_id;
  double oracle_value;
  double fast_value;
  double difference;
  double tolerance;
  bool pass;  // difference <= tolerance
};

OracleReport compare(std::string case_id, double oracle_value, double fast_value,
                     double tolerance);

/// ln(p e^{t a} + (1 - p) e^{t b}).
double brute_cgf_twopoint(double p, std::array<double, 2> values, double t);

/// max over m of sum_{j=m}^{m+k-1} v_j by direct double loop.
double brute_er_max(std::span<const double> values, std::size_t k);

using RateFn = std::function<double(double)>;

/// min over slope tuples from `slopes` with (1/K) sum I(s_k) <= a of the
/// largest nodal gap to V. Requires K <= 4 and at most 41 grid points.
double brute_level_distance(const Curve& v, const RateFn& rate, double a,
                            std::span<const double> slopes);

/// Same search, then `passes` re-enumerations on per-segment 41-point grids
/// of 20x finer pitch centered on the incumbent. Each pass can only lower the
/// value, and every value is attained by a feasible grid curve.
double brute_level_distance_zoom(const Curve& v, const RateFn& rate, double a,
                                 std::span<const double> slopes, int passes);

/// Size of the greedy delta-net over slope tuples with mean rate <= a,
/// enumerated lexicographically (first segment most significant).
std::size_t brute_net_count(const RateFn& rate, double a, std::span<const double> slopes,
                            std::size_t segments, double delta);

/// Larger root of lambda^2 - tr lambda + det = 0 for a positive 2x2 matrix.
double eigen2x2_closed_form(std::array<std::array<double, 2>, 2> m);

/// Stationary law of a 2x2 chain from the balance equation.
std::array<double, 2> stationary_2x2(std::array<std::array<double, 2>, 2> p);

/// min over i, j of P(i,j)/nu(j) and nu(j)/P(i,j), clipped to [0, 1].
double doeblin_2x2(std::array<std::array<double, 2>, 2> p);

/// I for the fair +-1 coin: ((1+x) ln(1+x) + (1-x) ln(1-x)) / 2.
double coin_rate(double beta);

/// I for the two-state chain with switch probability p and values +-1: a
/// bisection on the derivative of the closed-form log-eigenvalue.
double flip_chain_rate(double p, double beta);

/// ln of the Perron root of the tilted two-state chain.
double flip_chain_cgf(double p, double b);

/// 1 + 2 sum_{k>=1} (1-2p)^k summed until the terms vanish.
double flip_chain_variance(double p);

/// Time-weighted mean of state values for a two-state suspension.
double suspension_mean_2(std::array<double, 2> pi, std::array<double, 2> roof,
                         std::array<double, 2> values);

/// Exact solution of x' = eps (a x + c) after time h.
double linear_ode_step(double x, double eps, double a, double c, double h);

/// Largest mean over simple cycles, found by enumerating them.
double brute_max_cycle_mean(const std::vector<std::vector<double>>& p,
                            const std::vector<double>& w);

/// Index k with c_k <= t < c_{k+1} by linear scan of cumulative sums.
std::size_t brute_suspension_index(std::span<const double> roofs, double t, double* residual);

/// Y(u_k) = (1/r) sum_{j < floor(r u_k)} v_j by direct summation.
std::vector<double> brute_partial_sums(std::span<const double> values, double r,
                                       std::size_t segments);

/// (-20 + i) / 20 for i = 0..40.
std::vector<double> default_slope_grid();

/// j delta / 2 for integers j with the result in [lo, hi].
std::vector<double> net_grid(double lo, double hi, double delta);

/// Scalar level-distance cases for the fair coin; nodes include u = 0.
struct LevelCase {
  std::string id;
  std::vector<double> nodes;
  double budget;
};
std::vector<LevelCase> level_cases();

struct FixtureRow {
  std::string case_id;
  double value;
  std::string oracle_name;
  std::string parameters;
};

/// Every frozen reference value, recomputed from the oracles.
std::vector<FixtureRow> compute_fixtures();

void write_fixtures(const std::string& path, const std::vector<FixtureRow>& rows);
std::map<std::string, FixtureRow> read_fixtures(const std::string& path);

}  // namespace erlab::oracle
