// Runs the acceptance criteria against the committed configs and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "erlab/cgf.hpp"
#include "erlab/config.hpp"
#include "erlab/donsker_varadhan.hpp"
#include "erlab/dynamics.hpp"
#include "erlab/erlaw.hpp"
#include "erlab/errors.hpp"
#include "erlab/experiment.hpp"
#include "erlab/level_set.hpp"
#include "erlab/oracle.hpp"
#include "erlab/processes.hpp"
#include "erlab/rate_model.hpp"

using namespace erlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string config_path(const std::string& name) {
  return std::string(ERLAB_CONFIG_DIR) + "/" + name + ".json";
}

// Results are cached so the determinism check can reuse the first run.
std::map<std::string, RunResult>& runs() {
  static std::map<std::string, RunResult> r;
  return r;
}

const RunResult& run_config(const std::string& name, double* seconds = nullptr) {
  auto it = runs().find(name);
  if (it != runs().end()) return it->second;
  const ExperimentConfig cfg = load_config(config_path(name));
  RunOptions opts;
  opts.output_dir = (fs::current_path() / "acceptance_out" / name).string();
  opts.workers = 1;
  const auto start = Clock::now();
  RunResult r = run_experiment(cfg, opts);
  if (seconds) *seconds = seconds_since(start);
  return runs().emplace(name, std::move(r)).first->second;
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

Eigen::VectorXd v1(double v) { return Eigen::VectorXd::Constant(1, v); }

std::vector<double> beta_grid(const RateModel& m) {
  const double lo = m.beta_minus() + 0.05;
  const double hi = m.beta_plus() - 0.05;
  std::vector<double> out;
  // 21 interior points: the open interval excludes both ends.
  for (int i = 1; i <= 21; ++i) out.push_back(lo + (hi - lo) * i / 22.0);
  return out;
}

// --- 1 ------------------------------------------------------------------------

Outcome classic_law() {
  double secs = 0.0;
  const RunResult& r = run_config("classic_coin", &secs);
  const auto v = r.values("normalized");
  const double med = median(v);
  const bool ok = v.size() == 20 && std::abs(med - 0.5) <= 0.08 && secs <= 10.0;
  return {ok, fmt::format("median I(0.5) max/ln n = {:.4f} over {} seeds (target 0.5 +- 0.08), "
                          "{:.2f} s (limit 10 s)",
                          med, v.size(), secs)};
}

// --- 2 ------------------------------------------------------------------------

Outcome cgf_routes() {
  const double p = 0.3;
  const ProcessSpec spec = flip_chain(p);
  const SpectralCgf spectral(flip(p), pm_one());
  double worst_route = 0.0;
  double worst_closed = 0.0;
  bool ok = true;
  std::string parts;
  for (double b : {-1.0, -0.5, 0.5, 1.0}) {
    const double s = spectral.value(b);
    const auto e = cgf_empirical(spec, spec.values, v1(b), 100000, 50, 2024);
    const double tol = std::max(0.02, 3.0 * e.std_error);
    const double diff = std::abs(s - e.value);
    ok = ok && diff <= tol;
    worst_route = std::max(worst_route, diff / tol);
    const double closed = std::log(oracle::eigen2x2_closed_form(
        {{{(1 - p) * std::exp(b), p * std::exp(-b)}, {p * std::exp(b), (1 - p) * std::exp(-b)}}}));
    worst_closed = std::max(worst_closed, std::abs(s - closed));
    parts += fmt::format(" b={}:{:.4f}/{:.4f}", b, s, e.value);
  }
  ok = ok && worst_closed <= 1e-10;
  return {ok, fmt::format("spectral/empirical{}; worst |diff|/tol = {:.3f}, "
                          "closed-form error {:.2e} (limit 1e-10)",
                          parts, worst_route, worst_closed)};
}

// --- 3 ------------------------------------------------------------------------

Outcome dual_agreement() {
  double worst = 0.0;
  std::size_t points = 0;
  for (const std::string name : {"audit_coin", "audit_flip"}) {
    const RunResult& r = run_config(name);
    for (const CellResult& c : r.cells) {
      for (const StatRow& row : c.rows) {
        if (row.statistic.rfind("dual_gap", 0) != 0) continue;
        worst = std::max(worst, row.value);
        ++points;
      }
    }
    // The configured grid must sit inside (beta- + 0.05, beta+ - 0.05).
    const ExperimentConfig cfg = load_config(config_path(name));
    const RateModel m = RateModel::from_process(*cfg.process, cfg.dyn());
    for (double b : cfg.audit.betas) {
      if (!(b > m.beta_minus() + 0.05 && b < m.beta_plus() - 0.05)) {
        return {false, fmt::format("{}: beta {} outside the audit interval", name, b)};
      }
    }
  }
  return {points == 42 && worst <= 1e-4,
          fmt::format("max |legendre - dv| = {:.2e} over {} points (limit 1e-4, 42 expected)",
                      worst, points)};
}

// --- 4 ------------------------------------------------------------------------

Outcome rate_properties() {
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  const std::vector<std::pair<std::string, RateModel>> models{
      {"coin", RateModel::from_chain(flip(0.5), pm_one(), 1.0)},
      {"flip", RateModel::from_chain(flip(0.3), pm_one(), 1.0)}};
  std::size_t checks = 0;
  for (const auto& [name, m] : models) {
    check(m.rate_exact(0.0) == 0.0, name + ": I(0) = 0");
    ++checks;
    for (double b : beta_grid(m)) {
      if (std::abs(b) < 1e-9) continue;
      check(m.rate_exact(b) > 0.0, fmt::format("{}: I({}) > 0", name, b));
      const double grown = 1.1 * b;
      if (m.finite_at(grown)) {
        check(m.rate_exact(grown) > m.rate_exact(b), fmt::format("{}: I grows past {}", name, b));
      }
      checks += 2;
    }
    for (double b : {m.beta_plus() + 0.01, m.beta_minus() - 0.01, 2.0 * m.l1() + 0.1}) {
      check(!m.finite_at(b) && m.rate(b) >= kInfiniteRate &&
                m.rate_exact(b) >= kInfiniteRate,
            fmt::format("{}: I({}) infinite", name, b));
      ++checks;
    }
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
      const double x = u(g);
      const double y = u(g);
      const double mid = m.cgf().value(0.5 * (x + y));
      check(mid <= 0.5 * (m.cgf().value(x) + m.cgf().value(y)) + 1e-12,
            fmt::format("{}: midpoint convexity at ({}, {})", name, x, y));
      ++checks;
    }
    check(std::abs(m.cgf().derivative(0.0)) <= 1e-6, name + ": grad Pi(0) = 0");
    ++checks;
  }
  return {failed.empty(),
          failed.empty() ? fmt::format("{} checks passed", checks)
                         : fmt::format("{} of {} checks failed, first: {}", failed.size(), checks,
                                       failed.front())};
}

// --- 5 ------------------------------------------------------------------------

Outcome averaging() {
  const RunResult& r = run_config("averaging_relax");
  std::vector<std::vector<double>> gaps;
  std::vector<double> med;
  for (std::size_t e = 0; e < 3; ++e) {
    gaps.push_back(r.values("gap", e));
    med.push_back(median(gaps.back()));
  }
  std::size_t better = 0;
  for (std::size_t s = 0; s < gaps[0].size(); ++s) better += gaps[2][s] < gaps[0][s];
  const bool trend = med[0] > med[1] && med[1] > med[2];

  const ExperimentConfig cfg = load_config(config_path("averaging_relax"));
  const AveragedField field(cfg.dyn(), *cfg.process);
  double worst = 0.0;
  for (double eps : cfg.epsilons) {
    const double total = 1.0 / eps;
    std::vector<double> times;
    for (int i = 0; i <= 100; ++i) times.push_back(total * i / 100.0);
    const Trajectory avg = solve_averaged(field, cfg.x0, eps, total, times);
    for (std::size_t i = 0; i < avg.size(); ++i) {
      const double exact = cfg.x0(0) * std::exp(-eps * avg.time(i));
      worst = std::max(worst, std::abs(avg.state(i)[0] - exact));
    }
  }
  const bool ok = trend && better >= 18 && gaps[0].size() == 20 && worst <= 1e-8;
  return {ok, fmt::format("median gaps {:.4f} > {:.4f} > {:.4f}; gap(1e-4) < gap(1e-2) in {}/20 "
                          "seeds (need 18); averaged vs exp(-eps t) error {:.2e} (limit 1e-8)",
                          med[0], med[1], med[2], better, worst)};
}

// --- 6, 7, 8 -----------------------------------------------------------------------

Outcome upper_trend() {
  const RunResult& r = run_config("functional_upper");
  const double a = median(r.values("upper", 0));
  const double b = median(r.values("upper", 1));
  return {b < a, fmt::format("median upper statistic {:.4f} at e^-10, {:.4f} at e^-20 "
                             "(must decrease)",
                             a, b)};
}

Outcome lower_bound() {
  const RunResult& r = run_config("functional_net");
  const double m = median(r.values("lower", 1));
  return {m <= 0.35, fmt::format("median lower statistic {:.4f} at e^-20 (limit 0.35); "
                                 "{:.4f} at e^-10",
                                 m, median(r.values("lower", 0)))};
}

Outcome hausdorff_trend() {
  const RunResult& r = run_config("functional_net");
  const double a = median(r.values("hausdorff", 0));
  const double b = median(r.values("hausdorff", 1));
  return {b < a, fmt::format("median Hausdorff distance {:.4f} at e^-10, {:.4f} at e^-20 "
                             "(must decrease)",
                             a, b)};
}

// --- 9 ------------------------------------------------------------------------

Outcome continuous_time() {
  const RunResult& r = run_config("continuous_suspension");
  const auto v = r.values("endpoint");
  const double med = median(v);

  const ExperimentConfig cfg = load_config(config_path("continuous_suspension"));
  const auto dyn = DynamicsSpec::affine(Eigen::MatrixXd::Constant(1, 1, -1.0),
                                        Eigen::MatrixXd::Constant(1, 1, 1.0), v1(0.0), 2.0);
  const double eps = 0.05;
  const double total = 400.0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FastPath path = sample_path_covering(cfg.process, seed, total);
    const Trajectory t = integrate_slow_continuous(dyn, v1(0.5), eps, path, total);
    double x = 0.5;
    std::size_t hint = 0;
    for (std::size_t k = 0; k + 1 < path.cumulative_times.size(); ++k) {
      const double t0 = path.cumulative_times[k];
      const double t1 = std::min(path.cumulative_times[k + 1], total);
      const double y = path.value(k)(0);
      // Midpoint of the segment, then its end.
      const double mid = 0.5 * (t0 + t1);
      const double exact_mid = oracle::linear_ode_step(x, eps, -1.0, y, mid - t0);
      worst = std::max(worst, std::abs(state_at(t, dyn, path, mid, &hint)(0) - exact_mid));
      x = oracle::linear_ode_step(x, eps, -1.0, y, t1 - t0);
      if (t1 >= total) break;
    }
  }
  const bool ok = v.size() == 20 && std::abs(med - 0.3) <= 0.1 && worst <= 1e-8;
  return {ok, fmt::format("median sup V(1) = {:.4f} over {} seeds (target 0.3 +- 0.1); "
                          "continuous vs exact linear ODE {:.2e} (limit 1e-8)",
                          med, v.size(), worst)};
}

// --- 10 -----------------------------------------------------------------------

Outcome oracle_equivalence() {
  std::mt19937_64 g(99);
  std::uniform_int_distribution<int> val(-9, 9);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + g() % 200;
    std::vector<double> v(n);
    for (double& x : v) x = val(g);
    const std::size_t k = 1 + g() % n;
    mismatches += er_classic_max(v, n, k).max_increment != oracle::brute_er_max(v, k);
  }

  const auto model = std::make_shared<const RateModel>(RateModel::from_chain(flip(0.5), pm_one(), 1.0));
  const auto grid = oracle::default_slope_grid();
  const auto rate = [](double s) { return oracle::coin_rate(s); };
  double worst_level = 0.0;
  std::size_t level_cases = 0;
  for (const auto& c : oracle::level_cases()) {
    const Curve curve(c.nodes.size() - 1, 1, c.nodes);
    const double fast = level_set_distance(curve, make_curve_set(c.budget, model, curve.segments()));
    const double brute = oracle::brute_level_distance_zoom(curve, rate, c.budget, grid, 2);
    worst_level = std::max(worst_level, std::abs(fast - brute));
    ++level_cases;
  }

  const auto fresh = oracle::compute_fixtures();
  const auto committed = oracle::read_fixtures(ERLAB_FIXTURE_DIR "/oracle_fixtures.csv");
  std::size_t fixture_mismatches = fresh.size() == committed.size() ? 0 : 1;
  for (const auto& row : fresh) {
    const auto it = committed.find(row.case_id);
    fixture_mismatches += it == committed.end() || it->second.value != row.value;
  }
  const bool ok = mismatches == 0 && worst_level <= 2e-3 && fixture_mismatches == 0;
  return {ok, fmt::format("classic max mismatches {}/1000; level distance worst gap {:.2e} over {} "
                          "cases (limit 2e-3); fixture mismatches {}/{}",
                          mismatches, worst_level, level_cases, fixture_mismatches, fresh.size())};
}

// --- 11 -----------------------------------------------------------------------

Outcome determinism() {
  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const std::string name : {"classic_coin", "audit_coin", "audit_flip", "averaging_relax",
                                 "functional_upper", "functional_net", "continuous_suspension"}) {
    const RunResult& first = run_config(name);
    const ExperimentConfig cfg = load_config(config_path(name));
    RunOptions opts;
    opts.write_files = false;
    opts.workers = 2;
    if (run_experiment(cfg, opts).stats_csv != first.stats_csv) differing.push_back(name);
    ++compared;
  }
  return {differing.empty(),
          differing.empty()
              ? fmt::format("{} configs rerun with 2 workers give byte-identical stats.csv", compared)
              : fmt::format("stats.csv differs for {}", fmt::join(differing, ", "))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"classical Erdos-Renyi law", classic_law},
      {"CGF route agreement", cgf_routes},
      {"dual agreement", dual_agreement},
      {"rate-function properties", rate_properties},
      {"averaging principle", averaging},
      {"functional upper bound trend", upper_trend},
      {"functional lower bound", lower_bound},
      {"Hausdorff trend", hausdorff_trend},
      {"continuous time", continuous_time},
      {"oracle equivalence", oracle_equivalence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    failures += !o.pass;
    fmt::print("criterion {:>2} {} {}: {} [{:.1f} s]\n", i + 1, o.pass ? "PASS" : "FAIL",
               criteria[i].first, o.detail, seconds_since(start));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
