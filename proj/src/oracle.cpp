#include "erlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "erlab/errors.hpp"

namespace erlab::oracle {

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

constexpr std::size_t kMaxSegments = 4;
constexpr std::size_t kMaxSlopes = 41;
constexpr double kBudgetSlack = 1e-9;

// Every slope tuple of length k over `slopes`, in lexicographic order with the
// first segment most significant.
template <class F>
void for_each_tuple(std::size_t m, std::size_t k, F&& f) {
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    f(idx);
    std::size_t pos = k;
    while (true) {
      if (pos == 0) return;
      --pos;
      if (++idx[pos] < m) break;
      idx[pos] = 0;
    }
  }
}

std::vector<double> nodes_from(const std::vector<std::size_t>& idx, std::span<const double> slopes) {
  const double k = static_cast<double>(idx.size());
  std::vector<double> y(idx.size() + 1, 0.0);
  for (std::size_t s = 0; s < idx.size(); ++s) y[s + 1] = y[s] + slopes[idx[s]] / k;
  return y;
}

Mat2 flip_tilt(double p, double b) {
  return {{{(1.0 - p) * std::exp(b), p * std::exp(-b)}, {p * std::exp(b), (1.0 - p) * std::exp(-b)}}};
}

// d/db ln lambda(b) for the flip chain with values +-1, from
// lambda = (1-p) cosh b + sqrt((1-p)^2 sinh^2 b + p^2).
double flip_cgf_slope(double p, double b) {
  const double q = 1.0 - p;
  const double root = std::sqrt(q * q * std::sinh(b) * std::sinh(b) + p * p);
  const double lambda = q * std::cosh(b) + root;
  const double dlambda = q * std::sinh(b) + q * q * std::sinh(b) * std::cosh(b) / root;
  return dlambda / lambda;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

OracleReport compare(std::string case_id, double oracle_value, double fast_value,
                     double tolerance) {
  const double diff = std::abs(oracle_value - fast_value);
  return {std::move(case_id), oracle_value, fast_value, diff, tolerance, diff <= tolerance};
}

double brute_cgf_twopoint(double p, std::array<double, 2> values, double t) {
  return std::log(p * std::exp(t * values[0]) + (1.0 - p) * std::exp(t * values[1]));
}

double brute_er_max(std::span<const double> values, std::size_t k) {
  const std::size_t n = values.size();
  if (k == 0 || k > n) {
    throw UsageError(fmt::format("brute_er_max: need 1 <= k <= n, got k = {}, n = {}", k, n));
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m + k <= n; ++m) {
    double s = 0.0;
    for (std::size_t j = m; j < m + k; ++j) s += values[j];
    best = std::max(best, s);
  }
  return best;
}

namespace {

struct LevelSearch {
  double distance;
  std::vector<double> slopes;  // argmin tuple
};

// Exhaustive search over the product of per-segment slope grids.
LevelSearch level_search(const Curve& v, const RateFn& rate, double a,
                         const std::vector<std::vector<double>>& grids) {
  const std::size_t k = v.segments();
  const std::size_t m = grids.front().size();
  std::vector<std::vector<double>> cost(k, std::vector<double>(m));
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t i = 0; i < m; ++i) cost[s][i] = rate(grids[s][i]);
  LevelSearch best{std::numeric_limits<double>::infinity(), {}};
  std::vector<double> slopes(k);
  for_each_tuple(m, k, [&](const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (std::size_t s = 0; s < k; ++s) total += cost[s][idx[s]];
    if (total / static_cast<double>(k) > a + kBudgetSlack) return;
    double y = 0.0;
    double gap = std::abs(v(0));
    for (std::size_t s = 0; s < k; ++s) {
      slopes[s] = grids[s][idx[s]];
      y += slopes[s] / static_cast<double>(k);
      gap = std::max(gap, std::abs(y - v(s + 1)));
    }
    if (gap < best.distance) best = {gap, slopes};
  });
  return best;
}

void check_level_budget(const Curve& v, std::size_t slopes) {
  const std::size_t k = v.segments();
  if (k == 0 || k > kMaxSegments || slopes > kMaxSlopes || v.dim() != 1) {
    throw BudgetError(fmt::format(
        "brute_level_distance: K = {} (max {}), {} slopes (max {}), d = {} (need 1)", k,
        kMaxSegments, slopes, kMaxSlopes, v.dim()));
  }
}

}  // namespace

double brute_level_distance(const Curve& v, const RateFn& rate, double a,
                            std::span<const double> slopes) {
  check_level_budget(v, slopes.size());
  const std::vector<std::vector<double>> grids(v.segments(),
                                               std::vector<double>(slopes.begin(), slopes.end()));
  return level_search(v, rate, a, grids).distance;
}

double brute_level_distance_zoom(const Curve& v, const RateFn& rate, double a,
                                 std::span<const double> slopes, int passes) {
  check_level_budget(v, slopes.size());
  std::vector<std::vector<double>> grids(v.segments(),
                                         std::vector<double>(slopes.begin(), slopes.end()));
  LevelSearch best = level_search(v, rate, a, grids);
  double pitch = slopes.size() > 1 ? (slopes.back() - slopes.front()) / (slopes.size() - 1) : 0.0;
  const double lo = slopes.front();
  const double hi = slopes.back();
  for (int pass = 0; pass < passes && !best.slopes.empty(); ++pass) {
    // 41 points spanning one coarse pitch on each side of the incumbent.
    const double fine = pitch / 20.0;
    for (std::size_t s = 0; s < grids.size(); ++s) {
      for (int i = 0; i <= 40; ++i) {
        grids[s][i] = std::clamp(best.slopes[s] + (i - 20) * fine, lo, hi);
      }
    }
    const LevelSearch next = level_search(v, rate, a, grids);
    if (next.distance <= best.distance) best = next;
    pitch = fine;
  }
  return best.distance;
}

std::size_t brute_net_count(const RateFn& rate, double a, std::span<const double> slopes,
                            std::size_t segments, double delta) {
  if (segments == 0 || segments > kMaxSegments || slopes.size() > kMaxSlopes) {
    throw BudgetError(fmt::format("brute_net_count: K = {} (max {}), {} slopes (max {})",
                                  segments, kMaxSegments, slopes.size(), kMaxSlopes));
  }
  std::vector<double> cost(slopes.size());
  for (std::size_t i = 0; i < slopes.size(); ++i) cost[i] = rate(slopes[i]);
  std::vector<std::vector<double>> kept;
  for_each_tuple(slopes.size(), segments, [&](const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (std::size_t i : idx) total += cost[i];
    if (total / static_cast<double>(segments) > a + kBudgetSlack) return;
    const std::vector<double> y = nodes_from(idx, slopes);
    for (const auto& z : kept) {
      double gap = 0.0;
      for (std::size_t node = 0; node < y.size(); ++node) gap = std::max(gap, std::abs(y[node] - z[node]));
      if (gap < delta) return;
    }
    kept.push_back(y);
  });
  return kept.size();
}

double eigen2x2_closed_form(Mat2 m) {
  const double half_diff = 0.5 * (m[0][0] - m[1][1]);
  return 0.5 * (m[0][0] + m[1][1]) + std::sqrt(half_diff * half_diff + m[0][1] * m[1][0]);
}

std::array<double, 2> stationary_2x2(Mat2 p) {
  // pi_0 p01 = pi_1 p10.
  const double s = p[0][1] + p[1][0];
  return {p[1][0] / s, p[0][1] / s};
}

double doeblin_2x2(Mat2 p) {
  const auto nu = stationary_2x2(p);
  double kappa = 1.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      kappa = std::min({kappa, p[i][j] / nu[j], nu[j] / p[i][j]});
    }
  }
  return std::clamp(kappa, 0.0, 1.0);
}

double coin_rate(double beta) {
  const double x = std::abs(beta);
  if (x > 1.0) return std::numeric_limits<double>::infinity();
  const auto xlogx = [](double z) { return z > 0.0 ? z * std::log(z) : 0.0; };
  return 0.5 * (xlogx(1.0 + x) + xlogx(1.0 - x));
}

double flip_chain_cgf(double p, double b) {
  return std::log(eigen2x2_closed_form(flip_tilt(p, b)));
}

double flip_chain_rate(double p, double beta) {
  if (std::abs(beta) >= 1.0) {
    return std::abs(beta) > 1.0 ? std::numeric_limits<double>::infinity() : -std::log(1.0 - p);
  }
  if (beta == 0.0) return 0.0;
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (flip_cgf_slope(p, mid) < beta ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  return b * beta - flip_chain_cgf(p, b);
}

double flip_chain_variance(double p) {
  const double r = 1.0 - 2.0 * p;
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= r;
    if (std::abs(term) < 1e-18) break;
    sum += 2.0 * term;
  }
  return sum;
}

double suspension_mean_2(std::array<double, 2> pi, std::array<double, 2> roof,
                         std::array<double, 2> values) {
  const double w0 = pi[0] * roof[0];
  const double w1 = pi[1] * roof[1];
  return (w0 * values[0] + w1 * values[1]) / (w0 + w1);
}

double linear_ode_step(double x, double eps, double a, double c, double h) {
  if (a == 0.0) return x + eps * c * h;
  const double fixed = -c / a;
  return fixed + (x - fixed) * std::exp(eps * a * h);
}

double brute_max_cycle_mean(const std::vector<std::vector<double>>& p,
                            const std::vector<double>& w) {
  const std::size_t n = w.size();
  double best = -std::numeric_limits<double>::infinity();
  // Depth-first search for simple cycles whose smallest node is `start`.
  std::vector<std::size_t> stack;
  std::vector<bool> on(n, false);
  const auto dfs = [&](auto&& self, std::size_t start, std::size_t node, double total) -> void {
    for (std::size_t next = start; next < n; ++next) {
      if (p[node][next] <= 0.0) continue;
      if (next == start) {
        best = std::max(best, total / static_cast<double>(stack.size()));
      } else if (!on[next]) {
        on[next] = true;
        stack.push_back(next);
        self(self, start, next, total + w[next]);
        stack.pop_back();
        on[next] = false;
      }
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    on[s] = true;
    stack.push_back(s);
    dfs(dfs, s, s, w[s]);
    stack.pop_back();
    on[s] = false;
  }
  return best;
}

std::size_t brute_suspension_index(std::span<const double> roofs, double t, double* residual) {
  double start = 0.0;
  for (std::size_t k = 0; k < roofs.size(); ++k) {
    if (t < start + roofs[k]) {
      if (residual) *residual = t - start;
      return k;
    }
    start += roofs[k];
  }
  throw RangeError(fmt::format("brute_suspension_index: t = {} beyond total time {}", t, start));
}

std::vector<double> brute_partial_sums(std::span<const double> values, double r,
                                       std::size_t segments) {
  std::vector<double> y(segments + 1, 0.0);
  for (std::size_t k = 0; k <= segments; ++k) {
    const auto upto = static_cast<std::size_t>(
        std::floor(r * static_cast<double>(k) / static_cast<double>(segments)));
    double s = 0.0;
    for (std::size_t j = 0; j < upto; ++j) s += values[j];
    y[k] = s / r;
  }
  return y;
}

std::vector<double> default_slope_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back((i - 20) / 20.0);
  return g;
}

std::vector<double> net_grid(double lo, double hi, double delta) {
  const double pitch = 0.5 * delta;
  std::vector<double> g;
  for (long j = static_cast<long>(std::ceil(lo / pitch - 1e-9));
       j <= static_cast<long>(std::floor(hi / pitch + 1e-9)); ++j) {
    g.push_back(static_cast<double>(j) * pitch);
  }
  return g;
}

std::vector<LevelCase> level_cases() {
  const double a = coin_rate(0.5);
  return {
      {"level_line_0.8", {0.0, 0.2, 0.4, 0.6, 0.8}, a},
      {"level_zero_curve", {0.0, 0.0, 0.0, 0.0, 0.0}, a},
      {"level_budget_zero", {0.0, 0.3, -0.1, 0.2}, 0.0},
      {"level_up_down", {0.0, 0.35, 0.0}, a},
      {"level_steep_start", {0.0, 0.5, 0.5, 0.5, 0.5}, a},
      {"level_inside", {0.0, 0.1, 0.15, 0.2}, a},
  };
}

std::vector<FixtureRow> compute_fixtures() {
  std::vector<FixtureRow> rows;
  const auto add = [&](std::string id, double value, std::string oracle, std::string params) {
    rows.push_back({std::move(id), value, std::move(oracle), std::move(params)});
  };

  const auto pi = stationary_2x2({{{0.9, 0.1}, {0.5, 0.5}}});
  add("stationary_pi0", pi[0], "stationary_2x2", "P=[[0.9,0.1],[0.5,0.5]]");
  add("stationary_pi1", pi[1], "stationary_2x2", "P=[[0.9,0.1],[0.5,0.5]]");
  add("doeblin_kappa", doeblin_2x2({{{0.7, 0.3}, {0.3, 0.7}}}), "doeblin_2x2",
      "P=[[0.7,0.3],[0.3,0.7]]");

  double residual = 0.0;
  const std::array<double, 3> roofs{2.0, 0.5, 1.0};
  const auto index = brute_suspension_index(roofs, 2.25, &residual);
  add("suspension_index", static_cast<double>(index), "brute_suspension_index",
      "roof=(2,0.5,1) t=2.25");
  add("suspension_residual", residual, "brute_suspension_index", "roof=(2,0.5,1) t=2.25");

  add("averaged_drift_suspension", suspension_mean_2({0.5, 0.5}, {2.0, 1.0}, {1.0, -1.0}),
      "suspension_mean_2", "roof=(2,1) values=(1,-1) pi=(0.5,0.5)");
  add("averaged_one_minus_x", linear_ode_step(0.0, 1.0, -1.0, 1.0, 1.0), "linear_ode_step",
      "x'=1-x x0=0 t=1");

  for (double b : {-1.0, -0.5, 0.5, 1.0}) {
    add(fmt::format("flip_cgf_b{}", b), flip_chain_cgf(0.3, b), "eigen2x2_closed_form",
        fmt::format("p=0.3 values=(1,-1) b={}", b));
  }
  add("twopoint_cgf", brute_cgf_twopoint(0.3, {2.0, -1.0}, 0.5), "brute_cgf_twopoint",
      "p=0.3 values=(2,-1) t=0.5");
  add("coin_cgf_b1", brute_cgf_twopoint(0.5, {1.0, -1.0}, 1.0), "brute_cgf_twopoint",
      "p=0.5 values=(1,-1) t=1");

  const double coin_half = coin_rate(0.5);
  add("coin_rate_0.5", coin_half, "coin_rate", "beta=0.5");
  add("flip_rate_0.4", flip_chain_rate(0.3, 0.4), "flip_chain_rate", "p=0.3 beta=0.4");
  add("flip_variance", flip_chain_variance(0.3), "flip_chain_variance", "p=0.3");
  add("window_b_e-20", 20.0 / coin_half, "coin_rate", "c=1/I(0.5) ln(1/eps)=20");
  add("cycle_mean_two_cycle", brute_max_cycle_mean({{0.0, 1.0}, {1.0, 0.0}}, {0.0, 1.0}),
      "brute_max_cycle_mean", "P=[[0,1],[1,0]] G=(0,1)");

  const std::vector<double> grid = default_slope_grid();
  for (const LevelCase& c : level_cases()) {
    const Curve v(c.nodes.size() - 1, 1, c.nodes);
    add(c.id, brute_level_distance_zoom(v, coin_rate, c.budget, grid, 2),
        "brute_level_distance_zoom",
        fmt::format("coin K={} a={:.6g} grid=(-1:0.05:1) zoom=2", c.nodes.size() - 1, c.budget));
    add(c.id + "_coarse", brute_level_distance(v, coin_rate, c.budget, grid),
        "brute_level_distance",
        fmt::format("coin K={} a={:.6g} grid=(-1:0.05:1)", c.nodes.size() - 1, c.budget));
  }
  add("net_count_k3", static_cast<double>(brute_net_count(coin_rate, coin_half,
                                                          net_grid(-1.0, 1.0, 0.2), 3, 0.2)),
      "brute_net_count", "coin K=3 a=I(0.5) delta=0.2");

  const std::array<double, 4> ps{1.0, -1.0, 1.0, 1.0};
  const auto y = brute_partial_sums(ps, 4.0, 4);
  for (std::size_t k = 0; k < y.size(); ++k) {
    add(fmt::format("partial_sum_u{}", k), y[k], "brute_partial_sums",
        "values=(1,-1,1,1) r=4 K=4");
  }
  const std::array<double, 5> er{1.0, -1.0, 1.0, 1.0, -1.0};
  add("er_max_k2", brute_er_max(er, 2), "brute_er_max", "values=(1,-1,1,1,-1) k=2");
  return rows;
}

void write_fixtures(const std::string& path, const std::vector<FixtureRow>& rows) {
  std::ofstream os(path);
  if (!os) throw UsageError(fmt::format("cannot write fixtures to {}", path));
  os << "# Reference values computed by the brute-force oracles in src/oracle.cpp.\n"
     << "# Regenerate with: erlab oracle <dir>\n"
     << "case_id,value,oracle_name,parameters\n";
  for (const FixtureRow& r : rows) {
    os << r.case_id << ',' << fmt::format("{:.17g}", r.value) << ',' << r.oracle_name << ','
       << quote(r.parameters) << '\n';
  }
}

std::map<std::string, FixtureRow> read_fixtures(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError(fmt::format("cannot read fixtures from {}", path));
  std::map<std::string, FixtureRow> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::array<std::string, 3> field;
    std::size_t pos = 0;
    for (auto& f : field) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) throw ValidationError("fixture line: " + line);
      f = line.substr(pos, comma - pos);
      pos = comma + 1;
    }
    std::string params = line.substr(pos);
    if (params.size() >= 2 && params.front() == '"') {
      const std::string inner = params.substr(1, params.size() - 2);
      params.clear();
      for (std::size_t i = 0; i < inner.size(); ++i) {
        params += inner[i];
        if (inner[i] == '"' && i + 1 < inner.size() && inner[i + 1] == '"') ++i;
      }
    }
    out[field[0]] = {field[0], std::stod(field[1]), field[2], params};
  }
  return out;
}

}  // namespace erlab::oracle
