#include "erlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "erlab/cgf.hpp"
#include "erlab/donsker_varadhan.hpp"
#include "erlab/dynamics.hpp"
#include "erlab/erlaw.hpp"
#include "erlab/errors.hpp"
#include "erlab/level_set.hpp"
#include "erlab/rate_model.hpp"
#include "erlab/rng.hpp"

namespace erlab {

using nlohmann::json;

namespace {

bool wants(const ExperimentConfig& cfg, const std::string& statistic) {
  const auto& s = cfg.functional.statistics;
  return std::find(s.begin(), s.end(), statistic) != s.end();
}

// Read-only state shared by all cells of a run.
struct Context {
  const ExperimentConfig& cfg;
  std::shared_ptr<const RateModel> model;
  std::optional<AveragedField> field;
  std::optional<CurveSetSpec> set;
  std::vector<Curve> net;
  std::size_t classic_k = 0;
  double classic_rate = 0.0;

  explicit Context(const ExperimentConfig& c) : cfg(c) {
    const ProcessSpec& spec = *cfg.process;
    model = std::make_shared<RateModel>(RateModel::from_process(spec, cfg.dyn()));
    field.emplace(cfg.dyn(), spec);
    switch (cfg.kind) {
      case ExperimentKind::classic_er: {
        if (spec.value_dim() != 1) throw ValidationError("config: classic_er needs scalar values");
        classic_rate = model->rate_exact(cfg.classic.beta);
        if (!(classic_rate > 0.0) || !std::isfinite(classic_rate)) {
          throw ValidationError(fmt::format(
              "config: 'classic_er.beta' = {} gives I = {}; need 0 < I < inf", cfg.classic.beta,
              classic_rate));
        }
        classic_k = cfg.classic.k
                        ? cfg.classic.k
                        : static_cast<std::size_t>(
                              std::floor(std::log(static_cast<double>(cfg.classic.n)) / classic_rate));
        if (classic_k < 1 || classic_k > cfg.classic.n) {
          throw ValidationError(fmt::format("config: window k = {} outside [1, n = {}]", classic_k,
                                            cfg.classic.n));
        }
        break;
      }
      case ExperimentKind::functional_er:
      case ExperimentKind::continuous_er: {
        if (model->dim() != 1) {
          throw ValidationError("config: functional statistics support d = 1 only");
        }
        set = make_curve_set(1.0 / cfg.window.c.front(), model, cfg.window.segments);
        if (wants(cfg, "lower") || wants(cfg, "hausdorff")) {
          if (cfg.window.c.size() != 1) {
            throw ValidationError("config: lower/hausdorff statistics need a single constant c");
          }
          net = level_set_net(*set, cfg.functional.delta);
        }
        break;
      }
      default:
        break;
    }
  }
};

StatRow row(std::optional<double> eps, std::uint64_t seed, std::string name, double value,
            std::optional<double> at = std::nullopt) {
  return {eps, seed, std::move(name), value, at};
}

void functional_statistics(const Context& ctx, const CurveFamily& family, const WindowParams& wp,
                           CellResult& out, bool keep_curves) {
  const auto& cfg = ctx.cfg;
  const double eps = wp.epsilon;
  const std::uint64_t seed = cfg.seed(out.seed_index);
  const std::string tag = fmt::format("eps{}_seed{}", out.eps_index, seed);
  if (wants(cfg, "upper")) {
    const SupResult r = upper_statistic(family, *ctx.set, wp);
    out.rows.push_back(row(eps, seed, "upper", r.value, r.argmax_t));
    if (keep_curves) out.curves.push_back({"upper_" + tag, family.curve(r.argmax_index)});
  }
  if (wants(cfg, "lower")) {
    const LowerResult r = lower_statistic(family, ctx.net);
    out.rows.push_back(row(eps, seed, "lower", r.value, r.approach_t));
    if (keep_curves) out.curves.push_back({"lower_net_" + tag, ctx.net[r.worst_net_index]});
  }
  if (wants(cfg, "hausdorff")) {
    const HausdorffReport r = hausdorff_level_set(family, *ctx.set, ctx.net, cfg.functional.delta);
    out.rows.push_back(row(eps, seed, "hausdorff", r.value));
    out.rows.push_back(row(eps, seed, "hausdorff_exact_side", r.exact_side));
    out.rows.push_back(row(eps, seed, "hausdorff_sampled_side", r.sampled_side));
  }
  if (wants(cfg, "endpoint")) {
    const SupResult r = endpoint_statistic(family, *ctx.model, cfg.functional.beta);
    out.rows.push_back(row(eps, seed, "endpoint", r.value, r.argmax_t));
    if (keep_curves) out.curves.push_back({"endpoint_" + tag, family.curve(r.argmax_index)});
  }
}

DriftCentering make_centering(const Context& ctx, double eps, double total,
                              std::optional<Trajectory>& avg) {
  if (!ctx.cfg.dyn().depends_on_state()) return DriftCentering::constant((*ctx.field)(ctx.cfg.x0));
  avg.emplace(solve_averaged(*ctx.field, ctx.cfg.x0, eps, total));
  return DriftCentering::averaged(*avg, *ctx.field);
}

void run_cell(const Context& ctx, CellResult& out) {
  const auto& cfg = ctx.cfg;
  const std::uint64_t seed = cfg.seed(out.seed_index);
  const bool keep_curves = cfg.functional.write_curves && out.seed_index == 0;
  switch (cfg.kind) {
    case ExperimentKind::classic_er: {
      const std::size_t n = cfg.classic.n;
      const FastPath path = sample_path(cfg.process, seed, n);
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = path.value(i)(0);
      const ClassicMax r = er_classic_max(v, n, ctx.classic_k);
      const double at = static_cast<double>(r.argmax);
      out.rows.push_back(row(std::nullopt, seed, "max_increment", r.max_increment, at));
      out.rows.push_back(row(std::nullopt, seed, "max_mean", r.mean, at));
      out.rows.push_back(row(std::nullopt, seed, "normalized",
                             ctx.classic_rate * r.max_increment / std::log(static_cast<double>(n)), at));
      break;
    }
    case ExperimentKind::functional_er: {
      const double eps = cfg.epsilons[out.eps_index];
      const WindowParams wp = cfg.window_at(eps);
      const std::size_t steps =
          wp.last_index() + static_cast<std::size_t>(std::floor(wp.max_window())) + 2;
      const FastPath path = sample_path(cfg.process, seed, steps);
      const Trajectory traj = integrate_slow_discrete(cfg.dyn(), cfg.x0, eps, path, steps);
      std::optional<Trajectory> avg;
      const DriftCentering centering =
          make_centering(ctx, eps, static_cast<double>(steps), avg);
      const DiscreteErFamily family(traj, centering, wp);
      functional_statistics(ctx, family, wp, out, keep_curves);
      break;
    }
    case ExperimentKind::continuous_er: {
      const double eps = cfg.epsilons[out.eps_index];
      const WindowParams wp = cfg.window_at(eps);
      const double total = static_cast<double>(wp.last_index()) + wp.max_window() + 2.0;
      const FastPath path = sample_path_covering(cfg.process, seed, total);
      const Trajectory traj = integrate_slow_continuous(cfg.dyn(), cfg.x0, eps, path, total);
      std::optional<Trajectory> avg;
      const DriftCentering centering = make_centering(ctx, eps, total, avg);
      const ContinuousErFamily family(traj, cfg.dyn(), path, centering, wp);
      functional_statistics(ctx, family, wp, out, keep_curves);
      break;
    }
    case ExperimentKind::averaging_audit: {
      const double eps = cfg.epsilons[out.eps_index];
      const WindowParams wp = cfg.window_at(eps);
      const std::size_t steps = wp.last_index();
      const FastPath path = sample_path(cfg.process, seed, steps);
      const Trajectory traj = integrate_slow_discrete(cfg.dyn(), cfg.x0, eps, path, steps);
      std::vector<double> times(steps + 1);
      for (std::size_t i = 0; i <= steps; ++i) times[i] = static_cast<double>(i);
      const Trajectory avg =
          solve_averaged(*ctx.field, cfg.x0, eps, static_cast<double>(steps), times);
      out.rows.push_back(row(eps, seed, "gap", averaging_gap(traj, avg, static_cast<double>(steps))));
      break;
    }
    case ExperimentKind::ratefn_audit: {
      const RateModel& m = *ctx.model;
      const bool dual = cfg.audit.dual_check && !cfg.process->is_suspension() && m.dim() == 1;
      for (double beta : cfg.audit.betas) {
        const std::string at = fmt::format("[beta={}]", beta);
        const double exact = m.rate_exact(beta);
        out.rows.push_back({std::nullopt, std::nullopt, "I_legendre" + at, exact, std::nullopt});
        out.rows.push_back({std::nullopt, std::nullopt, "I_table" + at, m.rate(beta), std::nullopt});
        if (dual && beta > m.beta_minus() && beta < m.beta_plus()) {
          const Eigen::MatrixXd g = cfg.dyn().c() * cfg.process->values.transpose();
          const double dv = dv_rate(cfg.process->kernel(), g.row(0).transpose(), beta);
          out.rows.push_back({std::nullopt, std::nullopt, "I_dv" + at, dv, std::nullopt});
          out.rows.push_back(
              {std::nullopt, std::nullopt, "dual_gap" + at, std::abs(dv - exact), std::nullopt});
        }
      }
      break;
    }
  }
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

json tolerance_table() {
  return {{"stochastic_rows", kStochasticTol},
          {"perron_relative_gap", 1e-12},
          {"perron_max_iterations", 100000},
          {"legendre_residual", 1e-9},
          {"legendre_dual_bound", 50.0},
          {"rate_table_nodes", 511},
          {"level_set_bisection", 1e-6},
          {"level_set_budget_slack", 1e-12},
          {"net_filter_slack", 1e-9},
          {"net_candidate_budget", 1e7},
          {"rk4_step", "1e-2 / (epsilon L1)"},
          {"averaged_step", "1e-2 / epsilon"},
          {"time_match_relative", 1e-9},
          {"dv_max_iterations", 5000},
          {"variance_step", 1e-3},
          {"lipschitz_certify_slack", 1e-12}};
}

json derived_json(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RateModel& m = *ctx.model;
  json d;
  if (m.dim() == 1) {
    d["beta_minus"] = m.beta_minus();
    d["beta_plus"] = m.beta_plus();
    const VarianceResult v = variance_at_zero(m.cgf(), Eigen::VectorXd::Ones(1));
    d["variance_at_zero"] = v.value;
    d["variance_degenerate"] = v.degenerate;
  }
  d["L1"] = m.l1();
  d["doeblin_kappa"] = doeblin_coefficient(cfg.process->kernel());
  if (cfg.target_beta) {
    d["target_beta"] = *cfg.target_beta;
    d["I_target_beta"] = m.rate_exact(*cfg.target_beta);
  }
  d["c"] = cfg.window.c;
  if (cfg.kind == ExperimentKind::classic_er) {
    d["k"] = ctx.classic_k;
    d["I_beta"] = ctx.classic_rate;
  }
  if (!ctx.net.empty()) d["net_size"] = ctx.net.size();
  json windows = json::array();
  if (cfg.kind != ExperimentKind::classic_er && cfg.kind != ExperimentKind::ratefn_audit) {
    for (double e : cfg.epsilons) {
      const WindowParams wp = cfg.window_at(e);
      const std::size_t stride = wp.effective_stride();
      windows.push_back({{"epsilon", e},
                         {"log_inv_epsilon", wp.log_inv_epsilon()},
                         {"b_max", wp.max_window()},
                         {"stride", stride},
                         {"family_size", wp.last_index() / stride + 1}});
    }
  }
  d["windows"] = windows;
  return d;
}

json rate_audit_json(const RateModel& m) {
  json rows = json::array();
  if (m.dim() != 1) return rows;
  const double lo = m.beta_minus();
  const double hi = m.beta_plus();
  for (int i = 0; i <= 20; ++i) {
    const double beta = lo + (hi - lo) * (0.05 + 0.9 * i / 20.0);
    rows.push_back({{"beta", beta}, {"I_exact", m.rate_exact(beta)}, {"I_table", m.rate(beta)}});
  }
  return rows;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw UsageError(fmt::format("cannot write {}", p.string()));
  os << text;
}

}  // namespace

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::vector<double> RunResult::values(const std::string& statistic, std::size_t eps_index) const {
  std::vector<double> out;
  for (const CellResult& c : cells) {
    if (c.eps_index != eps_index) continue;
    for (const StatRow& r : c.rows) {
      if (r.statistic == statistic) out.push_back(r.value);
    }
  }
  return out;
}

std::size_t resolve_workers(std::optional<std::size_t> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ValidationError(fmt::format("{} = '{}' must be a positive integer", kWorkersEnv, env));
    }
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_stats_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
  std::string out = "experiment,epsilon,N,K,stride,seed,statistic,value,argmax_t\n";
  const std::string kind(to_string(cfg.kind));
  for (const CellResult& c : cells) {
    for (const StatRow& r : c.rows) {
      std::string n, k, stride;
      if (r.epsilon) {
        const WindowParams wp = cfg.window_at(*r.epsilon);
        n = fmt::format("{}", wp.grid);
        k = fmt::format("{}", wp.segments);
        stride = fmt::format("{}", wp.effective_stride());
      }
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", kind, fmt_opt(r.epsilon), n, k, stride,
                         r.seed ? fmt::format("{}", *r.seed) : "", r.statistic, r.value,
                         fmt_opt(r.argmax_t));
    }
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Context ctx(cfg);

  std::vector<CellResult> cells;
  if (cfg.kind == ExperimentKind::ratefn_audit) {
    cells.emplace_back();
  } else {
    const std::size_t n_eps = cfg.kind == ExperimentKind::classic_er ? 1 : cfg.epsilons.size();
    for (std::size_t e = 0; e < n_eps; ++e) {
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        CellResult c;
        c.eps_index = e;
        c.seed_index = s;
        cells.push_back(std::move(c));
      }
    }
  }

  const std::size_t workers = std::min(resolve_workers(options.workers), cells.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cells.size());
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        run_cell(ctx, cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
      cells[i].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // The first failure in canonical order, whatever the schedule.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.eps_index, a.seed_index) < std::tie(b.eps_index, b.seed_index);
  });

  RunResult result;
  result.stats_csv = format_stats_csv(cfg, cells);

  json cell_json = json::array();
  std::vector<std::string> names;
  for (const CellResult& c : cells) {
    json stats = json::object();
    for (const StatRow& r : c.rows) {
      stats[r.statistic] = {{"value", r.value}};
      if (r.argmax_t) stats[r.statistic]["argmax_t"] = *r.argmax_t;
      if (std::find(names.begin(), names.end(), r.statistic) == names.end()) names.push_back(r.statistic);
    }
    json cj = {{"seconds", c.seconds}, {"stats", stats}};
    if (cfg.kind != ExperimentKind::ratefn_audit) {
      cj["seed"] = cfg.seed(c.seed_index);
      if (cfg.kind != ExperimentKind::classic_er) cj["epsilon"] = cfg.epsilons[c.eps_index];
    }
    cell_json.push_back(cj);
  }

  result.cells = std::move(cells);
  json summary = json::array();
  if (cfg.kind != ExperimentKind::ratefn_audit) {
    const std::size_t n_eps = cfg.kind == ExperimentKind::classic_er ? 1 : cfg.epsilons.size();
    for (std::size_t e = 0; e < n_eps; ++e) {
      for (const auto& name : names) {
        const std::vector<double> v = result.values(name, e);
        std::vector<std::uint64_t> seeds;
        for (std::size_t s = 0; s < cfg.seeds; ++s) seeds.push_back(cfg.seed(s));
        json sj = {{"statistic", name}, {"median", median(v)}, {"q1", quantile(v, 0.25)},
                   {"q3", quantile(v, 0.75)}, {"seeds", seeds}, {"values", v}};
        if (cfg.kind != ExperimentKind::classic_er) sj["epsilon"] = cfg.epsilons[e];
        summary.push_back(sj);
      }
    }
  }

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.report = {{"config", cfg.resolved},
                   {"rng", Rng::kName},
                   {"seed_rule", "trial i uses base_seed + i"},
                   {"derived", derived_json(ctx)},
                   {"cells", cell_json},
                   {"summary", summary},
                   {"rate_audit", rate_audit_json(*ctx.model)},
                   {"tolerances", tolerance_table()},
                   {"timings", {{"total_seconds", total}, {"workers", workers}}}};

  if (options.write_files) {
    namespace fs = std::filesystem;
    const fs::path dir = options.output_dir.value_or(cfg.output);
    fs::create_directories(dir / "curves");
    write_text(dir / "stats.csv", result.stats_csv);
    write_text(dir / "report.json", result.report.dump(2) + "\n");
    for (const CellResult& c : result.cells) {
      for (const NamedCurve& nc : c.curves) {
        std::ofstream os(dir / "curves" / (nc.name + ".csv"));
        write_curve_csv(os, nc.curve);
      }
    }
    if (ctx.model->dim() == 1) {
      std::ofstream os(dir / "ratefn.csv");
      ctx.model->write_table_csv(os);
    }
  }
  return result;
}

std::string describe(const ExperimentConfig& cfg) {
  const Context ctx(cfg);
  const json d = derived_json(ctx);
  std::ostringstream os;
  os << fmt::format("experiment: {}\n", to_string(cfg.kind));
  os << fmt::format("process: {} with {} states\n", to_string(cfg.process->kind),
                    cfg.process->num_states());
  os << fmt::format("doeblin kappa: {:.6g}\n", d["doeblin_kappa"].get<double>());
  if (d.contains("beta_minus")) {
    os << fmt::format("finiteness domain: [{:.6g}, {:.6g}]\n", d["beta_minus"].get<double>(),
                      d["beta_plus"].get<double>());
    os << fmt::format("variance at 0: {:.6g}\n", d["variance_at_zero"].get<double>());
  }
  os << fmt::format("L1: {:.6g} (I infinite for |beta| > {:.6g})\n", ctx.model->l1(),
                    2.0 * ctx.model->l1());
  if (cfg.target_beta) {
    os << fmt::format("I(beta = {}) = {:.6g}, c = {:.6g}\n", *cfg.target_beta,
                      d["I_target_beta"].get<double>(), cfg.window.c.front());
  }
  if (cfg.kind == ExperimentKind::classic_er) {
    os << fmt::format("I(beta = {}) = {:.6g}, k = {}\n", cfg.classic.beta, ctx.classic_rate,
                      ctx.classic_k);
  }
  if (!ctx.net.empty()) os << fmt::format("net size: {}\n", ctx.net.size());
  for (const auto& w : d["windows"]) {
    os << fmt::format("epsilon {:.6g} (ln 1/eps = {:.6g}): b = {:.6g}, stride {}, {} windows\n",
                      w["epsilon"].get<double>(), w["log_inv_epsilon"].get<double>(),
                      w["b_max"].get<double>(), w["stride"].get<std::size_t>(),
                      w["family_size"].get<std::size_t>());
  }
  return os.str();
}

}  // namespace erlab
