#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "erlab/config.hpp"
#include "erlab/curve.hpp"

namespace erlab {

/// Environment variable that overrides the worker count.
inline constexpr const char* kWorkersEnv = "ERLAB_WORKERS";

/// One tidy statistics row. epsilon and seed are absent for rows that do not
/// depend on them (rate audits, classic runs have no epsilon).
struct StatRow {
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  std::string statistic;
  double value;
  std::optional<double> argmax_t;
};

struct NamedCurve {
  std::string name;
  Curve curve;
};

/// Output of one (epsilon, seed) cell; pure given the config and the seed.
struct CellResult {
  std::size_t eps_index = 0;
  std::size_t seed_index = 0;
  std::vector<StatRow> rows;
  std::vector<NamedCurve> curves;
  double seconds = 0.0;
};

struct RunOptions {
  std::optional<std::string> output_dir;  // overrides the config
  std::optional<std::size_t> workers;     // overrides the environment
  bool write_files = true;
};

struct RunResult {
  std::vector<CellResult> cells;  // sorted by (epsilon index, seed index)
  nlohmann::json report;
  std::string stats_csv;

  /// Values of `statistic` at epsilon index `eps_index`, in seed order.
  std::vector<double> values(const std::string& statistic, std::size_t eps_index = 0) const;
};

/// Worker count: the override, else ERLAB_WORKERS, else the hardware count.
std::size_t resolve_workers(std::optional<std::size_t> requested);

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Derived quantities printed by `validate`: b per epsilon, I(beta), the
/// finiteness domain and the Doeblin coefficient.
std::string describe(const ExperimentConfig& cfg);

/// Header plus rows in canonical order, numbers in shortest round-trip form.
std::string format_stats_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace erlab
