#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "erlab/dynamics.hpp"
#include "erlab/processes.hpp"
#include "erlab/window.hpp"

namespace erlab {

enum class ExperimentKind { classic_er, functional_er, continuous_er, ratefn_audit, averaging_audit };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Per-kind settings. Fields not used by the chosen kind keep their defaults.
struct ClassicSettings {
  std::size_t n = 0;
  double beta = 0.5;
  std::size_t k = 0;  // 0: floor(ln n / I(beta))
};

struct FunctionalSettings {
  std::vector<std::string> statistics;  // subset of upper, lower, hausdorff, endpoint
  double delta = 0.2;                   // net resolution
  double beta = 0.5;                    // endpoint target
  bool write_curves = true;             // argmax curves of the first seed
};

struct AuditSettings {
  std::vector<double> betas;
  bool dual_check = true;  // compare with the Donsker-Varadhan route where defined
};

/// Fully resolved experiment. `resolved` echoes every field after defaults,
/// including c when it was derived from a target beta.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::classic_er;
  std::shared_ptr<const ProcessSpec> process;
  std::optional<DynamicsSpec> dynamics;  // always set after parsing
  Eigen::VectorXd x0;
  std::vector<double> epsilons;
  WindowParams window;  // epsilon is filled in per cell
  std::optional<double> target_beta;
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
  std::string output = "out";
  ClassicSettings classic;
  FunctionalSettings functional;
  AuditSettings audit;
  nlohmann::json resolved;

  const DynamicsSpec& dyn() const { return *dynamics; }
  std::uint64_t seed(std::size_t i) const { return base_seed + i; }
  WindowParams window_at(double epsilon) const {
    WindowParams w = window;
    w.epsilon = epsilon;
    return w;
  }
};

/// Parses and validates. Unknown keys, wrong types and violated constraints
/// throw ValidationError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

}  // namespace erlab
