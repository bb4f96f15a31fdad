#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace erlab {

enum class ProcessKind { iid, markov, suspension };

std::string_view to_string(ProcessKind kind);
ProcessKind process_kind_from_string(std::string_view name);

// Tolerance on probability vectors and transition rows.
inline constexpr double kStochasticTol = 1e-12;

/// Finite-state fast motion: an i.i.d. law, a Markov chain, or a suspension
/// flow built over a Markov chain with a per-state roof (holding time).
///
/// Treat as immutable once validate() has passed; sample paths share it
/// through a shared_ptr<const ProcessSpec>.
struct ProcessSpec {
  ProcessKind kind = ProcessKind::iid;
  std::vector<std::string> labels;
  Eigen::MatrixXd values;      // one row per state, k columns
  Eigen::VectorXd law;         // iid
  Eigen::MatrixXd transition;  // markov, suspension
  Eigen::VectorXd roof;        // suspension
  double roof_bound = 0.0;     // L3: roof in [1/L3, L3]

  std::size_t num_states() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t value_dim() const { return static_cast<std::size_t>(values.cols()); }
  bool is_suspension() const { return kind == ProcessKind::suspension; }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;

  /// One-step transition kernel. For an i.i.d. law every row equals the law.
  Eigen::MatrixXd kernel() const;

  /// Law of a single state under stationarity.
  Eigen::VectorXd stationary() const;

  /// Stationary law reweighted by roof durations (flow-invariant state
  /// occupation). Equals stationary() for discrete-time kinds.
  Eigen::VectorXd time_weights() const;
};

ProcessSpec make_iid(Eigen::MatrixXd values, Eigen::VectorXd law);
ProcessSpec make_markov(Eigen::MatrixXd values, Eigen::MatrixXd transition);
ProcessSpec make_suspension(Eigen::MatrixXd values, Eigen::MatrixXd transition,
                            Eigen::VectorXd roof, double roof_bound);

/// Fair +-1 coin.
ProcessSpec fair_coin();
/// Two-state chain on values (+1, -1) that switches state with probability p.
ProcessSpec flip_chain(double p);

/// Markov chain on admissible words of length `order`; the value and roof of
/// a word are those of its last letter. Represents a Gibbs measure whose
/// potential depends on `order` consecutive coordinates.
ProcessSpec higher_block_chain(const ProcessSpec& spec, int order);

/// Unique stationary law of an irreducible row-stochastic matrix, solved to a
/// residual of at most 1e-12. Throws ValidationError for reducible chains,
/// naming the states unreachable from some state.
Eigen::VectorXd stationary_law(const Eigen::MatrixXd& transition);

/// Largest kappa in [0,1] with kappa*nu(j) <= P(i,j) <= nu(j)/kappa for all
/// i, j, where nu is the stationary law. Zero when the condition fails.
double doeblin_coefficient(const Eigen::MatrixXd& transition);

/// Sampled fast motion. For suspensions `cumulative_times[k]` is the start of
/// the k-th holding interval; the vector has size() + 1 entries.
struct FastPath {
  std::shared_ptr<const ProcessSpec> spec;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> states;
  std::vector<double> cumulative_times;

  std::size_t size() const { return states.size(); }
  double total_time() const {
    return cumulative_times.empty() ? static_cast<double>(states.size())
                                    : cumulative_times.back();
  }
  auto value(std::size_t i) const { return spec->values.row(states[i]); }
};

FastPath sample_path(std::shared_ptr<const ProcessSpec> spec, std::uint64_t seed,
                     std::size_t n);

/// Suspension path long enough that its accumulated time reaches
/// `total_time`. It is a prefix-compatible extension of sample_path() with
/// the same seed.
FastPath sample_path_covering(std::shared_ptr<const ProcessSpec> spec,
                              std::uint64_t seed, double total_time);

struct SuspensionPoint {
  std::size_t index;
  double residual;
};

/// Holding interval containing time t: sigma_k <= t < sigma_{k+1}.
SuspensionPoint suspension_time_index(const FastPath& path, double t);

}  // namespace erlab
