#include "erlab/processes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::iid:
      return "iid";
    case ProcessKind::markov:
      return "markov";
    case ProcessKind::suspension:
      return "suspension";
  }
  return "?";
}

ProcessKind process_kind_from_string(std::string_view name) {
  if (name == "iid") return ProcessKind::iid;
  if (name == "markov") return ProcessKind::markov;
  if (name == "suspension") return ProcessKind::suspension;
  throw ValidationError(fmt::format(
      "process.kind: unknown kind '{}' (expected iid, markov or suspension)", name));
}

namespace {

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(fmt::format("s{}", i));
  return labels;
}

void check_probability_row(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                           const std::string& what) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (!std::isfinite(row(j)) || row(j) < 0.0) {
      throw ValidationError(
          fmt::format("{}: entry {} is {} (must be finite and >= 0)", what, j, row(j)));
    }
  }
  const double s = row.sum();
  if (std::abs(s - 1.0) > kStochasticTol) {
    throw ValidationError(fmt::format("{}: entries sum to {:.17g}, not 1 within {}",
                                      what, s, kStochasticTol));
  }
}

// reach(i, j) == true iff j can be reached from i along positive entries.
std::vector<std::vector<bool>> reachability(const Eigen::MatrixXd& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0 &&
            !reach[s][j]) {
          reach[s][j] = true;
          stack.push_back(j);
        }
      }
    }
  }
  return reach;
}

// Inverse-CDF sampling table, one row per source state.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const Eigen::MatrixXd& rows)
      : n_(static_cast<std::size_t>(rows.cols())), cdf_(rows.size()) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        acc += rows(i, j);
        cdf_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)] = acc;
      }
      // Last positive entry absorbs rounding so u < 1 always lands.
      for (Eigen::Index j = rows.cols() - 1; j >= 0; --j) {
        if (rows(i, j) > 0.0) {
          for (Eigen::Index m = j; m < rows.cols(); ++m)
            cdf_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(m)] = 1.0;
          break;
        }
      }
    }
  }

  std::uint32_t draw(std::size_t row, double u) const {
    const double* begin = cdf_.data() + row * n_;
    const double* it = std::upper_bound(begin, begin + n_, u);
    return static_cast<std::uint32_t>(it - begin);
  }

 private:
  std::size_t n_;
  std::vector<double> cdf_;
};

// Neumaier compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Draws states until `done(count, time)` returns true.
template <class Done>
FastPath sample_impl(std::shared_ptr<const ProcessSpec> spec, std::uint64_t seed,
                     std::size_t reserve, Done done) {
  spec->validate();
  FastPath path;
  path.spec = spec;
  path.seed = seed;
  path.states.reserve(reserve);
  const bool suspension = spec->is_suspension();
  if (suspension) {
    path.cumulative_times.reserve(reserve + 1);
    path.cumulative_times.push_back(0.0);
  }

  Rng rng(seed);
  CompensatedSum clock;
  if (spec->kind == ProcessKind::iid) {
    const DiscreteSampler sampler(spec->law.transpose());
    while (!done(path.states.size(), clock.value())) {
      path.states.push_back(sampler.draw(0, rng.uniform()));
    }
    return path;
  }

  const Eigen::VectorXd pi = spec->stationary();
  const DiscreteSampler start(pi.transpose());
  const DiscreteSampler step(spec->transition);
  std::uint32_t current = 0;
  bool first = true;
  while (!done(path.states.size(), clock.value())) {
    current = first ? start.draw(0, rng.uniform()) : step.draw(current, rng.uniform());
    first = false;
    path.states.push_back(current);
    if (suspension) {
      clock.add(spec->roof(current));
      path.cumulative_times.push_back(clock.value());
    }
  }
  return path;
}

}  // namespace

void ProcessSpec::validate() const {
  const auto n = values.rows();
  if (n == 0 || values.cols() == 0) {
    throw ValidationError("process.states: need at least one state with a value vector");
  }
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw ValidationError(fmt::format("process.states: {} labels for {} value rows",
                                      labels.size(), n));
  }
  if (!values.allFinite()) {
    throw ValidationError("process.states: state values must be finite");
  }
  if (kind == ProcessKind::iid) {
    if (law.size() != n) {
      throw ValidationError(
          fmt::format("process.law: expected {} probabilities, got {}", n, law.size()));
    }
    check_probability_row(law.transpose(), "process.law");
    return;
  }
  if (transition.rows() != n || transition.cols() != n) {
    throw ValidationError(fmt::format("process.transition: expected {}x{} matrix, got {}x{}",
                                      n, n, transition.rows(), transition.cols()));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    check_probability_row(transition.row(i), fmt::format("process.transition row {}", i));
  }
  if (kind == ProcessKind::suspension) {
    if (roof.size() != n) {
      throw ValidationError(
          fmt::format("process.roof: expected {} durations, got {}", n, roof.size()));
    }
    if (!(roof_bound >= 1.0) || !std::isfinite(roof_bound)) {
      throw ValidationError(
          fmt::format("process.roof_bound: L3 = {} must be finite and >= 1", roof_bound));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(roof(i) >= 1.0 / roof_bound && roof(i) <= roof_bound)) {
        throw ValidationError(fmt::format(
            "process.roof: duration {} of state {} outside [1/L3, L3] = [{}, {}]", roof(i),
            i, 1.0 / roof_bound, roof_bound));
      }
    }
  }
  // Throws for a reducible chain: no unique stationary law.
  (void)stationary_law(transition);
}

Eigen::MatrixXd ProcessSpec::kernel() const {
  if (kind == ProcessKind::iid) {
    return law.transpose().replicate(static_cast<Eigen::Index>(num_states()), 1);
  }
  return transition;
}

Eigen::VectorXd ProcessSpec::stationary() const {
  if (kind == ProcessKind::iid) return law;
  return stationary_law(transition);
}

Eigen::VectorXd ProcessSpec::time_weights() const {
  Eigen::VectorXd pi = stationary();
  if (kind != ProcessKind::suspension) return pi;
  Eigen::VectorXd w = pi.cwiseProduct(roof);
  return w / w.sum();
}

ProcessSpec make_iid(Eigen::MatrixXd values, Eigen::VectorXd law) {
  ProcessSpec spec;
  spec.kind = ProcessKind::iid;
  spec.labels = default_labels(static_cast<std::size_t>(values.rows()));
  spec.values = std::move(values);
  spec.law = std::move(law);
  spec.validate();
  return spec;
}

ProcessSpec make_markov(Eigen::MatrixXd values, Eigen::MatrixXd transition) {
  ProcessSpec spec;
  spec.kind = ProcessKind::markov;
  spec.labels = default_labels(static_cast<std::size_t>(values.rows()));
  spec.values = std::move(values);
  spec.transition = std::move(transition);
  spec.validate();
  return spec;
}

ProcessSpec make_suspension(Eigen::MatrixXd values, Eigen::MatrixXd transition,
                            Eigen::VectorXd roof, double roof_bound) {
  ProcessSpec spec;
  spec.kind = ProcessKind::suspension;
  spec.labels = default_labels(static_cast<std::size_t>(values.rows()));
  spec.values = std::move(values);
  spec.transition = std::move(transition);
  spec.roof = std::move(roof);
  spec.roof_bound = roof_bound;
  spec.validate();
  return spec;
}

ProcessSpec fair_coin() {
  Eigen::MatrixXd v(2, 1);
  v << 1.0, -1.0;
  ProcessSpec spec = make_iid(v, Eigen::Vector2d(0.5, 0.5));
  spec.labels = {"up", "down"};
  return spec;
}

ProcessSpec flip_chain(double p) {
  Eigen::MatrixXd v(2, 1);
  v << 1.0, -1.0;
  Eigen::MatrixXd t(2, 2);
  t << 1.0 - p, p, p, 1.0 - p;
  ProcessSpec spec = make_markov(v, t);
  spec.labels = {"up", "down"};
  return spec;
}

ProcessSpec higher_block_chain(const ProcessSpec& spec, int order) {
  spec.validate();
  if (order < 1) throw ValidationError("higher_block_chain: order must be >= 1");
  const Eigen::MatrixXd p = spec.kernel();
  const auto n = static_cast<std::size_t>(p.rows());

  std::vector<std::vector<std::uint32_t>> words;
  for (std::uint32_t s = 0; s < n; ++s) words.push_back({s});
  for (int len = 1; len < order; ++len) {
    std::vector<std::vector<std::uint32_t>> longer;
    for (const auto& w : words) {
      for (std::uint32_t s = 0; s < n; ++s) {
        if (p(w.back(), s) > 0.0) {
          auto ext = w;
          ext.push_back(s);
          longer.push_back(std::move(ext));
        }
      }
    }
    words = std::move(longer);
  }

  const auto m = static_cast<Eigen::Index>(words.size());
  ProcessSpec out;
  out.kind = spec.is_suspension() ? ProcessKind::suspension : ProcessKind::markov;
  out.values.resize(m, spec.values.cols());
  out.transition = Eigen::MatrixXd::Zero(m, m);
  if (spec.is_suspension()) {
    out.roof.resize(m);
    out.roof_bound = spec.roof_bound;
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto& w = words[static_cast<std::size_t>(a)];
    std::string label;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) label += '|';
      label += spec.labels[w[i]];
    }
    out.labels.push_back(std::move(label));
    out.values.row(a) = spec.values.row(w.back());
    if (spec.is_suspension()) out.roof(a) = spec.roof(w.back());
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto& v = words[static_cast<std::size_t>(b)];
      if (std::equal(w.begin() + 1, w.end(), v.begin())) {
        out.transition(a, b) = p(w.back(), v.back());
      }
    }
  }
  out.validate();
  return out;
}

Eigen::VectorXd stationary_law(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  if (n == 0 || p.cols() != n) {
    throw ValidationError("stationary_law: transition matrix must be square and nonempty");
  }
  const auto reach = reachability(p);
  for (std::size_t s = 0; s < reach.size(); ++s) {
    std::vector<std::size_t> missing;
    for (std::size_t j = 0; j < reach.size(); ++j) {
      if (!reach[s][j]) missing.push_back(j);
    }
    if (!missing.empty()) {
      std::ostringstream os;
      for (std::size_t i = 0; i < missing.size(); ++i) os << (i ? ", " : "") << missing[i];
      throw ValidationError(fmt::format(
          "reducible chain: no unique stationary law; states {{{}}} unreachable from state {}",
          os.str(), s));
    }
  }

  // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd pi = lu.solve(rhs);

  double residual = 0.0;
  for (int refine = 0; refine < 4; ++refine) {
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    residual = (pi.transpose() * p - pi.transpose()).cwiseAbs().maxCoeff();
    if (residual <= 1e-13) break;
    pi += lu.solve(rhs - a * pi);
  }
  if (residual > 1e-12) {
    throw ConvergenceError(
        fmt::format("stationary_law: residual {:.3e} exceeds 1e-12", residual), residual);
  }
  return pi;
}

double doeblin_coefficient(const Eigen::MatrixXd& p) {
  if (p.rows() == 0 || p.rows() != p.cols()) {
    throw ValidationError("doeblin_coefficient: transition matrix must be square and nonempty");
  }
  // Every stationary weight is positive for an irreducible chain, so a zero
  // entry already violates the lower bound.
  if ((p.array() <= 0.0).any()) return 0.0;
  const Eigen::VectorXd nu = stationary_law(p);
  double kappa = 1.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      kappa = std::min({kappa, p(i, j) / nu(j), nu(j) / p(i, j)});
    }
  }
  return kappa;
}

FastPath sample_path(std::shared_ptr<const ProcessSpec> spec, std::uint64_t seed,
                     std::size_t n) {
  if (n == 0) throw UsageError("sample_path: n must be >= 1");
  return sample_impl(std::move(spec), seed, n,
                     [n](std::size_t count, double) { return count >= n; });
}

FastPath sample_path_covering(std::shared_ptr<const ProcessSpec> spec, std::uint64_t seed,
                              double total_time) {
  if (!spec->is_suspension()) {
    throw UsageError("sample_path_covering: requires a suspension process");
  }
  if (!(total_time > 0.0)) throw UsageError("sample_path_covering: total_time must be > 0");
  // Expected count from the stationary mean roof; only sizes the reservation.
  const double mean_roof = spec->stationary().dot(spec->roof);
  const auto guess = static_cast<std::size_t>(1.05 * total_time / mean_roof) + 16;
  return sample_impl(std::move(spec), seed, guess, [total_time](std::size_t count, double t) {
    return count > 0 && t > total_time;
  });
}

SuspensionPoint suspension_time_index(const FastPath& path, double t) {
  if (path.cumulative_times.empty()) {
    throw UsageError("suspension_time_index: path is not a suspension path");
  }
  const auto& c = path.cumulative_times;
  if (!(t >= 0.0) || t >= c.back()) {
    throw RangeError(fmt::format(
        "suspension_time_index: t = {} outside accumulated time [0, {})", t, c.back()));
  }
  const auto it = std::upper_bound(c.begin(), c.end(), t);
  const auto k = static_cast<std::size_t>(it - c.begin()) - 1;
  return {k, t - c[k]};
}

}  // namespace erlab
