#include "erlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "erlab/errors.hpp"
#include "erlab/rate_model.hpp"

namespace erlab {

using nlohmann::json;

namespace {

// JSON object view that records which keys were read, so leftovers can be
// reported as typos.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(fmt::format("config: '{}' must be an object", path_));
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ValidationError(fmt::format("config: missing required key '{}'", name(key)));
    return *v;
  }

  template <class T>
  T get(const std::string& key) {
    return convert<T>(require(key), key);
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    const json* v = find(key);
    return v ? convert<T>(*v, key) : fallback;
  }

  Block child(const std::string& key) { return Block(require(key), name(key)); }

  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ValidationError(fmt::format("config: unknown key '{}'", name(key)));
    }
  }

  template <class T>
  T convert(const json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("config: '{}' has the wrong type ({})", name(key), e.what()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const std::string& field) {
  if (rows.empty()) throw ValidationError(fmt::format("config: '{}' must be nonempty", field));
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ValidationError(fmt::format("config: '{}' rows have unequal lengths", field));
    }
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

std::vector<double> vec_of(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ProcessSpec parse_process(Block p) {
  const auto kind = process_kind_from_string(p.get<std::string>("kind"));
  const json& states = p.require("states");
  if (!states.is_array() || states.empty()) {
    throw ValidationError("config: 'process.states' must be a nonempty array");
  }
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < states.size(); ++i) {
    Block s(states[i], fmt::format("process.states[{}]", i));
    labels.push_back(s.get_or<std::string>("label", fmt::format("s{}", i)));
    const json& v = s.require("value");
    values.push_back(v.is_number() ? std::vector<double>{v.get<double>()}
                                   : s.convert<std::vector<double>>(v, "value"));
    s.finish();
  }
  const Eigen::MatrixXd vals = to_matrix(values, "process.states.value");
  ProcessSpec spec;
  switch (kind) {
    case ProcessKind::iid:
      spec = make_iid(vals, to_vector(p.get<std::vector<double>>("law")));
      break;
    case ProcessKind::markov:
      spec = make_markov(vals, to_matrix(p.get<std::vector<std::vector<double>>>("transition"),
                                         "process.transition"));
      break;
    case ProcessKind::suspension:
      spec = make_suspension(
          vals,
          to_matrix(p.get<std::vector<std::vector<double>>>("transition"), "process.transition"),
          to_vector(p.get<std::vector<double>>("roof")), p.get<double>("roof_bound"));
      break;
  }
  spec.labels = labels;
  p.finish();
  spec.validate();
  return spec;
}

DynamicsSpec parse_dynamics(Block d, const ProcessSpec& spec, Eigen::VectorXd& x0) {
  const std::string form = d.get_or<std::string>("form", "observable");
  const double l1 = d.get<double>("L1");
  const double radius = d.get_or<double>("radius", 1.0);
  std::optional<DynamicsSpec> dyn;
  if (form == "observable") {
    dyn = DynamicsSpec::observable(l1, static_cast<std::size_t>(
                                           d.get_or<long long>("d", static_cast<long long>(spec.value_dim()))));
  } else {
    const auto f = field_form_from_string(form);
    const Eigen::MatrixXd a = to_matrix(d.get<std::vector<std::vector<double>>>("A"), "dynamics.A");
    const Eigen::MatrixXd c = to_matrix(d.get<std::vector<std::vector<double>>>("C"), "dynamics.C");
    const Eigen::VectorXd b = d.has("b") ? to_vector(d.get<std::vector<double>>("b"))
                                         : Eigen::VectorXd::Zero(a.rows());
    dyn = f == FieldForm::affine
              ? DynamicsSpec::affine(a, c, b, l1, radius)
              : DynamicsSpec::clamped_affine(a, d.get<double>("saturation"), c, b, l1, radius);
  }
  if (d.has("d")) {
    const auto dim = d.get<long long>("d");
    if (dim < 1 || static_cast<std::size_t>(dim) != dyn->dim()) {
      throw ValidationError(fmt::format("config: 'dynamics.d' = {} but the parameters give d = {}",
                                        dim, dyn->dim()));
    }
  }
  x0 = d.has("x0") ? to_vector(d.get<std::vector<double>>("x0"))
                   : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dyn->dim()));
  d.finish();
  if (dyn->input_dim() != spec.value_dim()) {
    throw ValidationError(fmt::format("config: dynamics takes inputs of dimension {}, process "
                                      "values have dimension {}",
                                      dyn->input_dim(), spec.value_dim()));
  }
  if (static_cast<std::size_t>(x0.size()) != dyn->dim()) {
    throw ValidationError(fmt::format("config: 'dynamics.x0' has {} entries, d = {}", x0.size(),
                                      dyn->dim()));
  }
  return *dyn;
}

DynamicsSpec default_dynamics(const ProcessSpec& spec) {
  return DynamicsSpec::observable(spec.values.cwiseAbs().maxCoeff(), spec.value_dim());
}

json dynamics_json(const DynamicsSpec& d, const Eigen::VectorXd& x0) {
  json j = {{"form", std::string(to_string(d.form()))},
            {"A", rows_of(d.a())},
            {"C", rows_of(d.c())},
            {"b", vec_of(d.b())},
            {"L1", d.lipschitz()},
            {"radius", d.state_radius()},
            {"x0", vec_of(x0)},
            {"d", d.dim()}};
  if (d.form() == FieldForm::clamped_affine) j["saturation"] = d.saturation();
  return j;
}

json process_json(const ProcessSpec& s) {
  json states = json::array();
  for (std::size_t i = 0; i < s.num_states(); ++i) {
    states.push_back({{"label", s.labels.size() > i ? s.labels[i] : fmt::format("s{}", i)},
                      {"value", vec_of(s.values.row(static_cast<Eigen::Index>(i)).transpose())}});
  }
  json j = {{"kind", std::string(to_string(s.kind))}, {"states", states}};
  if (s.kind == ProcessKind::iid) {
    j["law"] = vec_of(s.law);
  } else {
    j["transition"] = rows_of(s.transition);
  }
  if (s.is_suspension()) {
    j["roof"] = vec_of(s.roof);
    j["roof_bound"] = s.roof_bound;
  }
  return j;
}

const std::set<std::string> kStatistics{"upper", "lower", "hausdorff", "endpoint"};

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::classic_er: return "classic_er";
    case ExperimentKind::functional_er: return "functional_er";
    case ExperimentKind::continuous_er: return "continuous_er";
    case ExperimentKind::ratefn_audit: return "ratefn_audit";
    case ExperimentKind::averaging_audit: return "averaging_audit";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::classic_er, ExperimentKind::functional_er,
                 ExperimentKind::continuous_er, ExperimentKind::ratefn_audit,
                 ExperimentKind::averaging_audit}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError(fmt::format(
      "config: 'experiment' = '{}' is not one of classic_er, functional_er, continuous_er, "
      "ratefn_audit, averaging_audit",
      name));
}

ExperimentConfig parse_config(const json& doc) {
  Block root(doc, "");
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(root.get<std::string>("experiment"));
  auto spec = std::make_shared<ProcessSpec>(parse_process(root.child("process")));
  cfg.process = spec;
  cfg.dynamics = root.has("dynamics") ? parse_dynamics(root.child("dynamics"), *spec, cfg.x0)
                                      : default_dynamics(*spec);
  if (cfg.x0.size() == 0) cfg.x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.dyn().dim()));
  cfg.output = root.get_or<std::string>("output", "out");

  if (const json* t = root.find("trials")) {
    Block trials(*t, "trials");
    const auto seeds = trials.get_or<long long>("seeds", 1);
    if (seeds < 1) throw ValidationError("config: 'trials.seeds' must be >= 1");
    cfg.seeds = static_cast<std::size_t>(seeds);
    cfg.base_seed = trials.get_or<std::uint64_t>("base_seed", 0);
    trials.finish();
  }

  const bool needs_eps = cfg.kind != ExperimentKind::classic_er &&
                         cfg.kind != ExperimentKind::ratefn_audit;
  if (const json* w = root.find("window")) {
    Block win(*w, "window");
    if (win.has("epsilon") == win.has("log_inv_epsilon")) {
      throw ValidationError("config: 'window' needs exactly one of 'epsilon', 'log_inv_epsilon'");
    }
    if (win.has("epsilon")) {
      cfg.epsilons = win.get<std::vector<double>>("epsilon");
    } else {
      for (double l : win.get<std::vector<double>>("log_inv_epsilon")) cfg.epsilons.push_back(std::exp(-l));
    }
    cfg.window.grid = static_cast<std::size_t>(win.get_or<long long>("N", 8));
    cfg.window.segments = static_cast<std::size_t>(win.get_or<long long>("K", 8));
    cfg.window.horizon = win.get_or<double>("T", 1.0);
    cfg.window.c_bound = win.get_or<double>("c_bound", 0.0);
    cfg.window.stride = static_cast<std::size_t>(win.get_or<long long>("stride", 0));
    if (win.has("c") && win.has("target_beta")) {
      throw ValidationError("config: 'window' takes 'c' or 'target_beta', not both");
    }
    if (win.has("c")) cfg.window.c = win.get<std::vector<double>>("c");
    if (win.has("target_beta")) cfg.target_beta = win.get<double>("target_beta");
    win.finish();
  } else if (needs_eps) {
    throw ValidationError(fmt::format("config: experiment '{}' needs a 'window' block",
                                      to_string(cfg.kind)));
  }
  if (needs_eps && cfg.epsilons.empty()) throw ValidationError("config: 'window.epsilon' is empty");
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double e = cfg.epsilons[i];
    if (!(e > 0.0 && e < 1.0)) {
      throw ValidationError(fmt::format(
          "config: 'window.epsilon[{}]' = {} must lie in (0, 1) so that ln(1/epsilon) > 0", i, e));
    }
    if (i > 0 && !(e < cfg.epsilons[i - 1])) {
      throw ValidationError("config: 'window.epsilon' must be strictly decreasing");
    }
  }

  if (const json* c = root.find("classic_er")) {
    Block b(*c, "classic_er");
    cfg.classic.n = static_cast<std::size_t>(b.get<long long>("n"));
    cfg.classic.beta = b.get_or<double>("beta", 0.5);
    cfg.classic.k = static_cast<std::size_t>(b.get_or<long long>("k", 0));
    b.finish();
  }
  if (const json* f = root.find("functional")) {
    Block b(*f, "functional");
    cfg.functional.statistics = b.get_or<std::vector<std::string>>("statistics", {});
    cfg.functional.delta = b.get_or<double>("delta", 0.2);
    cfg.functional.beta = b.get_or<double>("beta", 0.5);
    cfg.functional.write_curves = b.get_or<bool>("write_curves", true);
    b.finish();
  }
  if (const json* a = root.find("ratefn_audit")) {
    Block b(*a, "ratefn_audit");
    cfg.audit.betas = b.get<std::vector<double>>("betas");
    cfg.audit.dual_check = b.get_or<bool>("dual_check", true);
    b.finish();
  }
  root.finish();

  if (cfg.kind == ExperimentKind::classic_er && cfg.classic.n < 2) {
    throw ValidationError("config: classic_er needs 'classic_er.n' >= 2");
  }
  if (cfg.kind == ExperimentKind::continuous_er && !spec->is_suspension()) {
    throw ValidationError("config: continuous_er needs a suspension process");
  }
  if (cfg.kind != ExperimentKind::continuous_er && spec->is_suspension() &&
      cfg.kind != ExperimentKind::ratefn_audit) {
    throw ValidationError(fmt::format("config: experiment '{}' needs a discrete-time process",
                                      to_string(cfg.kind)));
  }
  if (cfg.kind == ExperimentKind::ratefn_audit && cfg.audit.betas.empty()) {
    throw ValidationError("config: ratefn_audit needs 'ratefn_audit.betas'");
  }
  if (cfg.functional.statistics.empty()) {
    cfg.functional.statistics = cfg.kind == ExperimentKind::continuous_er
                                    ? std::vector<std::string>{"endpoint"}
                                    : std::vector<std::string>{"upper", "lower", "hausdorff"};
  }
  for (const auto& s : cfg.functional.statistics) {
    if (!kStatistics.count(s)) {
      throw ValidationError(fmt::format(
          "config: 'functional.statistics' entry '{}' is not one of upper, lower, hausdorff, endpoint", s));
    }
  }
  if (!(cfg.functional.delta > 0.0)) throw ValidationError("config: 'functional.delta' must be > 0");

  cfg.dyn().certify(spec->values, cfg.base_seed);

  if (cfg.target_beta) {
    const RateModel model = RateModel::from_process(*spec, cfg.dyn());
    const double beta = *cfg.target_beta;
    if (!(beta > model.beta_minus() && beta < model.beta_plus())) {
      throw ValidationError(fmt::format(
          "config: 'window.target_beta' = {} must lie strictly inside (beta-, beta+) = ({}, {})",
          beta, model.beta_minus(), model.beta_plus()));
    }
    const double rate = model.rate_exact(beta);
    if (!(rate > 0.0)) throw ValidationError("config: 'window.target_beta' gives I = 0");
    cfg.window.c = {1.0 / rate};
  }
  if (needs_eps) {
    for (double e : cfg.epsilons) cfg.window_at(e).validate();
  }

  json window = {{"epsilon", cfg.epsilons}, {"N", cfg.window.grid},
                 {"K", cfg.window.segments}, {"T", cfg.window.horizon},
                 {"c", cfg.window.c},         {"c_bound", cfg.window.c_bound},
                 {"stride", cfg.window.stride}};
  if (cfg.target_beta) window["target_beta"] = *cfg.target_beta;
  cfg.resolved = {{"experiment", std::string(to_string(cfg.kind))},
                  {"process", process_json(*spec)},
                  {"dynamics", dynamics_json(cfg.dyn(), cfg.x0)},
                  {"window", window},
                  {"trials", {{"seeds", cfg.seeds}, {"base_seed", cfg.base_seed}}},
                  {"output", cfg.output}};
  if (cfg.kind == ExperimentKind::classic_er) {
    cfg.resolved["classic_er"] = {{"n", cfg.classic.n}, {"beta", cfg.classic.beta}, {"k", cfg.classic.k}};
  }
  if (cfg.kind == ExperimentKind::functional_er || cfg.kind == ExperimentKind::continuous_er) {
    cfg.resolved["functional"] = {{"statistics", cfg.functional.statistics},
                                  {"delta", cfg.functional.delta},
                                  {"beta", cfg.functional.beta},
                                  {"write_curves", cfg.functional.write_curves}};
  }
  if (cfg.kind == ExperimentKind::ratefn_audit) {
    cfg.resolved["ratefn_audit"] = {{"betas", cfg.audit.betas}, {"dual_check", cfg.audit.dual_check}};
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError(fmt::format("config: cannot open '{}'", path));
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config: '{}' is not valid JSON ({})", path, e.what()));
  }
  return parse_config(doc);
}

}  // namespace erlab
