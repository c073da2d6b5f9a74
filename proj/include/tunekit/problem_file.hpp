#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tunekit/error.hpp"
#include "tunekit/launch.hpp"
#include "tunekit/mold.hpp"
#include "tunekit/problem.hpp"

namespace tunekit {

// Problem files are YAML. Top-level keys:
//
//   name, evaluator (simulated|pipeline), metric (runtime|energy|edp),
//   space {seed, parameters [{name, kind, values, default}]},
//   molds [{source, destination}], env {VAR: param}, build, validate,
//   launch {kind, nodes, ranks_per_node, cores_per_rank, command, exe,
//           threads_param, threads_scale},
//   geopm_report, timeout_s, keep_trial_dirs,
//   forest {n_trees, min_samples_leaf, max_features, bootstrap, seed},
//   acquisition {kappa, n_initial_random, n_candidates_per_ask},
//   budget {max_evals, wall_clock_s}
//
// Only name and space are required. Unknown keys are rejected.

namespace detail {

class ProblemReader {
public:
  explicit ProblemReader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    const auto mark = at.Mark();
    std::string where = file_;
    if (mark.line >= 0) {
      where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
    }
    throw ProblemError(where + ": error: " + message);
  }

  void only_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) const {
    if (!map.IsMap()) {
      fail(map, where + " must be a mapping");
    }
    std::set<std::string> seen;
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) {
        fail(kv.first, "unknown key '" + key + "' in " + where);
      }
      if (!seen.insert(key).second) {
        fail(kv.first, "duplicate key '" + key + "' in " + where);
      }
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) {
      fail(node, what + " must be a scalar");
    }
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, what + " has the wrong type");
    }
  }

  std::size_t positive(const YAML::Node& node, const std::string& what) const {
    const auto v = scalar<long long>(node, what);
    if (v < 1) {
      fail(node, what + " must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  }

  std::uint64_t non_negative(const YAML::Node& node, const std::string& what) const {
    const auto v = scalar<long long>(node, what);
    if (v < 0) {
      fail(node, what + " must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
  }

  const std::string& file() const { return file_; }

private:
  std::string file_;
};

}  // namespace detail

inline Problem parse_problem(const std::string& text, const std::filesystem::path& base_dir,
                             const std::string& label = "<problem>", bool check_molds = true) {
  detail::ProblemReader rd(label);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ProblemError(label + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                       ": error: " + e.msg);
  }
  if (!root.IsMap()) {
    throw ProblemError(label + ":1:1: error: problem file must be a YAML mapping");
  }
  rd.only_keys(root,
               {"name", "evaluator", "metric", "space", "molds", "env", "build", "validate", "launch", "geopm_report",
                "timeout_s", "keep_trial_dirs", "forest", "acquisition", "budget"},
               "problem");

  Problem p;
  p.base_dir = base_dir;
  if (!root["name"]) rd.fail(root, "missing required key 'name'");
  p.name = rd.scalar<std::string>(root["name"], "name");

  if (auto n = root["evaluator"]) {
    const auto v = rd.scalar<std::string>(n, "evaluator");
    if (v == "simulated") {
      p.evaluator = EvaluatorKind::simulated;
    } else if (v == "pipeline") {
      p.evaluator = EvaluatorKind::pipeline;
    } else {
      rd.fail(n, "evaluator must be 'simulated' or 'pipeline'");
    }
  }
  if (auto n = root["metric"]) {
    try {
      p.metric = metric_from_string(rd.scalar<std::string>(n, "metric"));
    } catch (const Error&) {
      rd.fail(n, "metric must be runtime, energy or edp");
    }
  }

  // space
  const auto space = root["space"];
  if (!space) rd.fail(root, "missing required key 'space'");
  rd.only_keys(space, {"seed", "parameters"}, "space");
  std::uint64_t seed = 0;
  if (auto n = space["seed"]) seed = rd.non_negative(n, "space.seed");
  const auto params = space["parameters"];
  if (!params || !params.IsSequence()) rd.fail(space, "space.parameters must be a list");
  std::vector<Parameter> parameters;
  std::set<std::string> names;
  for (const auto& pn : params) {
    rd.only_keys(pn, {"name", "kind", "values", "default"}, "parameter");
    Parameter par;
    if (!pn["name"]) rd.fail(pn, "parameter needs a name");
    par.name = rd.scalar<std::string>(pn["name"], "parameter name");
    if (!names.insert(par.name).second) rd.fail(pn["name"], "duplicate parameter name '" + par.name + "'");
    const auto kind = pn["kind"] ? rd.scalar<std::string>(pn["kind"], "kind") : std::string("categorical");
    if (kind == "ordinal") {
      par.kind = ParamKind::ordinal;
    } else if (kind == "categorical") {
      par.kind = ParamKind::categorical;
    } else {
      rd.fail(pn["kind"], "kind must be ordinal or categorical");
    }
    const auto values = pn["values"];
    if (!values || !values.IsSequence() || values.size() == 0) rd.fail(pn, "parameter needs a non-empty values list");
    std::set<std::string> seen;
    for (const auto& v : values) {
      auto s = rd.scalar<std::string>(v, "value");
      if (!seen.insert(s).second) rd.fail(v, "duplicate value '" + s + "' in parameter '" + par.name + "'");
      par.values.push_back(std::move(s));
    }
    if (!pn["default"]) rd.fail(pn, "parameter '" + par.name + "' needs a default");
    par.default_value = rd.scalar<std::string>(pn["default"], "default");
    if (!par.index_of(par.default_value)) {
      rd.fail(pn["default"], "default '" + par.default_value + "' is not among the values of '" + par.name + "'");
    }
    parameters.push_back(std::move(par));
  }
  p.space = ParamSpace(std::move(parameters), seed);
  try {
    check_values_marker_free(p.space);
  } catch (const MoldError& e) {
    rd.fail(params, e.what());
  }

  if (auto molds = root["molds"]) {
    if (!molds.IsSequence()) rd.fail(molds, "molds must be a list");
    for (const auto& m : molds) {
      rd.only_keys(m, {"source", "destination"}, "mold");
      if (!m["source"]) rd.fail(m, "mold needs a source");
      MoldFile mf;
      mf.source = rd.scalar<std::string>(m["source"], "mold source");
      mf.destination = m["destination"] ? rd.scalar<std::string>(m["destination"], "mold destination")
                                        : mf.source.filename().string();
      if (mf.destination.is_absolute()) rd.fail(m["destination"], "mold destination must be relative");
      if (check_molds) {
        try {
          check_mold({p.resolve(mf.source), mf.destination}, p.space);
        } catch (const MoldError& e) {
          rd.fail(m["source"], e.what());
        }
      }
      p.molds.push_back(std::move(mf));
    }
  }

  if (auto env = root["env"]) {
    if (!env.IsMap()) rd.fail(env, "env must map variable names to parameter names");
    for (const auto& kv : env) {
      const auto var = kv.first.as<std::string>();
      const auto param = rd.scalar<std::string>(kv.second, "env binding");
      if (p.space.find(param) == nullptr) rd.fail(kv.second, "env " + var + " is bound to unknown parameter '" + param + "'");
      p.env.emplace_back(var, param);
    }
  }

  if (auto n = root["build"]) p.build_command = rd.scalar<std::string>(n, "build");
  if (auto n = root["validate"]) p.validate_command = rd.scalar<std::string>(n, "validate");

  if (auto launch = root["launch"]) {
    rd.only_keys(launch,
                 {"kind", "nodes", "ranks_per_node", "cores_per_rank", "command", "exe", "threads_param",
                  "threads_scale"},
                 "launch");
    if (auto n = launch["kind"]) {
      try {
        p.launch.kind = launcher_from_string(rd.scalar<std::string>(n, "launch.kind"));
      } catch (const LaunchError& e) {
        rd.fail(n, e.what());
      }
    }
    if (auto n = launch["nodes"]) p.launch.nodes = rd.positive(n, "launch.nodes");
    if (auto n = launch["ranks_per_node"]) p.launch.ranks_per_node = rd.positive(n, "launch.ranks_per_node");
    if (auto n = launch["cores_per_rank"]) p.launch.cores_per_rank = rd.positive(n, "launch.cores_per_rank");
    if (auto n = launch["command"]) p.launch.command = rd.scalar<std::string>(n, "launch.command");
    if (auto n = launch["exe"]) p.executable = rd.scalar<std::string>(n, "launch.exe");
    if (auto n = launch["threads_param"]) {
      p.threads_param = rd.scalar<std::string>(n, "launch.threads_param");
      if (p.space.find(*p.threads_param) == nullptr) rd.fail(n, "threads_param names no parameter");
    }
    if (auto n = launch["threads_scale"]) p.threads_scale = rd.positive(n, "launch.threads_scale");
    try {
      split_command(p.launch.command);
    } catch (const LaunchError& e) {
      rd.fail(launch["command"], e.what());
    }
  }
  if (p.evaluator == EvaluatorKind::pipeline && p.executable.empty()) {
    rd.fail(root, "pipeline problems need launch.exe");
  }
  const bool needs_threads = p.launch.kind != LauncherKind::local_shell;
  if (p.evaluator == EvaluatorKind::pipeline && needs_threads && !p.threads_param) {
    rd.fail(root["launch"], "launcher " + std::string(to_string(p.launch.kind)) + " needs launch.threads_param");
  }

  // Thread counts the launcher cannot place are rejected here, not per trial.
  if (p.threads_param && p.launch.kind != LauncherKind::local_shell) {
    const auto& par = *p.space.find(*p.threads_param);
    for (const auto& v : par.values) {
      try {
        std::size_t n = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
          throw LaunchError("thread value '" + v + "' is not an integer");
        }
        n *= p.threads_scale;
        if (p.launch.kind == LauncherKind::theta_aprun || p.launch.kind == LauncherKind::geopm_aprun) {
          theta_depth_map(n);
        } else if (n == 0 || n % 4 != 0) {
          throw LaunchError("thread count " + std::to_string(n) + " is not a positive multiple of 4");
        }
      } catch (const LaunchError& e) {
        rd.fail(root["launch"]["threads_param"], std::string("parameter '") + par.name + "': " + e.what());
      }
    }
  }

  if (auto n = root["geopm_report"]) p.geopm_report = rd.scalar<std::string>(n, "geopm_report");
  if (p.metric != MetricKind::runtime_s) {
    const bool report_ok = p.launch.kind == LauncherKind::geopm_aprun ||
                           (p.launch.kind == LauncherKind::local_shell && root["geopm_report"]);
    if (p.evaluator == EvaluatorKind::pipeline && !report_ok) {
      rd.fail(root["metric"], "energy and edp metrics need launch.kind geopm_aprun, or local_shell with geopm_report");
    }
  }
  if (auto n = root["timeout_s"]) {
    const auto t = rd.scalar<double>(n, "timeout_s");
    if (!(t > 0.0)) rd.fail(n, "timeout_s must be positive");
    p.timeout_s = t;
  }
  if (auto n = root["keep_trial_dirs"]) p.keep_trial_dirs = rd.scalar<bool>(n, "keep_trial_dirs");

  if (auto forest = root["forest"]) {
    rd.only_keys(forest, {"n_trees", "min_samples_leaf", "max_features", "bootstrap", "seed"}, "forest");
    if (auto n = forest["n_trees"]) p.forest.n_trees = rd.positive(n, "forest.n_trees");
    if (auto n = forest["min_samples_leaf"]) p.forest.min_samples_leaf = rd.positive(n, "forest.min_samples_leaf");
    if (auto n = forest["max_features"]) {
      const auto s = rd.scalar<std::string>(n, "forest.max_features");
      if (s == "all") {
        p.forest.max_features = MaxFeatures::all();
      } else if (s == "third") {
        p.forest.max_features = MaxFeatures::third();
      } else {
        const auto count = rd.positive(n, "forest.max_features");
        if (count > p.space.dimension()) rd.fail(n, "forest.max_features exceeds the parameter count");
        p.forest.max_features = MaxFeatures::fixed(count);
      }
    }
    if (auto n = forest["bootstrap"]) p.forest.bootstrap = rd.scalar<bool>(n, "forest.bootstrap");
    if (auto n = forest["seed"]) p.forest.seed = rd.non_negative(n, "forest.seed");
  }

  if (auto acq = root["acquisition"]) {
    rd.only_keys(acq, {"kappa", "n_initial_random", "n_candidates_per_ask"}, "acquisition");
    if (auto n = acq["kappa"]) {
      p.acquisition.kappa = rd.scalar<double>(n, "acquisition.kappa");
      if (!(p.acquisition.kappa >= 0.0)) rd.fail(n, "acquisition.kappa must be >= 0");
    }
    if (auto n = acq["n_initial_random"]) p.acquisition.n_initial_random = rd.positive(n, "acquisition.n_initial_random");
    if (auto n = acq["n_candidates_per_ask"])
      p.acquisition.n_candidates_per_ask = rd.positive(n, "acquisition.n_candidates_per_ask");
  }

  if (auto budget = root["budget"]) {
    rd.only_keys(budget, {"max_evals", "wall_clock_s"}, "budget");
    if (auto n = budget["max_evals"]) p.budget.max_evals = rd.positive(n, "budget.max_evals");
    if (auto n = budget["wall_clock_s"]) {
      const auto t = rd.scalar<double>(n, "budget.wall_clock_s");
      if (!(t > 0.0)) rd.fail(n, "budget.wall_clock_s must be positive");
      p.budget.wall_clock_limit_s = t;
    }
  }
  return p;
}

inline Problem load_problem(const std::filesystem::path& path, bool check_molds = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ProblemError(path.string() + ": error: cannot open problem file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_problem(buf.str(), base, path.string(), check_molds);
}

// Canonical YAML form; parse_problem(serialize_problem(p)) reproduces p.
inline std::string serialize_problem(const Problem& p) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << p.name;
  out << YAML::Key << "evaluator" << YAML::Value << std::string(to_string(p.evaluator));
  out << YAML::Key << "metric" << YAML::Value << std::string(to_string(p.metric));

  out << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << p.space.seed();
  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginSeq;
  for (const auto& par : p.space.parameters()) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << par.name;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(par.kind));
    out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : par.values) out << YAML::DoubleQuoted << v;
    out << YAML::EndSeq;
    out << YAML::Key << "default" << YAML::Value << YAML::DoubleQuoted << par.default_value;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  if (!p.molds.empty()) {
    out << YAML::Key << "molds" << YAML::Value << YAML::BeginSeq;
    for (const auto& m : p.molds) {
      out << YAML::BeginMap << YAML::Key << "source" << YAML::Value << m.source.string() << YAML::Key
          << "destination" << YAML::Value << m.destination.string() << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!p.env.empty()) {
    out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
    for (const auto& [var, param] : p.env) out << YAML::Key << var << YAML::Value << param;
    out << YAML::EndMap;
  }
  if (!p.build_command.empty()) out << YAML::Key << "build" << YAML::Value << YAML::DoubleQuoted << p.build_command;
  if (p.validate_command) out << YAML::Key << "validate" << YAML::Value << YAML::DoubleQuoted << *p.validate_command;

  out << YAML::Key << "launch" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(p.launch.kind));
  out << YAML::Key << "nodes" << YAML::Value << p.launch.nodes;
  out << YAML::Key << "ranks_per_node" << YAML::Value << p.launch.ranks_per_node;
  out << YAML::Key << "cores_per_rank" << YAML::Value << p.launch.cores_per_rank;
  out << YAML::Key << "command" << YAML::Value << YAML::DoubleQuoted << p.launch.command;
  if (!p.executable.empty()) out << YAML::Key << "exe" << YAML::Value << YAML::DoubleQuoted << p.executable;
  if (p.threads_param) out << YAML::Key << "threads_param" << YAML::Value << *p.threads_param;
  out << YAML::Key << "threads_scale" << YAML::Value << p.threads_scale;
  out << YAML::EndMap;

  out << YAML::Key << "geopm_report" << YAML::Value << YAML::DoubleQuoted << p.geopm_report;
  if (p.timeout_s) out << YAML::Key << "timeout_s" << YAML::Value << *p.timeout_s;
  out << YAML::Key << "keep_trial_dirs" << YAML::Value << p.keep_trial_dirs;

  out << YAML::Key << "forest" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_trees" << YAML::Value << p.forest.n_trees;
  out << YAML::Key << "min_samples_leaf" << YAML::Value << p.forest.min_samples_leaf;
  out << YAML::Key << "max_features" << YAML::Value;
  switch (p.forest.max_features.mode) {
    case MaxFeatures::Mode::all:
      out << "all";
      break;
    case MaxFeatures::Mode::third:
      out << "third";
      break;
    case MaxFeatures::Mode::count:
      out << p.forest.max_features.count;
      break;
  }
  out << YAML::Key << "bootstrap" << YAML::Value << p.forest.bootstrap;
  out << YAML::Key << "seed" << YAML::Value << p.forest.seed;
  out << YAML::EndMap;

  out << YAML::Key << "acquisition" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kappa" << YAML::Value << p.acquisition.kappa;
  out << YAML::Key << "n_initial_random" << YAML::Value << p.acquisition.n_initial_random;
  out << YAML::Key << "n_candidates_per_ask" << YAML::Value << p.acquisition.n_candidates_per_ask;
  out << YAML::EndMap;

  if (p.budget.max_evals || p.budget.wall_clock_limit_s) {
    out << YAML::Key << "budget" << YAML::Value << YAML::BeginMap;
    if (p.budget.max_evals) out << YAML::Key << "max_evals" << YAML::Value << *p.budget.max_evals;
    if (p.budget.wall_clock_limit_s) out << YAML::Key << "wall_clock_s" << YAML::Value << *p.budget.wall_clock_limit_s;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace tunekit
