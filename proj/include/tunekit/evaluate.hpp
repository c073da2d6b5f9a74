#pragma once

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/launch.hpp"
#include "tunekit/mold.hpp"
#include "tunekit/problem.hpp"
#include "tunekit/process.hpp"
#include "tunekit/record.hpp"
#include "tunekit/space.hpp"

namespace tunekit {

namespace detail {

// Leading real literal of s after optional whitespace, the way Perl numifies
// a string; nullopt when no digits are present.
inline std::optional<double> leading_number(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i < s.size() && s[i] == '+') ++i;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), value);
  if (ec != std::errc{}) {
    return std::nullopt;
  }
  return value;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

// Second field of a ": "-split line.
inline std::string_view field_after_colon(std::string_view line) {
  const auto at = line.find(": ");
  if (at == std::string_view::npos) {
    return {};
  }
  auto rest = line.substr(at + 2);
  const auto next = rest.find(": ");
  return next == std::string_view::npos ? rest : rest.substr(0, next);
}

}  // namespace detail

// Seconds from the first line mentioning "Runtime", e.g.
// "Runtime:     3.262 (seconds)".
inline double parse_runtime(std::string_view output) {
  for (auto line : detail::lines_of(output)) {
    if (line.find("Runtime") == std::string_view::npos) {
      continue;
    }
    const auto at = line.find(": ");
    if (at == std::string_view::npos) {
      throw ParseFailed("runtime line has no ': ' separator: " + std::string(line));
    }
    const auto value = detail::leading_number(line.substr(at + 2));
    if (!value || !std::isfinite(*value)) {
      throw ParseFailed("runtime line has no numeric field: " + std::string(line));
    }
    return *value;
  }
  throw ParseFailed("no Runtime line in application output");
}

struct NodeEnergy {
  double package_J = 0.0;
  double dram_J = 0.0;

  bool operator==(const NodeEnergy&) const = default;
};

struct EnergyReport {
  std::vector<NodeEnergy> nodes;

  std::size_t node_count() const { return nodes.size(); }
};

// Totals-section state machine of the GEOPM summary. Each "Application Totals"
// line flips the in-section flag and opens a new node entry. While the flag is
// set, every package-energy line adds to the node's package total and the
// first dram-energy line adds its value and clears the flag.
inline EnergyReport parse_geopm_report(std::string_view report) {
  EnergyReport out;
  bool in_totals = false;
  std::size_t line_no = 0;
  for (auto line : detail::lines_of(report)) {
    ++line_no;
    if (line.find("Application Totals") != std::string_view::npos) {
      in_totals = !in_totals;
      out.nodes.emplace_back();
    }
    if (!in_totals) {
      continue;
    }
    const bool package = line.find("package-energy") != std::string_view::npos;
    const bool dram = line.find("dram-energy") != std::string_view::npos;
    if (!package && !dram) {
      continue;
    }
    const auto value = detail::leading_number(detail::field_after_colon(line));
    if (!value || !std::isfinite(*value) || *value < 0.0) {
      throw ParseFailed("malformed energy value on report line " + std::to_string(line_no));
    }
    if (package) {
      out.nodes.back().package_J += *value;
    }
    if (dram) {
      out.nodes.back().dram_J += *value;
      in_totals = false;
    }
  }
  if (out.nodes.empty()) {
    throw ParseFailed("Wrong input file! (no Application Totals section)");
  }
  return out;
}

inline double total_node_energy(const EnergyReport& r) {
  double sum = 0.0;
  for (const auto& n : r.nodes) {
    sum += n.package_J + n.dram_J;
  }
  return sum;
}

inline double average_node_energy(const EnergyReport& r) {
  if (r.nodes.empty()) {
    throw Error("average_node_energy: report has no nodes");
  }
  return total_node_energy(r) / static_cast<double>(r.node_count());
}

// Energy-delay product in joule-seconds.
inline double edp(double energy_J, double runtime_s) { return energy_J * runtime_s; }

// Deterministic synthetic objective used for desk-scale runs. Over index
// coordinates it is
//
//   f = 1 + sum_ord 10 * w_i * ((x_i - t_i) / max(1, n_i - 1))^2
//         + sum_cat (x_i == c_i ? 0 : 0.5 + 0.25 * ((x_i - c_i) mod n_i))
//
// with w_i = 1 + 0.5 * i (i = parameter position), t_i = floor(2 (n_i - 1) / 3)
// and c_i = floor(n_i / 2). The unique minimizer puts every ordinal at t_i and
// every categorical at c_i, where f = 1.
inline IndexPoint simulated_minimizer(const ParamSpace& space) {
  IndexPoint idx(space.dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& p = space.parameters()[i];
    const auto n = static_cast<std::uint32_t>(p.values.size());
    idx[i] = p.kind == ParamKind::ordinal ? (2 * (n - 1)) / 3 : n / 2;
  }
  return idx;
}

inline double simulated_objective(const ParamSpace& space, const IndexPoint& idx) {
  const auto target = simulated_minimizer(space);
  double f = 1.0;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& p = space.parameters()[i];
    const auto n = static_cast<long>(p.values.size());
    const long x = idx[i];
    const long t = target[i];
    if (p.kind == ParamKind::ordinal) {
      const double u = static_cast<double>(x - t) / static_cast<double>(std::max(1L, n - 1));
      f += 10.0 * (1.0 + 0.5 * static_cast<double>(i)) * u * u;
    } else if (x != t) {
      f += 0.5 + 0.25 * static_cast<double>(((x - t) % n + n) % n);
    }
  }
  return f;
}

inline double simulated_evaluator(const ParamSpace& space, const Configuration& c) {
  return simulated_objective(space, space.to_indices(c));
}

inline TrialRecord simulated_trial(const ParamSpace& space, MetricKind metric, const Configuration& c,
                                   std::size_t trial_index) {
  TrialRecord r;
  r.trial_index = trial_index;
  r.configuration = c;
  r.metric = metric;
  r.value = simulated_evaluator(space, c);
  r.status = TrialStatus::ok;
  r.app_runtime_s = 0.0;
  return r;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

inline std::optional<std::filesystem::path> glob_first(const std::filesystem::path& dir, const std::string& pattern) {
  const std::string full = (dir / pattern).string();
  glob_t g{};
  std::optional<std::filesystem::path> out;
  if (::glob(full.c_str(), 0, nullptr, &g) == 0 && g.gl_pathc > 0) {
    out = g.gl_pathv[0];  // glob sorts its results
  }
  globfree(&g);
  return out;
}

inline std::size_t thread_count(const Problem& problem, const Configuration& c) {
  if (!problem.threads_param) {
    return 1;
  }
  const auto& text = c.at(*problem.threads_param);
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw LaunchError("thread parameter value '" + text + "' is not an integer");
  }
  return n * problem.threads_scale;
}

}  // namespace detail

inline std::filesystem::path trial_directory(const std::filesystem::path& scratch_root, std::size_t trial_index) {
  return scratch_root / std::to_string(trial_index);
}

// One end-to-end trial: render molds, build, launch, parse. Every failure is
// reported through the record's status; nothing escapes. The trial directory
// is removed after a successful trial unless the problem keeps it.
inline TrialRecord evaluate_trial(const Problem& problem, const Configuration& c, std::size_t trial_index,
                                  const std::filesystem::path& scratch_root,
                                  std::optional<double> timeout_s = std::nullopt) noexcept {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  TrialRecord r;
  r.trial_index = trial_index;
  r.configuration = c;
  r.metric = problem.metric;
  const auto finish = [&](TrialStatus status, std::string detail) {
    r.status = status;
    r.detail = std::move(detail);
    if (status != TrialStatus::ok) r.value.reset();
    r.elapsed_total_s = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
  };

  if (problem.evaluator == EvaluatorKind::simulated) {
    try {
      r = simulated_trial(problem.space, problem.metric, c, trial_index);
      return finish(TrialStatus::ok, {});
    } catch (const std::exception& e) {
      return finish(TrialStatus::run_failed, e.what());
    }
  }

  const auto dir = trial_directory(scratch_root, trial_index);
  try {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    for (const auto& mold : problem.molds) {
      render_file({problem.resolve(mold.source), mold.destination}, c, dir);
    }
  } catch (const std::exception& e) {
    return finish(TrialStatus::compile_failed, std::string("render: ") + e.what());
  }

  try {
    const std::map<std::string, std::string> build_env{{"TUNEKIT_PROBLEM_DIR", problem.base_dir.string()}};
    if (!problem.build_command.empty()) {
      const auto build = run_shell(problem.build_command, build_env, dir, dir / "build.log");
      r.compile_time_s = build.wall_s;
      if (build.exit_code != 0) {
        return finish(TrialStatus::compile_failed, "build exited with code " + std::to_string(build.exit_code));
      }
    }

    LaunchPlan plan;
    const std::string report = problem.report_name(trial_index);
    try {
      plan = build_plan(problem.launch, detail::thread_count(problem, c), bind_env(problem.env, c),
                        problem.executable, report);
    } catch (const std::exception& e) {
      return finish(TrialStatus::run_failed, std::string("launch plan: ") + e.what());
    }
    if (problem.threads_param) {
      plan.env.emplace("OMP_NUM_THREADS", std::to_string(detail::thread_count(problem, c)));
    }
    plan.env.emplace("TUNEKIT_TRIAL", std::to_string(trial_index));
    plan.env.emplace("TUNEKIT_REPORT", report);

    const auto run = run_process(plan.argv, plan.env, dir, dir / "out.txt", timeout_s);
    if (run.timed_out) {
      return finish(TrialStatus::timeout, "run exceeded " + std::to_string(timeout_s.value_or(0.0)) + " s");
    }
    if (run.exit_code != 0) {
      return finish(TrialStatus::run_failed, "run exited with code " + std::to_string(run.exit_code));
    }
    r.app_runtime_s = run.wall_s;

    if (problem.validate_command) {
      const auto check = run_shell(*problem.validate_command, plan.env, dir, dir / "validate.log");
      if (check.exit_code != 0) {
        return finish(TrialStatus::run_failed, "validation exited with code " + std::to_string(check.exit_code));
      }
    }

    const std::string output = read_text(dir / "out.txt");
    std::optional<double> parsed_runtime;
    try {
      parsed_runtime = parse_runtime(output);
      r.app_runtime_s = parsed_runtime;
    } catch (const ParseFailed&) {
      if (problem.metric != MetricKind::node_energy_J) {
        throw;
      }
    }

    double value = 0.0;
    if (problem.metric == MetricKind::runtime_s) {
      value = *parsed_runtime;
    } else {
      const auto report_path = detail::glob_first(dir, report);
      if (!report_path) {
        throw ParseFailed("no GEOPM report matching " + report);
      }
      const double energy = average_node_energy(parse_geopm_report(read_text(*report_path)));
      value = problem.metric == MetricKind::node_energy_J ? energy : edp(energy, *parsed_runtime);
    }
    if (!std::isfinite(value)) {
      throw ParseFailed("metric is not finite");
    }
    r.value = value;
  } catch (const ParseFailed& e) {
    return finish(TrialStatus::parse_failed, e.what());
  } catch (const std::exception& e) {
    return finish(TrialStatus::run_failed, e.what());
  }

  finish(TrialStatus::ok, {});
  if (!problem.keep_trial_dirs) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  return r;
}

}  // namespace tunekit
