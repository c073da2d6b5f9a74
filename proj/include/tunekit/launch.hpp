#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/mold.hpp"

namespace tunekit {

enum class LauncherKind { theta_aprun, summit_jsrun_gpu, summit_jsrun_cpu, geopm_aprun, local_shell };

inline std::string_view to_string(LauncherKind k) {
  switch (k) {
    case LauncherKind::theta_aprun:
      return "theta_aprun";
    case LauncherKind::summit_jsrun_gpu:
      return "summit_jsrun_gpu";
    case LauncherKind::summit_jsrun_cpu:
      return "summit_jsrun_cpu";
    case LauncherKind::geopm_aprun:
      return "geopm_aprun";
    case LauncherKind::local_shell:
      return "local_shell";
  }
  return "?";
}

inline LauncherKind launcher_from_string(std::string_view s) {
  if (s == "theta_aprun") return LauncherKind::theta_aprun;
  if (s == "summit_jsrun_gpu") return LauncherKind::summit_jsrun_gpu;
  if (s == "summit_jsrun_cpu") return LauncherKind::summit_jsrun_cpu;
  if (s == "geopm_aprun") return LauncherKind::geopm_aprun;
  if (s == "local_shell") return LauncherKind::local_shell;
  throw LaunchError("unknown launcher kind '" + std::string(s) + "'");
}

struct LaunchSpec {
  LauncherKind kind = LauncherKind::local_shell;
  std::size_t nodes = 1;
  std::size_t ranks_per_node = 1;
  std::size_t cores_per_rank = 42;
  // Whitespace-separated; "{exe}" is replaced by the executable path.
  // Double quotes group a token.
  std::string command = "{exe}";

  bool operator==(const LaunchSpec&) const = default;
};

struct LaunchPlan {
  std::vector<std::string> argv;
  EnvMap env;
  std::optional<std::string> report;  // GEOPM report file the run will write

  std::string command_line() const {
    std::string out;
    for (const auto& a : argv) {
      if (!out.empty()) {
        out += ' ';
      }
      out += a;
    }
    return out;
  }
};

struct DepthMap {
  std::size_t depth = 0;
  std::size_t hw_threads_per_core = 0;

  bool operator==(const DepthMap&) const = default;
};

// aprun -d/-j selection on 64-core nodes with up to 4 hardware threads per core.
inline DepthMap theta_depth_map(std::size_t n_threads) {
  if (n_threads == 0 || n_threads > 256) {
    throw LaunchError("invalid thread count " + std::to_string(n_threads) + ": must lie in [1, 256]");
  }
  std::size_t j = 1;
  if (n_threads > 192) {
    j = 4;
  } else if (n_threads > 128) {
    j = 3;
  } else if (n_threads > 64) {
    j = 2;
  }
  if (n_threads % j != 0) {
    throw LaunchError("invalid thread count " + std::to_string(n_threads) + ": not divisible by " +
                      std::to_string(j));
  }
  return {n_threads / j, j};
}

inline std::vector<std::string> split_command(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  bool in_token = false;
  bool quoted = false;
  for (char ch : text) {
    if (ch == '"') {
      quoted = !quoted;
      in_token = true;
    } else if (!quoted && (ch == ' ' || ch == '\t' || ch == '\n')) {
      if (in_token) {
        tokens.push_back(std::move(current));
        current.clear();
        in_token = false;
      }
    } else {
      current += ch;
      in_token = true;
    }
  }
  if (quoted) {
    throw LaunchError("unbalanced quote in command template");
  }
  if (in_token) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

inline std::vector<std::string> expand_command(const LaunchSpec& spec, const std::string& exe) {
  auto tokens = split_command(spec.command);
  for (auto& t : tokens) {
    std::size_t at = 0;
    while ((at = t.find("{exe}", at)) != std::string::npos) {
      t.replace(at, 5, exe);
      at += exe.size();
    }
  }
  if (tokens.empty()) {
    throw LaunchError("empty command template");
  }
  return tokens;
}

// Renders the launcher argv for one evaluation. report names the GEOPM report
// file and is only used by geopm_aprun.
inline LaunchPlan build_plan(const LaunchSpec& spec, std::size_t n_threads, const EnvMap& env,
                             const std::string& exe, const std::string& report = "gm.report") {
  if (spec.nodes < 1 || spec.ranks_per_node < 1) {
    throw LaunchError("nodes and ranks_per_node must be at least 1");
  }
  for (const auto& [name, value] : env) {
    if (value.empty()) {
      throw LaunchError("environment variable " + name + " would be empty");
    }
  }

  LaunchPlan plan;
  plan.env = env;
  auto& argv = plan.argv;
  const auto ranks = std::to_string(spec.nodes * spec.ranks_per_node);
  const auto rpn = std::to_string(spec.ranks_per_node);

  const auto packed = [&] {
    if (n_threads == 0 || n_threads % 4 != 0) {
      throw LaunchError("invalid thread count " + std::to_string(n_threads) + ": jsrun needs a multiple of 4");
    }
    return "-bpacked:" + std::to_string(n_threads / 4);
  };

  switch (spec.kind) {
    case LauncherKind::theta_aprun: {
      const auto dm = theta_depth_map(n_threads);
      argv = {"aprun", "-n", ranks, "-N", rpn, "-cc", "depth", "-d", std::to_string(dm.depth), "-j",
              std::to_string(dm.hw_threads_per_core)};
      break;
    }
    case LauncherKind::geopm_aprun:
      theta_depth_map(n_threads);
      argv = {"geopmlaunch", "aprun", "-n", ranks, "-N", rpn, "--geopm-ctl=pthread", "--geopm-report", report, "--"};
      plan.env["OMP_NUM_THREADS"] = std::to_string(n_threads);
      plan.report = report;
      break;
    case LauncherKind::summit_jsrun_gpu:
      argv = {"jsrun", "-n", std::to_string(spec.nodes), "-a", "6", "-g", "6", "-c",
              std::to_string(spec.cores_per_rank), packed(), "-dpacked"};
      break;
    case LauncherKind::summit_jsrun_cpu:
      argv = {"jsrun", "-n", std::to_string(spec.nodes), "-a", "1", "-g", "0", "-c",
              std::to_string(spec.cores_per_rank), packed(), "-dpacked"};
      break;
    case LauncherKind::local_shell:
      break;
    default:
      throw LaunchError("unknown launcher kind");
  }
  for (auto& token : expand_command(spec, exe)) {
    argv.push_back(std::move(token));
  }
  return plan;
}

}  // namespace tunekit
