#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunekit/launch.hpp"
#include "tunekit/mold.hpp"
#include "tunekit/optimizer.hpp"
#include "tunekit/record.hpp"
#include "tunekit/space.hpp"
#include "tunekit/surrogate.hpp"

namespace tunekit {

enum class EvaluatorKind { simulated, pipeline };

inline std::string_view to_string(EvaluatorKind k) { return k == EvaluatorKind::simulated ? "simulated" : "pipeline"; }

// Everything needed to tune one application. Relative mold sources resolve
// against base_dir (the problem file's directory); everything else that names
// a file is relative to the per-trial directory.
struct Problem {
  std::string name;
  std::filesystem::path base_dir;
  EvaluatorKind evaluator = EvaluatorKind::simulated;
  MetricKind metric = MetricKind::runtime_s;
  ParamSpace space;
  std::vector<MoldFile> molds;
  EnvBinding env;
  std::string build_command;
  std::optional<std::string> validate_command;
  LaunchSpec launch;
  std::string executable;
  std::optional<std::string> threads_param;
  std::size_t threads_scale = 1;
  // Glob for the GEOPM report inside the trial directory; "{trial}" expands
  // to the trial index.
  std::string geopm_report = "gm.{trial}.report";
  std::optional<double> timeout_s;
  bool keep_trial_dirs = false;
  ForestParams forest;
  AcquisitionSettings acquisition;
  SearchBudget budget;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }

  std::string report_name(std::size_t trial_index) const {
    std::string out = geopm_report;
    const std::string key = "{trial}";
    std::size_t at = 0;
    while ((at = out.find(key, at)) != std::string::npos) {
      const auto idx = std::to_string(trial_index);
      out.replace(at, key.size(), idx);
      at += idx.size();
    }
    return out;
  }

  bool operator==(const Problem&) const = default;
};

}  // namespace tunekit
