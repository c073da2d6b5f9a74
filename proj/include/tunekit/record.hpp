#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "tunekit/error.hpp"
#include "tunekit/space.hpp"

namespace tunekit {

enum class MetricKind { runtime_s, node_energy_J, edp_Js };

enum class TrialStatus { ok, compile_failed, run_failed, timeout, parse_failed };

inline std::string_view to_string(MetricKind m) {
  switch (m) {
    case MetricKind::runtime_s:
      return "runtime_s";
    case MetricKind::node_energy_J:
      return "node_energy_J";
    case MetricKind::edp_Js:
      return "edp_Js";
  }
  return "?";
}

inline std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ok:
      return "ok";
    case TrialStatus::compile_failed:
      return "compile_failed";
    case TrialStatus::run_failed:
      return "run_failed";
    case TrialStatus::timeout:
      return "timeout";
    case TrialStatus::parse_failed:
      return "parse_failed";
  }
  return "?";
}

inline MetricKind metric_from_string(std::string_view s) {
  if (s == "runtime_s" || s == "runtime") return MetricKind::runtime_s;
  if (s == "node_energy_J" || s == "energy") return MetricKind::node_energy_J;
  if (s == "edp_Js" || s == "edp") return MetricKind::edp_Js;
  throw Error("unknown metric '" + std::string(s) + "'");
}

inline TrialStatus status_from_string(std::string_view s) {
  if (s == "ok") return TrialStatus::ok;
  if (s == "compile_failed") return TrialStatus::compile_failed;
  if (s == "run_failed") return TrialStatus::run_failed;
  if (s == "timeout") return TrialStatus::timeout;
  if (s == "parse_failed") return TrialStatus::parse_failed;
  throw Error("unknown trial status '" + std::string(s) + "'");
}

// Clock jitter allowed between the summed stage timings and the total.
inline constexpr double kClockTolerance = 0.05;

struct TrialRecord {
  std::size_t trial_index = 0;
  Configuration configuration;
  MetricKind metric = MetricKind::runtime_s;
  std::optional<double> value;  // absent unless status == ok
  TrialStatus status = TrialStatus::ok;
  double compile_time_s = 0.0;
  std::optional<double> app_runtime_s;
  double elapsed_total_s = 0.0;
  std::string started_at;   // ISO-8601 UTC
  double wall_clock_s = 0.0;  // search start to trial completion
  std::string detail;       // diagnostic for failed stages

  bool ok() const { return status == TrialStatus::ok && value && std::isfinite(*value); }

  bool operator==(const TrialRecord&) const = default;
};

// Per-trial time spent outside the application and its compilation.
// Undefined (nullopt) when the application runtime is unknown.
inline std::optional<double> overhead(const TrialRecord& r) {
  if (!r.app_runtime_s) {
    return std::nullopt;
  }
  const double raw = r.elapsed_total_s - *r.app_runtime_s - r.compile_time_s;
  if (raw < 0.0 && raw >= -kClockTolerance) {
    return 0.0;
  }
  return raw;
}

}  // namespace tunekit
