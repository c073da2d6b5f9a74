#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunekit/evaluate.hpp"
#include "tunekit/optimizer.hpp"
#include "tunekit/problem.hpp"
#include "tunekit/problem_file.hpp"
#include "tunekit/store.hpp"

namespace tunekit {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRefused = 3;

inline constexpr std::size_t kDefaultMaxEvals = 200;
// Live (pipeline) problems are only enumerated up to this many configurations.
inline constexpr std::uint64_t kLiveEnumerateCap = 16;

// Output layout of an --out directory.
struct OutputFiles {
  std::filesystem::path dir;

  std::filesystem::path log() const { return dir / "trials.jsonl"; }
  std::filesystem::path csv() const { return dir / "results.csv"; }
  std::filesystem::path plot() const { return dir / "plot.tsv"; }
  std::filesystem::path baseline() const { return dir / "baseline.json"; }
  std::filesystem::path scratch() const { return dir / "trials"; }
};

inline std::string describe(const Configuration& c) {
  std::string out;
  for (const auto& [name, value] : c.assignments()) {
    if (!out.empty()) out += ", ";
    out += name + "='" + value + "'";
  }
  return out;
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline Evaluator make_evaluator(const Problem& problem, const std::filesystem::path& scratch) {
  if (problem.evaluator == EvaluatorKind::simulated) {
    return [&problem](const Configuration& c, std::size_t index) {
      return simulated_trial(problem.space, problem.metric, c, index);
    };
  }
  return [&problem, scratch](const Configuration& c, std::size_t index) {
    return evaluate_trial(problem, c, index, scratch, problem.timeout_s);
  };
}

struct RunOptions {
  std::filesystem::path problem;
  std::optional<std::size_t> max_evals;
  std::optional<std::uint64_t> seed;
  std::string learner = "rf";
  std::filesystem::path out = "tunekit-out";
};

struct RunResult {
  int exit_code = kExitOk;
  std::optional<SearchOutcome> outcome;
};

inline RunResult cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.learner != "rf") {
    err << "error: unsupported learner '" << opt.learner << "' (only rf is available)\n";
    return {kExitUsage, std::nullopt};
  }
  Problem problem;
  try {
    problem = load_problem(opt.problem);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return {kExitUsage, std::nullopt};
  }

  SearchBudget budget = problem.budget;
  if (opt.max_evals) budget.max_evals = opt.max_evals;
  if (!budget.max_evals && !budget.wall_clock_limit_s) budget.max_evals = kDefaultMaxEvals;
  const std::uint64_t seed = opt.seed.value_or(problem.space.seed());

  const OutputFiles files{opt.out};
  LogMetadata meta;
  meta.problem = problem.name;
  meta.seed = seed;
  meta.space_fingerprint = space_fingerprint(problem.space);
  meta.space_cardinality = problem.space.cardinality();
  for (const auto& p : problem.space.parameters()) meta.parameter_names.push_back(p.name);
  meta.max_evals = budget.max_evals;
  meta.wall_clock_limit_s = budget.wall_clock_limit_s;
  meta.metric = problem.metric;
  meta.launcher = problem.evaluator == EvaluatorKind::simulated ? "simulated" : std::string(to_string(problem.launch.kind));

  std::filesystem::create_directories(files.dir);
  auto log = TrialLog::create(files.log(), meta);
  auto outcome = run_search(problem.space, seed, budget, problem.acquisition, problem.forest,
                            make_evaluator(problem, files.scratch()),
                            [&](const TrialRecord& r) { log.append(r); });

  const auto& records = log.records();
  write_text(files.csv(), to_csv(meta.parameter_names, records));
  write_text(files.plot(), to_plot_tsv(records));

  out << "problem: " << problem.name << "\n";
  out << "trials: " << records.size() << "\n";
  out << "stopped by: " << to_string(outcome.reason) << "\n";
  if (const auto b = best(records)) {
    out << "best value: " << format_number(*b->value) << " (" << to_string(problem.metric) << ")\n";
    out << "best configuration: " << describe(b->configuration) << "\n";
  } else {
    err << "warning: no trial succeeded\n";
  }
  out << "log: " << files.log().string() << "\n";
  return {kExitOk, std::move(outcome)};
}

// Smallest successful value over repeated default-configuration runs.
inline std::optional<double> baseline_of(const std::vector<std::optional<double>>& runs) {
  std::optional<double> out;
  for (const auto& v : runs) {
    if (v && (!out || *v < *out)) out = v;
  }
  return out;
}

struct BaselineOptions {
  std::filesystem::path problem;
  std::size_t repeats = 5;
  std::filesystem::path out = "tunekit-out";
};

inline int cmd_baseline(const BaselineOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.repeats < 1) {
    err << "error: --repeats must be at least 1\n";
    return kExitUsage;
  }
  Problem problem;
  try {
    problem = load_problem(opt.problem);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  const OutputFiles files{opt.out};
  const auto scratch = files.dir / "baseline";
  const auto config = problem.space.default_configuration();
  std::vector<std::optional<double>> runs;
  nlohmann::json runs_json = nlohmann::json::array();
  for (std::size_t i = 0; i < opt.repeats; ++i) {
    const auto r = evaluate_trial(problem, config, i, scratch, problem.timeout_s);
    runs.push_back(r.ok() ? r.value : std::nullopt);
    runs_json.push_back(r.ok() ? nlohmann::json(*r.value) : nlohmann::json(nullptr));
    out << "run " << i << ": " << (r.ok() ? format_number(*r.value) : std::string(to_string(r.status))) << "\n";
  }
  const auto base = baseline_of(runs);
  if (!base) {
    err << "error: every baseline run failed\n";
    return kExitFailed;
  }
  std::filesystem::create_directories(files.dir);
  write_text(files.baseline(), nlohmann::json{{"problem", problem.name},
                                              {"metric", std::string(to_string(problem.metric))},
                                              {"configuration", describe(config)},
                                              {"runs", runs_json},
                                              {"baseline", *base}}
                                   .dump(2) +
                                   "\n");
  out << "baseline: " << format_number(*base) << "\n";
  return kExitOk;
}

inline std::optional<double> read_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in).at("baseline").get<double>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Which budget ended a logged search. Evaluation count and cardinality are
// exact; a search with a wall-clock limit that reached neither ended on time.
inline std::string stop_reason(const TrialLog& log) {
  const auto& m = log.metadata();
  const auto n = log.size();
  if (m.max_evals && n >= *m.max_evals) return std::string(to_string(StopReason::max_evals));
  if (m.space_cardinality && n >= *m.space_cardinality) return std::string(to_string(StopReason::space_exhausted));
  if (m.wall_clock_limit_s) return std::string(to_string(StopReason::wall_clock));
  return "interrupted";
}

inline std::string format_report(const TrialLog& log, std::optional<double> baseline) {
  std::ostringstream out;
  const auto& records = log.records();
  const auto ok = std::count_if(records.begin(), records.end(), [](const TrialRecord& r) { return r.ok(); });
  out << "problem: " << log.metadata().problem << "\n";
  out << "trials: " << records.size() << " (" << ok << " ok)\n";
  out << "stopped by: " << stop_reason(log) << "\n";
  const auto b = best(records);
  if (!b) {
    out << "best: none (no successful trial)\n";
    return out.str();
  }
  out << "best value: " << format_number(*b->value) << " (" << to_string(log.metadata().metric) << ")\n";
  out << "best configuration: " << describe(b->configuration) << "\n";
  if (baseline) {
    out << "baseline: " << format_number(*baseline) << "\n";
    out << "improvement: " << fixed2(improvement_pct(*baseline, *b->value)) << "%\n";
  } else {
    out << "baseline: none (run the baseline command to compare)\n";
  }
  double sum = 0.0;
  double peak = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (const auto o = overhead(r)) {
      sum += *o;
      peak = n == 0 ? *o : std::max(peak, *o);
      ++n;
    }
  }
  if (n > 0) {
    out << "overhead: mean " << fixed2(sum / static_cast<double>(n)) << " s, max " << fixed2(peak) << " s\n";
  }
  return out.str();
}

struct ReportOptions {
  std::filesystem::path out = "tunekit-out";
  std::optional<double> baseline;
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  const OutputFiles files{opt.out};
  try {
    auto loaded = TrialLog::load(files.log());
    if (loaded.truncated) {
      err << "warning: dropped an incomplete tail record from " << files.log().string() << "\n";
    }
    if (loaded.log.size() == 0) {
      err << "error: the log holds no trials\n";
      return kExitFailed;
    }
    const auto baseline = opt.baseline ? opt.baseline : read_baseline(files.baseline());
    if (baseline && !(*baseline > 0.0)) {
      err << "error: baseline must be positive\n";
      return kExitUsage;
    }
    out << format_report(loaded.log, baseline);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitOk;
}

struct EnumerateRow {
  Configuration configuration;
  std::optional<double> value;
};

// Evaluates every configuration; rows come back sorted by value (failures
// last, enumeration order among equals).
inline std::vector<EnumerateRow> enumerate_table(const Problem& problem, std::uint64_t cap,
                                                 const std::filesystem::path& scratch) {
  if (problem.evaluator == EvaluatorKind::pipeline && problem.space.cardinality() > kLiveEnumerateCap) {
    throw CapExceeded("refusing to enumerate " + std::to_string(problem.space.cardinality()) +
                      " live configurations (limit " + std::to_string(kLiveEnumerateCap) + ")");
  }
  std::vector<EnumerateRow> rows;
  const auto evaluate = make_evaluator(problem, scratch);
  std::size_t index = 0;
  problem.space.for_each_indices(cap, [&](const IndexPoint& idx) {
    auto c = problem.space.from_indices(idx);
    const auto r = evaluate(c, index++);
    rows.push_back({std::move(c), r.ok() ? r.value : std::nullopt});
  });
  std::stable_sort(rows.begin(), rows.end(), [](const EnumerateRow& a, const EnumerateRow& b) {
    if (!a.value || !b.value) return a.value.has_value() && !b.value.has_value();
    return *a.value < *b.value;
  });
  return rows;
}

struct EnumerateOptions {
  std::filesystem::path problem;
  std::uint64_t cap = 10000;
  std::optional<std::filesystem::path> out;  // scratch for live problems
};

inline int cmd_enumerate(const EnumerateOptions& opt, std::ostream& out, std::ostream& err) {
  Problem problem;
  try {
    problem = load_problem(opt.problem);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<EnumerateRow> rows;
  try {
    rows = enumerate_table(problem, opt.cap, OutputFiles{opt.out.value_or("tunekit-out")}.scratch());
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitRefused;
  }
  out << "value";
  for (const auto& p : problem.space.parameters()) out << '\t' << p.name;
  out << '\n';
  for (const auto& row : rows) {
    out << (row.value ? format_number(*row.value) : std::string("failed"));
    for (const auto& [name, value] : row.configuration.assignments()) out << '\t' << value;
    out << '\n';
  }
  return kExitOk;
}

}  // namespace tunekit
