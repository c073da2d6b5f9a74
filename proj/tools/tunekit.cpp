#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tunekit/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tunekit: Bayesian-optimization autotuner with a random-forest surrogate"};
  app.require_subcommand(1);

  tunekit::RunOptions run;
  std::size_t max_evals = 0;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "search the problem's parameter space");
  run_cmd->add_option("--problem", run.problem, "problem file")->required();
  auto* max_evals_opt = run_cmd->add_option("--max-evals", max_evals, "evaluation budget")->check(CLI::PositiveNumber);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "search seed (defaults to the space seed)");
  run_cmd->add_option("--learner", run.learner, "surrogate learner")->capture_default_str();
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();

  tunekit::BaselineOptions baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "measure the default configuration");
  baseline_cmd->add_option("--problem", baseline.problem, "problem file")->required();
  baseline_cmd->add_option("--repeats", baseline.repeats, "number of runs")->capture_default_str();
  baseline_cmd->add_option("--out", baseline.out, "output directory")->capture_default_str();

  tunekit::ReportOptions report;
  double baseline_value = 0.0;
  auto* report_cmd = app.add_subcommand("report", "summarize a finished search");
  report_cmd->add_option("--out", report.out, "output directory of a run")->capture_default_str();
  auto* baseline_opt = report_cmd->add_option("--baseline", baseline_value, "baseline value (overrides baseline.json)");

  tunekit::EnumerateOptions enumerate;
  auto* enumerate_cmd = app.add_subcommand("enumerate", "evaluate every configuration (oracle)");
  enumerate_cmd->add_option("--problem", enumerate.problem, "problem file")->required();
  enumerate_cmd->add_option("--cap", enumerate.cap, "refuse spaces larger than this")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      if (*max_evals_opt) run.max_evals = max_evals;
      if (*seed_opt) run.seed = seed;
      return tunekit::cmd_run(run, std::cout, std::cerr).exit_code;
    }
    if (*baseline_cmd) {
      return tunekit::cmd_baseline(baseline, std::cout, std::cerr);
    }
    if (*report_cmd) {
      if (*baseline_opt) report.baseline = baseline_value;
      return tunekit::cmd_report(report, std::cout, std::cerr);
    }
    if (*enumerate_cmd) {
      return tunekit::cmd_enumerate(enumerate, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tunekit::kExitFailed;
  }
  return tunekit::kExitUsage;
}
