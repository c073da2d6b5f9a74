#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "tunekit/commands.hpp"

using namespace tunekit;
using testing_fixtures::problems_dir;
using testing_fixtures::TempDir;

namespace {

// CSV body without the wall-clock column.
std::string deterministic_columns(const std::string& csv) {
  std::string out;
  for (auto row : testing_fixtures::read_csv(csv)) {
    row.pop_back();
    for (const auto& f : row) out += csv_field(f) + ",";
    out += "\n";
  }
  return out;
}

TrialRecord ok(std::size_t i, double v) {
  TrialRecord r;
  r.trial_index = i;
  r.configuration = Configuration({{"p0", "4"}});
  r.value = v;
  return r;
}

}  // namespace

TEST(Commands, RunIsDeterministic) {
  TempDir dir("cmd-run");
  std::ostringstream out;
  std::ostringstream err;
  RunOptions opt;
  opt.problem = problems_dir() / "sim_bench.yaml";
  opt.max_evals = 25;
  opt.seed = 11;
  opt.out = dir.path() / "a";
  ASSERT_EQ(cmd_run(opt, out, err).exit_code, kExitOk) << err.str();
  opt.out = dir.path() / "b";
  ASSERT_EQ(cmd_run(opt, out, err).exit_code, kExitOk) << err.str();
  const auto a = read_text(dir.path() / "a" / "results.csv");
  const auto b = read_text(dir.path() / "b" / "results.csv");
  EXPECT_EQ(deterministic_columns(a), deterministic_columns(b));
  EXPECT_EQ(testing_fixtures::read_csv(a).size(), 26u);
}

TEST(Commands, RunSingleEvaluation) {
  TempDir dir("cmd-one");
  std::ostringstream out;
  std::ostringstream err;
  RunOptions opt;
  opt.problem = problems_dir() / "sim30.yaml";
  opt.max_evals = 1;
  opt.out = dir.path();
  ASSERT_EQ(cmd_run(opt, out, err).exit_code, kExitOk);
  EXPECT_EQ(TrialLog::load(dir.path() / "trials.jsonl").log.size(), 1u);
}

TEST(Commands, RunMissingProblemWritesNothing) {
  TempDir dir("cmd-missing");
  std::ostringstream out;
  std::ostringstream err;
  RunOptions opt;
  opt.problem = dir.path() / "nope.yaml";
  opt.out = dir.path() / "out";
  EXPECT_NE(cmd_run(opt, out, err).exit_code, kExitOk);
  EXPECT_FALSE(std::filesystem::exists(opt.out));
  opt.problem = problems_dir() / "sim30.yaml";
  opt.learner = "gp";
  EXPECT_EQ(cmd_run(opt, out, err).exit_code, kExitUsage);
  EXPECT_NE(err.str().find("unsupported learner"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(opt.out));
}

TEST(Commands, BaselineIsMinimumOfRepeats) {
  EXPECT_EQ(baseline_of({3.40, 3.31, 3.35, 3.50, 3.60}), 3.31);
  EXPECT_EQ(baseline_of({2.5}), 2.5);
  EXPECT_EQ(baseline_of({std::nullopt, 4.0}), 4.0);
  EXPECT_FALSE(baseline_of({std::nullopt}).has_value());

  TempDir dir("cmd-baseline");
  std::ostringstream out;
  std::ostringstream err;
  BaselineOptions opt;
  opt.problem = problems_dir() / "sim30.yaml";
  opt.out = dir.path();
  ASSERT_EQ(cmd_baseline(opt, out, err), kExitOk) << err.str();
  const auto space = testing_fixtures::sim30_space();
  EXPECT_EQ(read_baseline(dir.path() / "baseline.json"),
            simulated_evaluator(space, space.default_configuration()));
}

TEST(Commands, ReportFormatsImprovement) {
  LogMetadata meta;
  meta.problem = "r";
  TrialLog log(meta);
  log.append(ok(0, 20.0));
  log.append(ok(1, 14.427));
  EXPECT_NE(format_report(log, 171.595).find("improvement: 91.59%"), std::string::npos);
  TrialLog energy(meta);
  energy.append(ok(0, 2280.806));
  EXPECT_NE(format_report(energy, 2494.905).find("improvement: 8.58%"), std::string::npos);
  EXPECT_NE(format_report(energy, 2280.806).find("improvement: 0.00%"), std::string::npos);
  EXPECT_NE(format_report(energy, std::nullopt).find("baseline: none"), std::string::npos);
}

TEST(Commands, ReportNamesStoppingLimit) {
  LogMetadata meta;
  meta.problem = "r";
  const auto reason = [](const LogMetadata& m, std::size_t trials) {
    TrialLog log(m);
    for (std::size_t i = 0; i < trials; ++i) log.append(ok(i, 1.0 + double(i)));
    return stop_reason(log);
  };
  meta.max_evals = 3;
  EXPECT_EQ(reason(meta, 3), "max_evals");
  meta.space_cardinality = 2;
  EXPECT_EQ(reason(meta, 2), "space_exhausted");
  meta.space_cardinality = 30;
  EXPECT_EQ(reason(meta, 2), "interrupted");
  meta.wall_clock_limit_s = 5.0;
  EXPECT_EQ(reason(meta, 2), "wall_clock");

  TempDir dir("report-stop");
  std::ostringstream out;
  std::ostringstream err;
  RunOptions opt;
  opt.problem = problems_dir() / "sim30.yaml";
  opt.max_evals = 100;
  opt.out = dir.path();
  ASSERT_EQ(cmd_run(opt, out, err).exit_code, kExitOk) << err.str();
  out.str("");
  ASSERT_EQ(cmd_report(ReportOptions{dir.path(), std::nullopt}, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("stopped by: space_exhausted"), std::string::npos) << out.str();
}

TEST(Commands, EnumerateSortedAndRefusesOverCap) {
  const auto problem = load_problem(problems_dir() / "sim30.yaml");
  const auto rows = enumerate_table(problem, 30, "unused");
  ASSERT_EQ(rows.size(), 30u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(*rows[i - 1].value, *rows[i].value);
  EXPECT_EQ(*rows.front().value, 1.0);
  EXPECT_THROW(enumerate_table(problem, 10, "unused"), CapExceeded);

  std::ostringstream out;
  std::ostringstream err;
  EnumerateOptions opt;
  opt.problem = problems_dir() / "sim30.yaml";
  opt.cap = 10;
  EXPECT_EQ(cmd_enumerate(opt, out, err), kExitRefused);
  const auto live = load_problem(problems_dir() / "toy_local/problem.yaml");
  EXPECT_THROW(enumerate_table(live, 1000, "unused"), CapExceeded);
}
