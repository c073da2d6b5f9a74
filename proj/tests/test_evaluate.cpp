#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "fixtures.hpp"
#include "tunekit/evaluate.hpp"

using namespace tunekit;
using testing_fixtures::TempDir;

namespace {

const char* kOneNode =
    "##### geopm 1.1.0 #####\n"
    "Host: nid00001\n"
    "Region hot:\n"
    "    package-energy (joules): 999\n"
    "Application Totals:\n"
    "    runtime (sec): 3.1\n"
    "    package-energy (joules): 2200\n"
    "    dram-energy (joules): 280\n";

const char* kTwoNodes =
    "Host: nid00001\n"
    "Application Totals:\n"
    "    package-energy (joules): 2200\n"
    "    dram-energy (joules): 280\n"
    "Host: nid00002\n"
    "Application Totals:\n"
    "    package-energy (joules): 2300\n"
    "    dram-energy (joules): 210\n";

}  // namespace

TEST(Runtime, ParsesReportedSeconds) {
  EXPECT_EQ(parse_runtime("Lookups: 100\nRuntime:     3.262 (seconds)\n"), 3.262);
  EXPECT_EQ(parse_runtime("Runtime: 1.5"), 1.5);
  EXPECT_EQ(parse_runtime("Runtime: 2e-3 s\nRuntime: 9"), 2e-3);
}

TEST(Runtime, FailsWithoutNumber) {
  EXPECT_THROW(parse_runtime(""), ParseFailed);
  EXPECT_THROW(parse_runtime("no timing here\n"), ParseFailed);
  EXPECT_THROW(parse_runtime("Runtime: fast\n"), ParseFailed);
  EXPECT_THROW(parse_runtime("Runtime 3.2\n"), ParseFailed);
}

TEST(Geopm, SingleNodeTotals) {
  const auto r = parse_geopm_report(kOneNode);
  ASSERT_EQ(r.node_count(), 1u);
  EXPECT_EQ(r.nodes[0].package_J, 2200.0);
  EXPECT_EQ(r.nodes[0].dram_J, 280.0);
  EXPECT_EQ(average_node_energy(r), 2480.0);
}

TEST(Geopm, AveragesOverNodes) {
  const auto r = parse_geopm_report(kTwoNodes);
  ASSERT_EQ(r.node_count(), 2u);
  EXPECT_EQ(total_node_energy(r), 4990.0);
  EXPECT_EQ(average_node_energy(r), 2495.0);
}

TEST(Geopm, IgnoresLinesOutsideTotals) {
  Rng rng(12);
  const std::vector<std::string> noise{"Region dgemm:\n", "    package-energy (joules): 5\n",
                                       "    dram-energy (joules): 7\n", "    frequency (%): 88\n", "\n",
                                       "Host: nid9\n"};
  const auto lines = detail::lines_of(kTwoNodes);
  for (int trial = 0; trial < 200; ++trial) {
    // Noise may go before the first section or after a section's dram line.
    std::string text;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i == 0 || i == 4) {
        const auto n = uniform_index(rng, 4);
        for (std::uint64_t k = 0; k < n; ++k) text += noise[uniform_index(rng, noise.size())];
      }
      text += std::string(lines[i]) + "\n";
    }
    EXPECT_EQ(average_node_energy(parse_geopm_report(text)), 2495.0) << text;
  }
}

TEST(Geopm, RejectsEmptyOrGarbled) {
  EXPECT_THROW(parse_geopm_report(""), ParseFailed);
  EXPECT_THROW(parse_geopm_report("Host: x\nruntime (sec): 3\n"), ParseFailed);
  EXPECT_THROW(parse_geopm_report("Application Totals:\n    package-energy (joules): lots\n"), ParseFailed);
}

TEST(Metric, EnergyDelayProduct) {
  EXPECT_NEAR(edp(2280.806, 3.0), 6842.418, 1e-9);
  EXPECT_EQ(edp(0.0, 5.0), 0.0);
}

TEST(Simulated, MinimumIsOneAtMinimizer) {
  const auto space = testing_fixtures::xsbench_mixed_space();
  const auto target = simulated_minimizer(space);
  EXPECT_EQ(simulated_objective(space, target), 1.0);
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto idx = space.sample_indices(rng);
    if (idx != target) {
      EXPECT_GT(simulated_objective(space, idx), 1.0);
    }
  }
  const auto s30 = testing_fixtures::sim30_space();
  EXPECT_EQ(s30.from_indices(simulated_minimizer(s30)),
            Configuration({{"p0", "16"}, {"p1", "threads"}, {"p2", " "}}));
}

namespace {

Problem shell_problem(const std::filesystem::path& dir, const std::string& script, const std::string& build = "") {
  std::ofstream(dir / "app.sh.in") << script;
  Problem p;
  p.name = "t";
  p.base_dir = dir;
  p.evaluator = EvaluatorKind::pipeline;
  p.space = ParamSpace({ordinal("p0", {"1", "2"}, "1")}, 0);
  p.molds = {{"app.sh.in", "app.sh"}};
  p.build_command = build.empty() ? "chmod +x app.sh" : build;
  p.launch.kind = LauncherKind::local_shell;
  p.executable = "./app.sh";
  return p;
}

}  // namespace

TEST(Pipeline, SuccessfulTrial) {
  TempDir dir("eval-ok");
  const auto p = shell_problem(dir.path(), "#!/bin/sh\necho \"p0=#Pp0\"\necho 'Runtime: 1.5'\n");
  const auto r = evaluate_trial(p, Configuration({{"p0", "2"}}), 0, dir.path() / "trials");
  EXPECT_EQ(r.status, TrialStatus::ok) << r.detail;
  EXPECT_EQ(r.value, 1.5);
  EXPECT_EQ(r.app_runtime_s, 1.5);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "trials" / "0"));
}

TEST(Pipeline, BuildFailureIsCompileFailed) {
  TempDir dir("eval-build");
  const auto p = shell_problem(dir.path(), "#!/bin/sh\necho 'Runtime: 1'\n", "false");
  const auto r = evaluate_trial(p, Configuration({{"p0", "1"}}), 0, dir.path() / "trials");
  EXPECT_EQ(r.status, TrialStatus::compile_failed);
  EXPECT_FALSE(r.value.has_value());
}

TEST(Pipeline, UnresolvableMoldIsCompileFailed) {
  TempDir dir("eval-mold");
  const auto p = shell_problem(dir.path(), "#Pzz\n");
  const auto r = evaluate_trial(p, Configuration({{"p0", "1"}}), 0, dir.path() / "trials");
  EXPECT_EQ(r.status, TrialStatus::compile_failed);
}

TEST(Pipeline, NonzeroExitAndMissingRuntime) {
  TempDir dir("eval-fail");
  auto p = shell_problem(dir.path(), "#!/bin/sh\necho 'Runtime: 1'\nexit 3\n");
  EXPECT_EQ(evaluate_trial(p, Configuration({{"p0", "1"}}), 0, dir.path() / "t").status, TrialStatus::run_failed);
  p = shell_problem(dir.path(), "#!/bin/sh\necho done\n");
  const auto r = evaluate_trial(p, Configuration({{"p0", "1"}}), 1, dir.path() / "t");
  EXPECT_EQ(r.status, TrialStatus::parse_failed);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "t" / "1" / "out.txt"));
}

TEST(Pipeline, TimeoutKillsRun) {
  TempDir dir("eval-timeout");
  const auto p = shell_problem(dir.path(), "#!/bin/sh\nsleep 30\necho 'Runtime: 30'\n");
  const auto start = std::chrono::steady_clock::now();
  const auto r = evaluate_trial(p, Configuration({{"p0", "1"}}), 0, dir.path() / "t", 1.0);
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.status, TrialStatus::timeout);
  EXPECT_LT(took, 2.0);
}

TEST(Pipeline, EnergyMetricFromReport) {
  TempDir dir("eval-energy");
  auto prob = shell_problem(dir.path(),
                            "#!/bin/sh\n"
                            "cat > \"$TUNEKIT_REPORT\" <<EOF\n" +
                                std::string(kTwoNodes) +
                                "EOF\n"
                                "echo 'Runtime: 2'\n");
  prob.metric = MetricKind::edp_Js;
  const auto r = evaluate_trial(prob, Configuration({{"p0", "1"}}), 4, dir.path() / "t");
  ASSERT_EQ(r.status, TrialStatus::ok) << r.detail;
  EXPECT_EQ(r.value, 4990.0);
  prob.metric = MetricKind::node_energy_J;
  EXPECT_EQ(evaluate_trial(prob, Configuration({{"p0", "1"}}), 5, dir.path() / "t").value, 2495.0);
}

TEST(Pipeline, TimingInvariant) {
  TempDir dir("eval-timing");
  const auto p = shell_problem(dir.path(), "#!/bin/sh\nsleep 0.1\necho 'Runtime: 0.1'\n");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = evaluate_trial(p, Configuration({{"p0", "1"}}), i, dir.path() / "t");
    ASSERT_TRUE(r.ok()) << r.detail;
    EXPECT_GE(r.elapsed_total_s + kClockTolerance, r.compile_time_s + *r.app_runtime_s);
    ASSERT_TRUE(overhead(r).has_value());
    EXPECT_GE(*overhead(r), 0.0);
  }
}
