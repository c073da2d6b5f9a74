#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "tunekit/mold.hpp"

using namespace tunekit;

TEST(Mold, SubstitutesInsideCode) {
  const Configuration c({{"p1", "8"}});
  EXPECT_EQ(render("schedule(dynamic,#Pp1)", c), "schedule(dynamic,8)");
}

TEST(Mold, SubstitutesPragmaAndBlankValues) {
  const Configuration c({{"p2", "#pragma omp parallel for"}, {"p3", " "}});
  EXPECT_EQ(render("#Pp2\nfor(;;) {}\nx#Pp3;y", c), "#pragma omp parallel for\nfor(;;) {}\nx ;y");
}

TEST(Mold, TextWithoutMarkersIsUnchanged) {
  const std::string text = "int main() { return 0; } // #pragma once\n";
  EXPECT_EQ(render(text, Configuration({{"p0", "1"}})), text);
}

TEST(Mold, MarkerNameIsLongestRun) {
  const Configuration c({{"p1", "A"}, {"p10", "B"}});
  EXPECT_EQ(render("#Pp10;#Pp1;", c), "B;A;");
  EXPECT_THROW(render("#Pp1x", c), MoldError);
}

TEST(Mold, Errors) {
  EXPECT_THROW(render("x = #P;", Configuration{}), MoldError);
  EXPECT_THROW(render("#Pmissing", Configuration({{"p0", "1"}})), MoldError);
  const ParamSpace bad({categorical("p", {"#Pq", "x"}, "x")}, 0);
  EXPECT_THROW(check_values_marker_free(bad), MoldError);
}

TEST(Mold, RenderingProperties) {
  // Random molds built from literal chunks and markers: the output equals the
  // chunk-wise concatenation, rendering is idempotent, and no markers remain.
  // No chunk starts with a name character, so every marker ends where intended.
  Rng rng(31);
  const auto space = testing_fixtures::xsbench_mixed_space();
  const std::vector<std::string> chunks{" for (i=0;i<n;i++) ", "\n", "  x += y; ", "#pragma omp simd\n", "/*", "*/"};
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = space.sample(rng);
    std::string mold;
    std::string expected;
    std::size_t markers = 0;
    const auto pieces = uniform_index(rng, 12);
    for (std::uint64_t i = 0; i < pieces; ++i) {
      if (uniform_index(rng, 2) == 0) {
        const auto& p = space.parameters()[uniform_index(rng, space.dimension())];
        mold += "#P" + p.name;
        expected += c.at(p.name);
        ++markers;
      } else {
        const auto& chunk = chunks[uniform_index(rng, chunks.size())];
        mold += chunk;
        expected += chunk;
      }
    }
    EXPECT_EQ(find_markers(mold).size(), markers);
    const auto once = render(mold, c);
    EXPECT_EQ(once, expected);
    EXPECT_TRUE(find_markers(once).empty());
    EXPECT_EQ(render(once, c), once);
  }
}

TEST(Mold, RenderFileWritesDestination) {
  testing_fixtures::TempDir dir("mold");
  const auto src = dir.path() / "k.c.in";
  std::ofstream(src) << "int b = #Pblock;\n";
  const MoldFile mold{src, "sub/k.c"};
  const ParamSpace space({ordinal("block", {"16", "32"}, "16")}, 0);
  EXPECT_NO_THROW(check_mold(mold, space));
  const auto out = render_file(mold, Configuration({{"block", "32"}}), dir.path() / "trial");
  EXPECT_EQ(read_file(out), "int b = 32;\n");

  const ParamSpace other({ordinal("tile", {"1"}, "1")}, 0);
  EXPECT_THROW(check_mold(mold, other), MoldError);
  EXPECT_THROW(check_mold(MoldFile{dir.path() / "absent", "x"}, space), MoldError);
}

TEST(Mold, EnvironmentBindings) {
  const auto space = testing_fixtures::xsbench_mixed_space();
  const EnvBinding bindings{{"OMP_PLACES", "p6"}, {"OMP_SCHEDULE", "p8"}};
  EXPECT_NO_THROW(check_bindings(bindings, space));
  const auto env = bind_env(bindings, space.default_configuration());
  EXPECT_EQ(env.at("OMP_PLACES"), "cores");
  EXPECT_EQ(env.at("OMP_SCHEDULE"), "static");
  EXPECT_THROW(check_bindings({{"X", "nope"}}, space), MoldError);
}
