#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "tunekit/random.hpp"
#include "tunekit/space.hpp"

namespace testing_fixtures {

using namespace tunekit;

inline std::filesystem::path source_dir() { return TUNEKIT_SOURCE_DIR; }
inline std::filesystem::path problems_dir() { return source_dir() / "problems"; }

// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("tunekit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

inline ParamSpace xsbench_mixed_space() {
  const std::vector<std::string> tiles{"2", "4", "8", "16", "32", "64", "96", "128", "256", "512", "1024"};
  return ParamSpace({ordinal("p0", {"4", "8", "16", "32", "48", "64", "96", "128", "192", "256"}, "64"),
                     ordinal("p1", {"10", "20", "40", "50", "64", "80", "100", "128", "160", "200", "256", "400"}, "100"),
                     categorical("p2", {"#pragma clang loop unrolling full", " "}, " "),
                     categorical("p3", {"#pragma omp parallel for", " "}, " "),
                     ordinal("p4", tiles, "96"),
                     ordinal("p5", tiles, "256"),
                     categorical("p6", {"cores", "threads", "sockets"}, "cores"),
                     categorical("p7", {"close", "spread", "master"}, "close"),
                     categorical("p8", {"dynamic", "static", "auto"}, "static")},
                    1234);
}

inline ParamSpace xsbench_offload_space() {
  return ParamSpace({ordinal("p0", {"1", "2", "4", "5", "8", "10", "16", "21", "32", "42"}, "42"),
                     categorical("p1", {"cores", "threads", "sockets"}, "cores"),
                     categorical("p2", {"close", "spread", "master"}, "close"),
                     categorical("p3", {"#pragma omp parallel for", " "}, " "),
                     categorical("p4", {"simd", " "}, " "),
                     categorical("p5", {"device(offloaded_to_device)", " "}, " "),
                     categorical("p6", {"dynamic", "static", "auto"}, "static"),
                     categorical("p7",
                                 {"schedule(static,1)", "schedule(static,2)", "schedule(static,4)",
                                  "schedule(static,8)", "schedule(static,16)", "schedule(static,32)", " "},
                                 " "),
                     categorical("p8", {"DEFAULT", "DISABLED", "MANDATORY"}, "DEFAULT")},
                    1234);
}

inline ParamSpace sim30_space() {
  return ParamSpace({ordinal("p0", {"4", "8", "16", "32", "64"}, "64"),
                     categorical("p1", {"cores", "threads", "sockets"}, "cores"),
                     categorical("p2", {"#pragma omp parallel for", " "}, " ")},
                    1234);
}

// Random mixed space with 1..4 parameters and cardinality <= max_cardinality.
inline ParamSpace random_space(Rng& rng, std::uint64_t max_cardinality) {
  for (;;) {
    const auto dims = 1 + uniform_index(rng, 4);
    std::vector<Parameter> params;
    std::uint64_t card = 1;
    for (std::uint64_t d = 0; d < dims; ++d) {
      const auto n = 1 + uniform_index(rng, 12);
      card *= n;
      std::vector<std::string> values;
      for (std::uint64_t v = 0; v < n; ++v) {
        values.push_back("v" + std::to_string(d) + "_" + std::to_string(v));
      }
      const auto def = values[uniform_index(rng, n)];
      params.push_back(uniform_index(rng, 2) == 0 ? ordinal("p" + std::to_string(d), values, def)
                                                  : categorical("p" + std::to_string(d), values, def));
    }
    if (card <= max_cardinality) {
      return ParamSpace(std::move(params), 0);
    }
  }
}

// Minimal RFC 4180 reader used to check CSV output independently of the writer.
inline std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool at_field_start = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"' && at_field_start) {
      quoted = true;
      at_field_start = false;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      at_field_start = true;
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      at_field_start = true;
    } else {
      field += ch;
      at_field_start = false;
    }
  }
  return rows;
}

}  // namespace testing_fixtures
