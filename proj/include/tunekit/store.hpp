#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunekit/error.hpp"
#include "tunekit/record.hpp"
#include "tunekit/space.hpp"

namespace tunekit {

// Trial log on disk: JSON Lines. Line 1 is {"header": {...}}; every later
// line is one complete TrialRecord object. A record is only counted once its
// terminating newline is on disk, so a torn final line is ignored on reload.

struct LogMetadata {
  std::string problem;
  std::uint64_t seed = 0;
  std::string space_fingerprint;
  std::optional<std::uint64_t> space_cardinality;
  std::vector<std::string> parameter_names;
  std::optional<std::size_t> max_evals;
  std::optional<double> wall_clock_limit_s;
  MetricKind metric = MetricKind::runtime_s;
  std::string launcher;

  bool operator==(const LogMetadata&) const = default;
};

// FNV-1a over parameter names, kinds and values.
inline std::string space_fingerprint(const ParamSpace& space) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&](std::string_view s, char sep) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>(sep);
    h *= 0x100000001b3ULL;
  };
  for (const auto& p : space.parameters()) {
    feed(p.name, '\x1f');
    feed(to_string(p.kind), '\x1f');
    for (const auto& v : p.values) {
      feed(v, '\x1f');
    }
    feed("", '\x1e');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

using nlohmann::json;

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> json_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<T>();
}

inline json to_json(const LogMetadata& m) {
  return {{"problem", m.problem},
          {"seed", m.seed},
          {"space_fingerprint", m.space_fingerprint},
          {"space_cardinality", opt_json(m.space_cardinality)},
          {"parameters", m.parameter_names},
          {"max_evals", opt_json(m.max_evals)},
          {"wall_clock_limit_s", opt_json(m.wall_clock_limit_s)},
          {"metric", std::string(to_string(m.metric))},
          {"launcher", m.launcher}};
}

inline LogMetadata metadata_from_json(const json& j) {
  LogMetadata m;
  m.problem = j.at("problem").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.space_fingerprint = j.at("space_fingerprint").get<std::string>();
  m.space_cardinality = json_opt<std::uint64_t>(j, "space_cardinality");
  m.parameter_names = j.at("parameters").get<std::vector<std::string>>();
  m.max_evals = json_opt<std::size_t>(j, "max_evals");
  m.wall_clock_limit_s = json_opt<double>(j, "wall_clock_limit_s");
  m.metric = metric_from_string(j.at("metric").get<std::string>());
  m.launcher = j.at("launcher").get<std::string>();
  return m;
}

inline json to_json(const TrialRecord& r) {
  json config = json::array();
  for (const auto& [name, value] : r.configuration.assignments()) {
    config.push_back({name, value});
  }
  return {{"trial_index", r.trial_index},
          {"configuration", std::move(config)},
          {"metric", std::string(to_string(r.metric))},
          {"value", opt_json(r.value)},
          {"status", std::string(to_string(r.status))},
          {"compile_time_s", r.compile_time_s},
          {"app_runtime_s", opt_json(r.app_runtime_s)},
          {"elapsed_total_s", r.elapsed_total_s},
          {"started_at", r.started_at},
          {"wall_clock_s", r.wall_clock_s},
          {"detail", r.detail}};
}

inline TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.trial_index = j.at("trial_index").get<std::size_t>();
  std::vector<Configuration::Assignment> assignments;
  for (const auto& pair : j.at("configuration")) {
    assignments.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  }
  r.configuration = Configuration(std::move(assignments));
  r.metric = metric_from_string(j.at("metric").get<std::string>());
  r.value = json_opt<double>(j, "value");
  r.status = status_from_string(j.at("status").get<std::string>());
  r.compile_time_s = j.at("compile_time_s").get<double>();
  r.app_runtime_s = json_opt<double>(j, "app_runtime_s");
  r.elapsed_total_s = j.at("elapsed_total_s").get<double>();
  r.started_at = j.at("started_at").get<std::string>();
  r.wall_clock_s = j.at("wall_clock_s").get<double>();
  r.detail = j.value("detail", std::string{});
  return r;
}

// Writes all of line or nothing: a short write is rolled back by truncation.
inline void append_line(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) {
    throw StoreError("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  struct stat st {};
  ::fstat(fd, &st);
  const off_t before = st.st_size;
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      [[maybe_unused]] const int rc = ::ftruncate(fd, before);
      ::close(fd);
      throw StoreError("write to " + path.string() + " failed: " + why);
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace detail

class TrialLog {
public:
  // In-memory log; nothing is written.
  explicit TrialLog(LogMetadata metadata) : metadata_(std::move(metadata)) {}

  // Creates (or truncates) the file and writes the header.
  static TrialLog create(const std::filesystem::path& path, LogMetadata metadata) {
    TrialLog log(std::move(metadata));
    log.path_ = path;
    if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::remove(path);
    detail::append_line(path, nlohmann::json{{"header", detail::to_json(log.metadata_)}}.dump() + "\n");
    return log;
  }

  struct Loaded;
  static Loaded load(const std::filesystem::path& path);

  const LogMetadata& metadata() const { return metadata_; }
  const std::vector<TrialRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const std::optional<std::filesystem::path>& path() const { return path_; }

  void append(const TrialRecord& record) {
    if (record.trial_index != records_.size()) {
      throw StoreError("trial index " + std::to_string(record.trial_index) + " does not follow " +
                       std::to_string(records_.size()) + " stored records");
    }
    if (path_) {
      detail::append_line(*path_, detail::to_json(record).dump() + "\n");
    }
    records_.push_back(record);
  }

private:
  LogMetadata metadata_;
  std::optional<std::filesystem::path> path_;
  std::vector<TrialRecord> records_;
};

struct TrialLog::Loaded {
  TrialLog log;
  bool truncated = false;  // a partial or unreadable tail was dropped
};

inline TrialLog::Loaded TrialLog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StoreError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::size_t start = 0;
  std::size_t line_no = 0;
  std::optional<TrialLog> log;
  bool truncated = false;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) {
      truncated = true;
      break;
    }
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!log) {
        log.emplace(detail::metadata_from_json(j.at("header")));
        log->path_ = path;
        continue;
      }
      auto record = detail::record_from_json(j);
      if (record.trial_index != log->records_.size()) {
        truncated = true;
        break;
      }
      log->records_.push_back(std::move(record));
    } catch (const std::exception& e) {
      if (!log) {
        throw StoreError(path.string() + ":1: bad log header: " + e.what());
      }
      truncated = true;
      break;
    }
  }
  if (!log) {
    throw StoreError(path.string() + ": missing log header");
  }
  return {std::move(*log), truncated};
}

// Minimum-value successful record; the earliest wins ties.
inline std::optional<TrialRecord> best(const std::vector<TrialRecord>& records) {
  std::optional<TrialRecord> out;
  for (const auto& r : records) {
    if (r.ok() && (!out || *r.value < *out->value)) {
      out = r;
    }
  }
  return out;
}

struct TracePoint {
  double wall_clock_s = 0.0;
  double best = 0.0;

  bool operator==(const TracePoint&) const = default;
};

// Running minimum sampled at each successful record's completion time.
inline std::vector<TracePoint> best_trace(const std::vector<TrialRecord>& records) {
  std::vector<TracePoint> trace;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    const double b = trace.empty() ? *r.value : std::min(trace.back().best, *r.value);
    trace.push_back({r.wall_clock_s, b});
  }
  return trace;
}

inline double improvement_pct(double baseline, double best_value) {
  if (!(baseline > 0.0)) {
    throw Error("baseline must be positive");
  }
  return 100.0 * (baseline - best_value) / baseline;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos && (s.empty() || (s.front() != ' ' && s.back() != ' '))) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

// Columns: trial_index, one per parameter, objective, status, elapsed_sec.
// Everything left of elapsed_sec is a deterministic function of the search.
inline std::string to_csv(const std::vector<std::string>& parameter_names, const std::vector<TrialRecord>& records) {
  std::string out = "trial_index";
  for (const auto& name : parameter_names) {
    out += ',' + csv_field(name);
  }
  out += ",objective,status,elapsed_sec\n";
  for (const auto& r : records) {
    out += std::to_string(r.trial_index);
    for (const auto& name : parameter_names) {
      const auto* v = r.configuration.find(name);
      out += ',' + csv_field(v ? *v : "");
    }
    out += ',' + (r.value ? format_number(*r.value) : std::string{});
    out += ',' + std::string(to_string(r.status));
    out += ',' + format_number(r.wall_clock_s);
    out += '\n';
  }
  return out;
}

inline std::string to_plot_tsv(const std::vector<TrialRecord>& records) {
  std::string out = "wall_clock_s\tbest_so_far\n";
  for (const auto& p : best_trace(records)) {
    out += format_number(p.wall_clock_s) + '\t' + format_number(p.best) + '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) {
    throw StoreError("cannot write " + path.string());
  }
}

}  // namespace tunekit
