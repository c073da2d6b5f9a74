#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/space.hpp"

namespace tunekit {

// A marker is "#P" followed by the longest run of [A-Za-z0-9_]; that run is
// the parameter name.
inline constexpr std::string_view kMarkerPrefix = "#P";

inline bool is_name_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) != 0 || ch == '_';
}

struct MarkerSite {
  std::size_t offset = 0;  // position of '#'
  std::size_t length = 0;  // prefix + name
  std::string name;
};

inline std::vector<MarkerSite> find_markers(std::string_view text, std::string_view label = "<text>") {
  std::vector<MarkerSite> sites;
  std::size_t pos = 0;
  while ((pos = text.find(kMarkerPrefix, pos)) != std::string_view::npos) {
    std::size_t end = pos + kMarkerPrefix.size();
    while (end < text.size() && is_name_char(text[end])) {
      ++end;
    }
    if (end == pos + kMarkerPrefix.size()) {
      throw MoldError(std::string(label) + ": marker at offset " + std::to_string(pos) + " has no parameter name");
    }
    sites.push_back({pos, end - pos, std::string(text.substr(pos + kMarkerPrefix.size(), end - pos - 2))});
    pos = end;
  }
  return sites;
}

inline std::set<std::string> marker_names(std::string_view text, std::string_view label = "<text>") {
  std::set<std::string> names;
  for (auto& site : find_markers(text, label)) {
    names.insert(std::move(site.name));
  }
  return names;
}

// Replaces every marker with the configuration's value; everything else is
// copied byte for byte.
inline std::string render(std::string_view text, const Configuration& c, std::string_view label = "<text>") {
  const auto sites = find_markers(text, label);
  std::string out;
  out.reserve(text.size());
  std::size_t copied = 0;
  for (const auto& site : sites) {
    const std::string* value = c.find(site.name);
    if (value == nullptr) {
      throw MoldError(std::string(label) + ": unresolvable marker '" + std::string(kMarkerPrefix) + site.name +
                      "'");
    }
    out.append(text.substr(copied, site.offset - copied));
    out.append(*value);
    copied = site.offset + site.length;
  }
  out.append(text.substr(copied));
  return out;
}

// Value strings must not themselves contain markers, or a rendered file could
// be rewritten a second time.
inline void check_values_marker_free(const ParamSpace& space) {
  for (const auto& p : space.parameters()) {
    for (const auto& v : p.values) {
      const auto at = v.find(kMarkerPrefix);
      if (at != std::string::npos) {
        throw MoldError("value '" + v + "' of parameter '" + p.name + "' contains the marker prefix");
      }
    }
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MoldError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct MoldFile {
  std::filesystem::path source;       // absolute, or relative to the problem file
  std::filesystem::path destination;  // relative to the trial directory

  bool operator==(const MoldFile&) const = default;
};

// Checks that every marker in the mold names a parameter of the space.
inline void check_mold(const MoldFile& mold, const ParamSpace& space) {
  const auto label = mold.source.string();
  for (const auto& name : marker_names(read_file(mold.source), label)) {
    if (space.find(name) == nullptr) {
      throw MoldError(label + ": marker '" + std::string(kMarkerPrefix) + name + "' names no parameter");
    }
  }
}

inline std::filesystem::path render_file(const MoldFile& mold, const Configuration& c,
                                         const std::filesystem::path& trial_dir) {
  const auto text = render(read_file(mold.source), c, mold.source.string());
  const auto dest = trial_dir / mold.destination;
  std::filesystem::create_directories(dest.parent_path());
  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) {
    throw MoldError("cannot write " + dest.string());
  }
  return dest;
}

// Environment variable name -> parameter name, in declaration order.
using EnvBinding = std::vector<std::pair<std::string, std::string>>;
using EnvMap = std::map<std::string, std::string>;

inline void check_bindings(const EnvBinding& bindings, const ParamSpace& space) {
  for (const auto& [var, param] : bindings) {
    if (space.find(param) == nullptr) {
      throw MoldError("environment variable " + var + " is bound to unknown parameter '" + param + "'");
    }
  }
}

inline EnvMap bind_env(const EnvBinding& bindings, const Configuration& c) {
  EnvMap env;
  for (const auto& [var, param] : bindings) {
    const std::string* value = c.find(param);
    if (value == nullptr) {
      throw MoldError("environment variable " + var + " needs parameter '" + param + "'");
    }
    env[var] = *value;
  }
  return env;
}

}  // namespace tunekit
