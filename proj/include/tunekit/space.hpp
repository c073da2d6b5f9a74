#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/random.hpp"

namespace tunekit {

enum class ParamKind { ordinal, categorical };

inline std::string_view to_string(ParamKind kind) {
  return kind == ParamKind::ordinal ? "ordinal" : "categorical";
}

// One tunable. Values are opaque strings: "64", "cores" and
// "#pragma omp parallel for" are all treated the same way.
struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::categorical;
  std::vector<std::string> values;
  std::string default_value;

  std::optional<std::size_t> index_of(std::string_view value) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] == value) {
        return i;
      }
    }
    return std::nullopt;
  }

  bool operator==(const Parameter&) const = default;
};

inline Parameter ordinal(std::string name, std::vector<std::string> values, std::string default_value) {
  return {std::move(name), ParamKind::ordinal, std::move(values), std::move(default_value)};
}

inline Parameter categorical(std::string name, std::vector<std::string> values, std::string default_value) {
  return {std::move(name), ParamKind::categorical, std::move(values), std::move(default_value)};
}

// Assignment of one value to every parameter, kept in the owning space's order.
class Configuration {
public:
  using Assignment = std::pair<std::string, std::string>;

  Configuration() = default;
  explicit Configuration(std::vector<Assignment> assignments) : assignments_(std::move(assignments)) {}
  Configuration(std::initializer_list<Assignment> assignments) : assignments_(assignments) {}

  const std::vector<Assignment>& assignments() const { return assignments_; }
  std::size_t size() const { return assignments_.size(); }

  const std::string* find(std::string_view name) const {
    for (const auto& [key, value] : assignments_) {
      if (key == name) {
        return &value;
      }
    }
    return nullptr;
  }

  const std::string& at(std::string_view name) const {
    if (const auto* value = find(name)) {
      return *value;
    }
    throw InvalidValue("configuration has no parameter '" + std::string(name) + "'");
  }

  bool operator==(const Configuration&) const = default;
  auto operator<=>(const Configuration&) const = default;

private:
  std::vector<Assignment> assignments_;
};

// Index encoding: one coordinate per parameter, equal to the value's position
// in its list. Ordinal order is preserved; categorical order is arbitrary but fixed.
using EncodedPoint = std::vector<double>;
using IndexPoint = std::vector<std::uint32_t>;

class ParamSpace {
public:
  ParamSpace() = default;

  ParamSpace(std::vector<Parameter> parameters, std::uint64_t seed) : parameters_(std::move(parameters)), seed_(seed) {
    validate();
  }

  const std::vector<Parameter>& parameters() const { return parameters_; }
  std::size_t dimension() const { return parameters_.size(); }
  std::uint64_t seed() const { return seed_; }

  const Parameter* find(std::string_view name) const {
    for (const auto& p : parameters_) {
      if (p.name == name) {
        return &p;
      }
    }
    return nullptr;
  }

  // Product of the value-list sizes; 1 for an empty space. Saturates at
  // UINT64_MAX rather than wrapping.
  std::uint64_t cardinality() const {
    std::uint64_t total = 1;
    for (const auto& p : parameters_) {
      const auto n = static_cast<std::uint64_t>(p.values.size());
      if (total > std::numeric_limits<std::uint64_t>::max() / n) {
        return std::numeric_limits<std::uint64_t>::max();
      }
      total *= n;
    }
    return total;
  }

  Configuration default_configuration() const {
    std::vector<Configuration::Assignment> out;
    out.reserve(parameters_.size());
    for (const auto& p : parameters_) {
      out.emplace_back(p.name, p.default_value);
    }
    return Configuration(std::move(out));
  }

  // Uniform over each parameter independently; advances rng.
  IndexPoint sample_indices(Rng& rng) const {
    IndexPoint idx(parameters_.size());
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
      idx[i] = static_cast<std::uint32_t>(uniform_index(rng, parameters_[i].values.size()));
    }
    return idx;
  }

  Configuration sample(Rng& rng) const { return from_indices(sample_indices(rng)); }

  IndexPoint to_indices(const Configuration& c) const {
    if (c.size() != parameters_.size()) {
      throw InvalidValue("configuration has " + std::to_string(c.size()) + " assignments, space has " +
                         std::to_string(parameters_.size()) + " parameters");
    }
    IndexPoint idx(parameters_.size());
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
      const auto& p = parameters_[i];
      const std::string* value = c.find(p.name);
      if (value == nullptr) {
        throw InvalidValue("configuration is missing parameter '" + p.name + "'");
      }
      const auto pos = p.index_of(*value);
      if (!pos) {
        throw InvalidValue("value '" + *value + "' is not legal for parameter '" + p.name + "'");
      }
      idx[i] = static_cast<std::uint32_t>(*pos);
    }
    return idx;
  }

  Configuration from_indices(const IndexPoint& idx) const {
    if (idx.size() != parameters_.size()) {
      throw InvalidValue("index point has wrong dimension");
    }
    std::vector<Configuration::Assignment> out;
    out.reserve(parameters_.size());
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
      const auto& p = parameters_[i];
      if (idx[i] >= p.values.size()) {
        throw InvalidValue("index " + std::to_string(idx[i]) + " out of range for parameter '" + p.name + "'");
      }
      out.emplace_back(p.name, p.values[idx[i]]);
    }
    return Configuration(std::move(out));
  }

  EncodedPoint encode(const Configuration& c) const {
    const auto idx = to_indices(c);
    return EncodedPoint(idx.begin(), idx.end());
  }

  Configuration decode(const EncodedPoint& x) const {
    IndexPoint idx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= 0.0) || x[i] != static_cast<double>(static_cast<std::uint32_t>(x[i]))) {
        throw InvalidValue("coordinate " + std::to_string(i) + " is not a value index");
      }
      idx[i] = static_cast<std::uint32_t>(x[i]);
    }
    return from_indices(idx);
  }

  // Visits every configuration once, in lexicographic order of the encoded
  // coordinates (last parameter varies fastest). Refuses spaces above cap.
  void for_each_indices(std::uint64_t cap, const std::function<void(const IndexPoint&)>& visit) const {
    const auto total = cardinality();
    if (total > cap) {
      throw CapExceeded("space has " + std::to_string(total) + " configurations, cap is " + std::to_string(cap));
    }
    IndexPoint idx(parameters_.size(), 0);
    for (std::uint64_t n = 0; n < total; ++n) {
      visit(idx);
      for (std::size_t i = parameters_.size(); i-- > 0;) {
        if (++idx[i] < parameters_[i].values.size()) {
          break;
        }
        idx[i] = 0;
      }
    }
  }

  std::vector<Configuration> enumerate(std::uint64_t cap) const {
    std::vector<Configuration> out;
    for_each_indices(cap, [&](const IndexPoint& idx) { out.push_back(from_indices(idx)); });
    return out;
  }

  bool operator==(const ParamSpace&) const = default;

private:
  void validate() const {
    std::set<std::string_view> names;
    for (const auto& p : parameters_) {
      if (p.name.empty()) {
        throw InvalidSpace("parameter with empty name");
      }
      if (!names.insert(p.name).second) {
        throw InvalidSpace("duplicate parameter name '" + p.name + "'");
      }
      if (p.values.empty()) {
        throw InvalidSpace("parameter '" + p.name + "' has no values");
      }
      std::set<std::string_view> seen;
      for (const auto& v : p.values) {
        if (!seen.insert(v).second) {
          throw InvalidSpace("parameter '" + p.name + "' lists value '" + v + "' twice");
        }
      }
      if (!p.index_of(p.default_value)) {
        throw InvalidSpace("default '" + p.default_value + "' of parameter '" + p.name + "' is not among its values");
      }
    }
  }

  std::vector<Parameter> parameters_;
  std::uint64_t seed_ = 0;
};

}  // namespace tunekit
