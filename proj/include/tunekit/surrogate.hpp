#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/random.hpp"
#include "tunekit/space.hpp"

namespace tunekit {

// Number of coordinates considered at each split.
struct MaxFeatures {
  enum class Mode { third, all, count };
  Mode mode = Mode::third;
  std::size_t count = 0;

  static MaxFeatures third() { return {}; }
  static MaxFeatures all() { return {Mode::all, 0}; }
  static MaxFeatures fixed(std::size_t n) { return {Mode::count, n}; }

  // max(1, floor(d/3)) by default.
  std::size_t resolve(std::size_t dimension) const {
    switch (mode) {
      case Mode::all:
        return std::max<std::size_t>(1, dimension);
      case Mode::count:
        return count;
      case Mode::third:
        break;
    }
    return std::max<std::size_t>(1, dimension / 3);
  }

  bool operator==(const MaxFeatures&) const = default;
};

struct ForestParams {
  std::size_t n_trees = 50;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate(std::size_t dimension) const {
    if (n_trees < 1) {
      throw SurrogateError("n_trees must be at least 1");
    }
    if (min_samples_leaf < 1) {
      throw SurrogateError("min_samples_leaf must be at least 1");
    }
    if (max_features.mode == MaxFeatures::Mode::count &&
        (max_features.count < 1 || max_features.count > std::max<std::size_t>(1, dimension))) {
      throw SurrogateError("max_features must lie in [1, " + std::to_string(dimension) + "]");
    }
  }

  bool operator==(const ForestParams&) const = default;
};

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and population standard deviation of per-tree outputs.
inline Prediction summarize(std::span<const double> per_tree) {
  if (per_tree.empty()) {
    throw SurrogateError("no tree outputs to summarize");
  }
  const auto [lo, hi] = std::minmax_element(per_tree.begin(), per_tree.end());
  if (*lo == *hi) {
    return {*lo, 0.0};
  }
  const double n = static_cast<double>(per_tree.size());
  double mean = std::accumulate(per_tree.begin(), per_tree.end(), 0.0) / n;
  mean = std::clamp(mean, *lo, *hi);
  double ss = 0.0;
  for (double v : per_tree) {
    ss += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(ss / n)};
}

struct TrainingPoint {
  EncodedPoint x;
  double y = 0.0;
};

// Axis-aligned regression tree stored as a flat node array; node 0 is the root.
// A point goes left when x[feature] <= threshold.
class RegressionTree {
public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
  };

  double predict(std::span<const double> x) const {
    std::uint32_t at = 0;
    while (nodes_[at].feature >= 0) {
      const auto& n = nodes_[at];
      at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[at].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  // Training rows ordered by (x[f], row) for every coordinate f; shared by
  // all trees of one fit.
  using Presorted = std::vector<std::vector<std::uint32_t>>;

  static Presorted presort(std::span<const TrainingPoint> data) {
    const std::size_t n = data.size();
    const std::size_t dim = n == 0 ? 0 : data[0].x.size();
    Presorted out(dim, std::vector<std::uint32_t>(n));
    std::vector<std::pair<double, std::uint32_t>> keyed(n);
    for (std::size_t f = 0; f < dim; ++f) {
      for (std::uint32_t r = 0; r < n; ++r) {
        keyed[r] = {data[r].x[f], r};
      }
      std::sort(keyed.begin(), keyed.end());
      for (std::size_t i = 0; i < n; ++i) {
        out[f][i] = keyed[i].second;
      }
    }
    return out;
  }

  // weights[r] is how often row r was drawn; a row drawn k times behaves
  // exactly like k copies of it.
  static RegressionTree build(std::span<const TrainingPoint> data, const Presorted& sorted,
                              const std::vector<std::uint32_t>& weights, std::size_t min_samples_leaf,
                              std::size_t max_features, Rng& rng) {
    RegressionTree tree;
    Builder builder(data, min_samples_leaf, max_features, rng, tree.nodes_);
    const std::size_t distinct = builder.load(sorted, weights);
    tree.nodes_.reserve(2 * distinct);
    builder.grow(0, distinct);
    return tree;
  }

private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double sse = 0.0;
  };

  // Works on slots: positions in the ascending list of drawn rows.
  // by_feature[f] holds every slot ordered by (x[f], slot); a node owns the
  // same range [begin, end) in each of these orders, and a split stably
  // partitions all of them.
  struct Builder {
    Builder(std::span<const TrainingPoint> rows, std::size_t leaf, std::size_t features, Rng& r,
            std::vector<Node>& out)
        : data(rows), min_samples_leaf(leaf), max_features(features), rng(r), nodes(out) {}

    std::span<const TrainingPoint> data;
    std::size_t min_samples_leaf;
    std::size_t max_features;
    Rng& rng;
    std::vector<Node>& nodes;
    std::vector<std::vector<std::uint32_t>> by_feature;
    std::vector<std::vector<double>> columns;  // columns[f][slot]
    std::vector<double> targets;               // targets[slot]
    std::vector<double> weights;               // weights[slot]
    std::vector<std::uint32_t> members;        // the node's slots, in slot order
    std::vector<std::uint32_t> scratch;
    std::vector<char> goes_left;
    // live[f] == 0 once f is known constant on the current node; it then
    // stays constant below, so its order is no longer maintained there.
    std::vector<char> live;
    std::vector<std::size_t> killed;
    std::vector<std::size_t> order;

    double x(std::uint32_t slot, std::size_t f) const { return columns[f][slot]; }
    double y(std::uint32_t slot) const { return targets[slot]; }

    std::size_t load(const Presorted& sorted, const std::vector<std::uint32_t>& row_weights) {
      const std::size_t dim = sorted.size();
      std::vector<std::uint32_t> slot_of(row_weights.size(), 0);
      std::uint32_t n = 0;
      for (std::size_t r = 0; r < row_weights.size(); ++r) {
        if (row_weights[r] > 0) {
          slot_of[r] = n++;
        }
      }
      columns.assign(dim, std::vector<double>(n));
      targets.resize(n);
      weights.resize(n);
      for (std::size_t r = 0; r < row_weights.size(); ++r) {
        if (row_weights[r] == 0) {
          continue;
        }
        const auto slot = slot_of[r];
        targets[slot] = data[r].y;
        weights[slot] = static_cast<double>(row_weights[r]);
        for (std::size_t f = 0; f < dim; ++f) {
          columns[f][slot] = data[r].x[f];
        }
      }
      by_feature.assign(dim, {});
      for (std::size_t f = 0; f < dim; ++f) {
        by_feature[f].reserve(n);
        for (const auto r : sorted[f]) {
          if (row_weights[r] > 0) {
            by_feature[f].push_back(slot_of[r]);
          }
        }
      }
      members.resize(n);
      std::iota(members.begin(), members.end(), 0U);
      scratch.resize(n);
      goes_left.resize(n);
      live.assign(dim, 1);
      killed.clear();
      return n;
    }

    static void partition(std::vector<std::uint32_t>& v, std::size_t begin, std::size_t end,
                          const std::vector<char>& goes_left, std::vector<std::uint32_t>& scratch) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto slot = v[i];
        if (goes_left[slot]) {
          v[l++] = slot;
        } else {
          scratch[r++] = slot;
        }
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r),
                v.begin() + static_cast<std::ptrdiff_t>(l));
    }

    void revive(std::size_t mark) {
      while (killed.size() > mark) {
        live[killed.back()] = 1;
        killed.pop_back();
      }
    }

    std::uint32_t grow(std::size_t begin, std::size_t end) {
      const auto id = static_cast<std::uint32_t>(nodes.size());
      nodes.emplace_back();

      double lo = y(members[begin]);
      double hi = lo;
      double sum = 0.0;
      double count = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto slot = members[i];
        const double v = y(slot);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += weights[slot] * v;
        count += weights[slot];
      }
      // Clamped so rounding in the sum can never leave the target range.
      const double leaf_value = lo == hi ? lo : std::clamp(sum / count, lo, hi);
      nodes[id].value = leaf_value;

      if (count < 2.0 * static_cast<double>(min_samples_leaf) || lo == hi) {
        return id;
      }
      const std::size_t mark = killed.size();
      const Split split = best_split(begin, end, leaf_value, count);
      if (!split.found) {
        revive(mark);
        return id;
      }

      std::size_t n_left = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto slot = members[i];
        goes_left[slot] = x(slot, split.feature) <= split.threshold;
        n_left += goes_left[slot] ? 1 : 0;
      }
      partition(members, begin, end, goes_left, scratch);
      for (std::size_t f = 0; f < by_feature.size(); ++f) {
        if (live[f]) {
          partition(by_feature[f], begin, end, goes_left, scratch);
        }
      }

      const std::size_t mid = begin + n_left;
      nodes[id].feature = static_cast<int>(split.feature);
      nodes[id].threshold = split.threshold;
      const auto l = grow(begin, mid);
      const auto r = grow(mid, end);
      nodes[id].left = l;
      nodes[id].right = r;
      revive(mark);
      return id;
    }

    // Draws features in random order and scores each until max_features
    // non-constant ones have been seen. Best = lowest weighted child SSE,
    // ties to the lowest feature index, then the lowest threshold.
    Split best_split(std::size_t begin, std::size_t end, double center, double count) {
      const std::size_t dim = by_feature.size();
      order.resize(dim);
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = dim; i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
      }

      Split best;
      std::size_t informative = 0;
      const std::size_t n = end - begin;
      const double min_leaf = static_cast<double>(min_samples_leaf);
      for (std::size_t f : order) {
        if (informative >= max_features) {
          break;
        }
        if (!live[f]) {
          continue;
        }
        const std::uint32_t* sorted = by_feature[f].data() + begin;
        if (x(sorted[0], f) == x(sorted[n - 1], f)) {
          live[f] = 0;
          killed.push_back(f);
          continue;
        }
        ++informative;

        double total = 0.0;
        double total_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = y(sorted[i]) - center;
          const double w = weights[sorted[i]];
          total += w * d;
          total_sq += w * d * d;
        }
        double left_sum = 0.0;
        double left_sq = 0.0;
        double nl = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const double d = y(sorted[i]) - center;
          const double w = weights[sorted[i]];
          left_sum += w * d;
          left_sq += w * d * d;
          nl += w;
          const double here = x(sorted[i], f);
          const double next = x(sorted[i + 1], f);
          const double nr = count - nl;
          if (here == next || nl < min_leaf || nr < min_leaf) {
            continue;
          }
          const double right_sum = total - left_sum;
          const double right_sq = total_sq - left_sq;
          const double sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
          const double threshold = here + (next - here) / 2.0;
          if (better(sse, f, threshold, best)) {
            best = {true, f, threshold, sse};
          }
        }
      }
      return best;
    }

    static bool better(double sse, std::size_t feature, double threshold, const Split& best) {
      if (!best.found) {
        return true;
      }
      const double tol = 1e-12 * std::max({1.0, std::abs(sse), std::abs(best.sse)});
      if (sse < best.sse - tol) {
        return true;
      }
      if (sse > best.sse + tol) {
        return false;
      }
      return feature < best.feature || (feature == best.feature && threshold < best.threshold);
    }
  };

  std::vector<Node> nodes_;
};

// Random-forest regressor; prediction std is the across-tree spread.
class SurrogateModel {
public:
  static SurrogateModel fit(std::vector<TrainingPoint> points, const ForestParams& params) {
    if (points.empty()) {
      throw SurrogateError("cannot fit a surrogate on an empty training set");
    }
    const std::size_t dim = points.front().x.size();
    for (const auto& p : points) {
      if (p.x.size() != dim) {
        throw SurrogateError("training points have mixed dimensions");
      }
    }
    params.validate(dim);

    SurrogateModel model;
    model.dimension_ = dim;
    model.training_ = std::move(points);
    const auto n = model.training_.size();
    const std::size_t features = params.max_features.resolve(dim);

    const auto sorted = RegressionTree::presort(model.training_);
    model.trees_.reserve(params.n_trees);
    std::vector<std::uint32_t> weights(n);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      Rng rng(mix_seed(params.seed, t));
      if (params.bootstrap) {
        std::fill(weights.begin(), weights.end(), 0U);
        for (std::size_t i = 0; i < n; ++i) {
          ++weights[uniform_index(rng, n)];
        }
      } else {
        std::fill(weights.begin(), weights.end(), 1U);
      }
      model.trees_.push_back(
          RegressionTree::build(model.training_, sorted, weights, params.min_samples_leaf, features, rng));
    }
    return model;
  }

  std::vector<double> per_tree(std::span<const double> x) const {
    if (x.size() != dimension_) {
      throw SurrogateError("query has dimension " + std::to_string(x.size()) + ", model expects " +
                           std::to_string(dimension_));
    }
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const auto& tree : trees_) {
      out.push_back(tree.predict(x));
    }
    return out;
  }

  Prediction predict(std::span<const double> x) const {
    const auto values = per_tree(x);
    return summarize(values);
  }

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::vector<TrainingPoint>& training_set() const { return training_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

private:
  std::size_t dimension_ = 0;
  std::vector<TrainingPoint> training_;
  std::vector<RegressionTree> trees_;
};

}  // namespace tunekit
