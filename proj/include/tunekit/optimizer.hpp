#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tunekit/error.hpp"
#include "tunekit/random.hpp"
#include "tunekit/record.hpp"
#include "tunekit/space.hpp"
#include "tunekit/surrogate.hpp"

namespace tunekit {

struct AcquisitionSettings {
  double kappa = 1.96;
  std::size_t n_initial_random = 10;
  std::size_t n_candidates_per_ask = 512;

  void validate() const {
    if (!(kappa >= 0.0)) {
      throw Error("kappa must be >= 0");
    }
    if (n_initial_random < 1 || n_candidates_per_ask < 1) {
      throw Error("n_initial_random and n_candidates_per_ask must be positive");
    }
  }

  bool operator==(const AcquisitionSettings&) const = default;
};

struct SearchBudget {
  std::optional<std::size_t> max_evals;
  std::optional<double> wall_clock_limit_s;

  void validate() const {
    if (!max_evals && !wall_clock_limit_s) {
      throw Error("search budget needs max_evals or a wall-clock limit");
    }
    if (max_evals && *max_evals < 1) {
      throw Error("max_evals must be positive");
    }
  }

  bool operator==(const SearchBudget&) const = default;
};

// Lower confidence bound; smaller is more attractive under minimization.
inline double lcb(const Prediction& p, double kappa) { return p.mean - kappa * p.std; }

// Index of the lowest-LCB prediction; the earliest wins ties.
inline std::size_t select_by_lcb(std::span<const Prediction> slate, double kappa) {
  if (slate.empty()) {
    throw Error("empty candidate slate");
  }
  std::size_t best = 0;
  double best_score = lcb(slate[0], kappa);
  for (std::size_t i = 1; i < slate.size(); ++i) {
    const double score = lcb(slate[i], kappa);
    if (score < best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

// Scores a frozen slate with the model and returns the index ask() would pick.
inline std::size_t choose_candidate(const SurrogateModel& model, const std::vector<EncodedPoint>& slate,
                                    double kappa) {
  std::vector<Prediction> predictions;
  predictions.reserve(slate.size());
  for (const auto& x : slate) {
    predictions.push_back(model.predict(x));
  }
  return select_by_lcb(predictions, kappa);
}

class SearchState {
public:
  SearchState(const ParamSpace& space, std::uint64_t seed) : rng_(seed), cardinality_(space.cardinality()) {}

  const std::vector<TrialRecord>& history() const { return history_; }
  std::size_t evaluated_count() const { return evaluated_.size(); }
  std::uint64_t cardinality() const { return cardinality_; }
  bool exhausted() const { return evaluated_.size() >= cardinality_; }
  bool is_evaluated(const IndexPoint& idx) const { return evaluated_.contains(idx); }

  Rng& rng() { return rng_; }

  const std::vector<TrainingPoint>& training_set() const { return training_; }
  const std::optional<SurrogateModel>& model() const { return model_; }

  // Running minimum over successful trials, in history order.
  std::vector<double> best_so_far() const {
    std::vector<double> trace;
    for (const auto& r : history_) {
      if (!r.ok()) {
        continue;
      }
      trace.push_back(trace.empty() ? *r.value : std::min(trace.back(), *r.value));
    }
    return trace;
  }

  std::optional<TrialRecord> best() const {
    std::optional<TrialRecord> out;
    for (const auto& r : history_) {
      if (r.ok() && (!out || *r.value < *out->value)) {
        out = r;
      }
    }
    return out;
  }

  void tell(const ParamSpace& space, const Configuration& c, TrialRecord record) {
    auto idx = space.to_indices(c);
    if (evaluated_.contains(idx)) {
      throw DuplicateTrial("configuration was already evaluated");
    }
    record.configuration = c;
    if (record.ok()) {
      training_.push_back({EncodedPoint(idx.begin(), idx.end()), *record.value});
    }
    evaluated_.insert(std::move(idx));
    history_.push_back(std::move(record));
  }

  // Refits only when the training set has grown since the last fit.
  const SurrogateModel& refit(const ForestParams& params) {
    if (!model_ || model_->training_set().size() != training_.size()) {
      model_ = SurrogateModel::fit(training_, params);
    }
    return *model_;
  }

private:
  Rng rng_;
  std::uint64_t cardinality_;
  std::set<IndexPoint> evaluated_;
  std::vector<TrialRecord> history_;
  std::vector<TrainingPoint> training_;
  std::optional<SurrogateModel> model_;
};

namespace detail {

inline constexpr std::size_t kRejectionAttempts = 256;
inline constexpr std::uint64_t kEnumerateFallbackCap = std::uint64_t{1} << 22;

inline IndexPoint random_unevaluated(SearchState& state, const ParamSpace& space) {
  if (state.exhausted()) {
    throw SpaceExhausted("every configuration has been evaluated");
  }
  for (std::size_t attempt = 0; attempt < kRejectionAttempts; ++attempt) {
    auto idx = space.sample_indices(state.rng());
    if (!state.is_evaluated(idx)) {
      return idx;
    }
  }
  if (space.cardinality() <= kEnumerateFallbackCap) {
    std::vector<IndexPoint> remaining;
    space.for_each_indices(kEnumerateFallbackCap, [&](const IndexPoint& idx) {
      if (!state.is_evaluated(idx)) {
        remaining.push_back(idx);
      }
    });
    return remaining[uniform_index(state.rng(), remaining.size())];
  }
  // Huge and nearly unexplored: rejection terminates with probability one.
  for (;;) {
    auto idx = space.sample_indices(state.rng());
    if (!state.is_evaluated(idx)) {
      return idx;
    }
  }
}

}  // namespace detail

// Proposes the next configuration: random while fewer than n_initial_random
// points are evaluated, then the lowest-LCB point of a random candidate slate.
inline Configuration ask(SearchState& state, const ParamSpace& space, const AcquisitionSettings& acq,
                         const ForestParams& forest) {
  if (state.exhausted()) {
    throw SpaceExhausted("every configuration has been evaluated");
  }
  if (state.evaluated_count() < acq.n_initial_random || state.training_set().empty()) {
    return space.from_indices(detail::random_unevaluated(state, space));
  }

  const SurrogateModel& model = state.refit(forest);
  std::vector<IndexPoint> slate;
  std::vector<Prediction> predictions;
  slate.reserve(acq.n_candidates_per_ask);
  predictions.reserve(acq.n_candidates_per_ask);
  EncodedPoint x(space.dimension());
  for (std::size_t i = 0; i < acq.n_candidates_per_ask; ++i) {
    auto idx = space.sample_indices(state.rng());
    if (state.is_evaluated(idx)) {
      continue;
    }
    std::copy(idx.begin(), idx.end(), x.begin());
    predictions.push_back(model.predict(x));
    slate.push_back(std::move(idx));
  }
  if (slate.empty()) {
    return space.from_indices(detail::random_unevaluated(state, space));
  }
  return space.from_indices(slate[select_by_lcb(predictions, acq.kappa)]);
}

enum class StopReason { max_evals, wall_clock, space_exhausted };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::max_evals:
      return "max_evals";
    case StopReason::wall_clock:
      return "wall_clock";
    case StopReason::space_exhausted:
      return "space_exhausted";
  }
  return "?";
}

// Evaluates one configuration; trial_index is the record's position in the log.
using Evaluator = std::function<TrialRecord(const Configuration&, std::size_t trial_index)>;
using TrialObserver = std::function<void(const TrialRecord&)>;

struct SearchOutcome {
  SearchState state;
  StopReason reason;
};

inline std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

// Serial ask -> evaluate -> tell loop. The observer sees every record right
// after it is told, so a caller can persist progress incrementally. An
// evaluator that throws is recorded as a run_failed trial before the
// exception propagates.
inline SearchOutcome run_search(const ParamSpace& space, std::uint64_t seed, const SearchBudget& budget,
                                const AcquisitionSettings& acq, const ForestParams& forest,
                                const Evaluator& evaluate, const TrialObserver& observe = {}) {
  budget.validate();
  acq.validate();
  forest.validate(space.dimension());

  using Clock = std::chrono::steady_clock;
  const auto search_start = Clock::now();
  const auto seconds_since = [](Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
  };

  SearchState state(space, seed);
  for (;;) {
    if (budget.max_evals && state.history().size() >= *budget.max_evals) {
      return {std::move(state), StopReason::max_evals};
    }
    if (budget.wall_clock_limit_s && seconds_since(search_start) >= *budget.wall_clock_limit_s) {
      return {std::move(state), StopReason::wall_clock};
    }
    if (state.exhausted()) {
      return {std::move(state), StopReason::space_exhausted};
    }

    const auto trial_start = Clock::now();
    const std::string started_at = iso_utc_now();
    Configuration c = ask(state, space, acq, forest);
    const std::size_t index = state.history().size();

    TrialRecord record;
    std::exception_ptr fault;
    try {
      record = evaluate(c, index);
    } catch (...) {
      fault = std::current_exception();
      record = TrialRecord{};
      record.status = TrialStatus::run_failed;
      record.detail = "evaluator raised an exception";
    }
    record.trial_index = index;
    record.started_at = started_at;
    record.elapsed_total_s = seconds_since(trial_start);
    record.wall_clock_s = seconds_since(search_start);
    if (record.status != TrialStatus::ok) {
      record.value.reset();
    }
    state.tell(space, c, record);
    if (observe) {
      observe(state.history().back());
    }
    if (fault) {
      std::rethrow_exception(fault);
    }
  }
}

}  // namespace tunekit
