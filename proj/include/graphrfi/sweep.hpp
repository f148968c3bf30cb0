#pragma once

// Robustness sweep: retrain from scratch at growing fraudster-injection
// fractions (nested poison sets) and evaluate against one fixed test split.

#include <functional>
#include <vector>

#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/evaluate.hpp"
#include "graphrfi/metrics.hpp"
#include "graphrfi/train.hpp"

namespace graphrfi {

inline SweepCurve robustness_sweep(
    const Dataset& ds, const TrainConfig& cfg, const SplitSpec& split,
    const std::vector<double>& fractions,
    const std::function<void(const SweepPoint&)>& on_point = nullptr) {
  if (fractions.empty()) throw ValidationError("robustness_sweep: no fractions");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] < 0.0 || fractions[i] > 1.0)
      throw ValidationError("robustness_sweep: fractions must lie in [0,1]");
    if (i > 0 && fractions[i] <= fractions[i - 1])
      throw ValidationError("robustness_sweep: fractions must be strictly increasing");
  }

  const RatingSplit ratings = split_ratings(ds, split);
  const UserSplit users = split_users(ds, split);
  const auto base = without_fraudster_events(ratings.train, ds);

  SweepCurve curve;
  for (double fraction : fractions) {
    try {
      const auto train_events = inject_fraudsters(base, ds, fraction, split.seed);
      const TrainResult tr = fit(ds, train_events, &users, cfg);
      SweepPoint point;
      point.fraction = fraction;
      point.metrics = evaluate_model(ds, train_events, ratings.test, &users, tr.params, tr.dims,
                                     tr.stats, cfg.threads);
      if (on_point) on_point(point);
      curve.points.push_back(point);
    } catch (const std::exception& e) {
      throw RuntimeFailure("sweep failed at fraction " + std::to_string(fraction) + ": " + e.what());
    }
  }
  return curve;
}

}  // namespace graphrfi
