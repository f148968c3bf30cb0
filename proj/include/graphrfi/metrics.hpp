#pragma once

// Rating-accuracy and fraudster-detection metrics. Positive class is
// fraudster (y = 1) throughout.

#include <cmath>
#include <cstdint>
#include <vector>

#include "graphrfi/errors.hpp"

namespace graphrfi {

inline double rmse(const std::vector<std::pair<double, double>>& truth_pred) {
  if (truth_pred.empty()) throw ValidationError("rmse: empty pair list");
  double acc = 0.0;
  for (const auto& [r, rhat] : truth_pred) {
    const double d = r - rhat;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(truth_pred.size()));
}

inline double mae(const std::vector<std::pair<double, double>>& truth_pred) {
  if (truth_pred.empty()) throw ValidationError("mae: empty pair list");
  double acc = 0.0;
  for (const auto& [r, rhat] : truth_pred) acc += std::fabs(r - rhat);
  return acc / static_cast<double>(truth_pred.size());
}

struct ClassificationReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool degenerate_precision = false;  // no predicted positives
  bool degenerate_recall = false;     // no actual positives
};

inline ClassificationReport precision_recall_f1(const std::vector<int>& labels,
                                                const std::vector<int>& predictions) {
  if (labels.size() != predictions.size())
    throw ValidationError("precision_recall_f1: size mismatch");
  ClassificationReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == 1, pred = predictions[i] == 1;
    if (truth && pred) ++r.tp;
    else if (!truth && pred) ++r.fp;
    else if (truth && !pred) ++r.fn;
    else ++r.tn;
  }
  if (r.tp + r.fp > 0) {
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  } else {
    r.degenerate_precision = true;
  }
  if (r.tp + r.fn > 0) {
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  } else {
    r.degenerate_recall = true;
  }
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  bool has_classification = false;
  ClassificationReport cls;
};

struct SweepPoint {
  double fraction = 0.0;
  MetricsReport metrics;
};

struct SweepCurve {
  std::vector<SweepPoint> points;  // fractions strictly increasing
};

}  // namespace graphrfi
