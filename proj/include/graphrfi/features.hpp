#pragma once

// Per-user behavioral feature vector x_u and the feature matrix X.
//
// Canonical 36-entry index map (frozen; checkpoints depend on it):
//   [0]     number of rated products
//   [1]     username length
//   [2..6]  count of rating level 1..5
//   [7..11] ratio of rating level 1..5
//   [12]    positive-rating ratio (levels 4,5)
//   [13]    negative-rating ratio (levels 1,2)
//   [14]    rating entropy, natural log
//   [15]    total helpful votes
//   [16]    total unhelpful votes
//   [17]    helpful ratio          [18] unhelpful ratio
//   [19]    mean helpful           [20] mean unhelpful
//   [21..23] median/min/max helpful votes per review
//   [24..26] median/min/max unhelpful votes per review
//   [27]    day gap between first and last rating
//   [28]    time entropy over rating years, natural log
//   [29]    same-date indicator (first and last rating on same UTC date)
//   [30..33] median/min/max/mean rating
//   [34]    mean feedback length
//   [35]    mean review sentiment bucketed to {-1,0,1}

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"

namespace graphrfi {

inline constexpr int kFeatureDim = 36;

using FeatureVector = std::array<double, kFeatureDim>;

struct FeatureMatrix {
  std::vector<FeatureVector> rows;  // one per user, dataset user order
};

struct StandardizerStats {
  std::array<double, kFeatureDim> mean{};
  std::array<double, kFeatureDim> stddev{};  // 1 where the raw std is 0
};

inline std::chrono::year_month_day utc_date(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const auto dp = floor<days>(sys_seconds{seconds{unix_seconds}});
  return year_month_day{dp};
}

inline int utc_year(std::int64_t unix_seconds) { return static_cast<int>(utc_date(unix_seconds).year()); }

// -sum_r P_r ln P_r over the five rating levels, with the 0*ln0 = 0 convention.
inline double rating_entropy(const std::array<std::int64_t, 5>& level_counts) {
  std::int64_t total = 0;
  for (auto c : level_counts) {
    if (c < 0) throw ValidationError("rating_entropy: negative count");
    total += c;
  }
  if (total == 0) throw ValidationError("rating_entropy: all counts zero");
  double h = 0.0;
  for (auto c : level_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

// Skewness of rating activity over calendar years (UTC buckets). A single-year
// span gives 0.
inline double time_entropy(const std::vector<std::int64_t>& timestamps) {
  if (timestamps.empty()) throw ValidationError("time_entropy: empty timestamp list");
  std::map<int, std::int64_t> per_year;
  for (auto ts : timestamps) per_year[utc_year(ts)]++;
  const double total = static_cast<double>(timestamps.size());
  double h = 0.0;
  for (const auto& [year, count] : per_year) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log(p);
  }
  return h;
}

namespace detail {

// Median of an unsorted copy; even sizes average the two middle values.
inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace detail

// All 36 entries of the canonical map. Events must belong to `user`; an empty
// event list yields the zero vector except the username length.
inline FeatureVector extract_user_features(const UserRecord& user,
                                           const std::vector<RatingEvent>& events) {
  FeatureVector x{};
  x[1] = static_cast<double>(user.username_length);
  if (events.empty()) return x;

  const double n = static_cast<double>(events.size());
  x[0] = n;

  std::array<std::int64_t, 5> level_counts{};
  std::int64_t total_helpful = 0, total_unhelpful = 0, total_feedback = 0, total_sentiment = 0;
  std::vector<double> helpful, unhelpful, ratings;
  std::vector<std::int64_t> timestamps;
  helpful.reserve(events.size());
  unhelpful.reserve(events.size());
  ratings.reserve(events.size());
  timestamps.reserve(events.size());
  for (const auto& e : events) {
    level_counts[static_cast<std::size_t>(e.rating - 1)]++;
    total_helpful += e.helpful_votes;
    total_unhelpful += e.unhelpful_votes;
    total_feedback += e.feedback_length;
    total_sentiment += e.review_sentiment;
    helpful.push_back(static_cast<double>(e.helpful_votes));
    unhelpful.push_back(static_cast<double>(e.unhelpful_votes));
    ratings.push_back(static_cast<double>(e.rating));
    timestamps.push_back(e.timestamp);
  }

  for (int r = 0; r < 5; ++r) {
    x[2 + static_cast<std::size_t>(r)] = static_cast<double>(level_counts[static_cast<std::size_t>(r)]);
    x[7 + static_cast<std::size_t>(r)] = static_cast<double>(level_counts[static_cast<std::size_t>(r)]) / n;
  }
  x[12] = static_cast<double>(level_counts[3] + level_counts[4]) / n;  // high = {4,5}
  x[13] = static_cast<double>(level_counts[0] + level_counts[1]) / n;  // low = {1,2}
  x[14] = rating_entropy(level_counts);

  x[15] = static_cast<double>(total_helpful);
  x[16] = static_cast<double>(total_unhelpful);
  const std::int64_t total_votes = total_helpful + total_unhelpful;
  x[17] = total_votes > 0 ? static_cast<double>(total_helpful) / static_cast<double>(total_votes) : 0.0;
  x[18] = total_votes > 0 ? static_cast<double>(total_unhelpful) / static_cast<double>(total_votes) : 0.0;
  x[19] = static_cast<double>(total_helpful) / n;
  x[20] = static_cast<double>(total_unhelpful) / n;
  x[21] = detail::median_of(helpful);
  x[22] = *std::min_element(helpful.begin(), helpful.end());
  x[23] = *std::max_element(helpful.begin(), helpful.end());
  x[24] = detail::median_of(unhelpful);
  x[25] = *std::min_element(unhelpful.begin(), unhelpful.end());
  x[26] = *std::max_element(unhelpful.begin(), unhelpful.end());

  const auto [min_ts_it, max_ts_it] = std::minmax_element(timestamps.begin(), timestamps.end());
  x[27] = static_cast<double>((*max_ts_it - *min_ts_it) / 86400);
  x[28] = time_entropy(timestamps);
  x[29] = utc_date(*min_ts_it) == utc_date(*max_ts_it) ? 1.0 : 0.0;

  x[30] = detail::median_of(ratings);
  x[31] = *std::min_element(ratings.begin(), ratings.end());
  x[32] = *std::max_element(ratings.begin(), ratings.end());
  double rating_sum = 0.0;
  for (double r : ratings) rating_sum += r;
  x[33] = rating_sum / n;

  x[34] = static_cast<double>(total_feedback) / n;
  // Sign of the integer sentiment sum: exact bucketing of the mean's sign.
  x[35] = total_sentiment > 0 ? 1.0 : (total_sentiment < 0 ? -1.0 : 0.0);
  return x;
}

// Feature matrix in dataset user order; each user's own events only.
inline FeatureMatrix extract_features(const Dataset& ds,
                                      const std::vector<RatingEvent>& events) {
  std::unordered_map<std::string, std::vector<RatingEvent>> by_user;
  for (const auto& e : events) by_user[e.user_id].push_back(e);
  FeatureMatrix m;
  m.rows.reserve(ds.users.size());
  static const std::vector<RatingEvent> kNone;
  for (const auto& u : ds.users) {
    auto it = by_user.find(u.user_id);
    m.rows.push_back(extract_user_features(u, it == by_user.end() ? kNone : it->second));
  }
  return m;
}

// Per-feature mean and population standard deviation over the given rows
// (training users only, to keep test statistics out of the scaler).
inline StandardizerStats fit_standardizer(const FeatureMatrix& matrix,
                                          const std::vector<std::size_t>& row_indices) {
  if (row_indices.empty()) throw ValidationError("fit_standardizer: no rows");
  StandardizerStats s;
  const double n = static_cast<double>(row_indices.size());
  for (int f = 0; f < kFeatureDim; ++f) {
    double sum = 0.0;
    for (auto r : row_indices) sum += matrix.rows[r][static_cast<std::size_t>(f)];
    const double mean = sum / n;
    double ss = 0.0;
    for (auto r : row_indices) {
      const double d = matrix.rows[r][static_cast<std::size_t>(f)] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    s.mean[static_cast<std::size_t>(f)] = mean;
    s.stddev[static_cast<std::size_t>(f)] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

inline StandardizerStats fit_standardizer(const FeatureMatrix& matrix) {
  std::vector<std::size_t> all(matrix.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_standardizer(matrix, all);
}

inline constexpr double kStandardizeClamp = 5.0;

inline FeatureVector standardize(const FeatureVector& x, const StandardizerStats& s) {
  FeatureVector out;
  for (int f = 0; f < kFeatureDim; ++f) {
    const auto i = static_cast<std::size_t>(f);
    out[i] = std::clamp((x[i] - s.mean[i]) / s.stddev[i], -kStandardizeClamp, kStandardizeClamp);
  }
  return out;
}

inline FeatureMatrix standardize(const FeatureMatrix& m, const StandardizerStats& s) {
  FeatureMatrix out;
  out.rows.reserve(m.rows.size());
  for (const auto& r : m.rows) out.rows.push_back(standardize(r, s));
  return out;
}

}  // namespace graphrfi
