#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "feature_oracle.hpp"
#include "graphrfi/features.hpp"
#include "graphrfi/rng.hpp"
#include "test_util.hpp"

using namespace graphrfi;
using testutil::event;
using testutil::user;

namespace {

std::vector<RatingEvent> random_events(Rng& rng, const std::string& uid, int count) {
  std::vector<RatingEvent> events;
  for (int i = 0; i < count; ++i) {
    RatingEvent e = event(uid, "i" + std::to_string(i), 1 + static_cast<int>(rng.below(5)));
    e.timestamp = 1300000000 + static_cast<std::int64_t>(rng.below(220000000));
    e.helpful_votes = static_cast<std::int64_t>(rng.below(40));
    e.unhelpful_votes = static_cast<std::int64_t>(rng.below(12));
    e.review_sentiment = static_cast<int>(rng.below(3)) - 1;
    e.feedback_length = static_cast<std::int64_t>(rng.below(300));
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

TEST_CASE("rating_entropy: degenerate, uniform, and skewed counts") {
  REQUIRE(rating_entropy({0, 0, 0, 0, 10}) == 0.0);
  REQUIRE(rating_entropy({2, 2, 2, 2, 2}) == Catch::Approx(std::log(5.0)).epsilon(1e-12));
  const double expected = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  REQUIRE(rating_entropy({3, 1, 0, 0, 0}) == Catch::Approx(expected).epsilon(1e-12));
  REQUIRE_THROWS_AS(rating_entropy({0, 0, 0, 0, 0}), ValidationError);
}

TEST_CASE("rating_entropy: permutation-invariant, maximized at uniform") {
  auto rng = Rng::derive(17, "entropy-prop");
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<std::int64_t, 5> counts{};
    for (auto& c : counts) c = static_cast<std::int64_t>(rng.below(20));
    if (counts[0] + counts[1] + counts[2] + counts[3] + counts[4] == 0) counts[0] = 1;
    const double h = rating_entropy(counts);
    std::array<std::int64_t, 5> shuffled = counts;
    std::vector<std::int64_t> tmp(shuffled.begin(), shuffled.end());
    rng.shuffle(tmp);
    std::copy(tmp.begin(), tmp.end(), shuffled.begin());
    REQUIRE(rating_entropy(shuffled) == Catch::Approx(h).margin(1e-12));
    REQUIRE(h >= 0.0);
    REQUIRE(h <= std::log(5.0) + 1e-12);
  }
  REQUIRE(rating_entropy({7, 7, 7, 7, 7}) == Catch::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("time_entropy: single year, two equal years, three-way split") {
  const std::int64_t y2015 = 1420070400, y2016 = 1451606400, y2017 = 1483228800;
  REQUIRE(time_entropy({y2015, y2015 + 1000, y2015 + 5000}) == 0.0);
  REQUIRE(time_entropy({y2015, y2015 + 1, y2015 + 2, y2015 + 3, y2016, y2016 + 1, y2016 + 2,
                        y2016 + 3}) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  // proportions (0.5, 0.25, 0.25)
  const double expected = -(0.5 * std::log(0.5) + 0.25 * std::log(0.25) + 0.25 * std::log(0.25));
  REQUIRE(time_entropy({y2015, y2015 + 1, y2016, y2017}) == Catch::Approx(expected).epsilon(1e-12));
  REQUIRE_THROWS_AS(time_entropy({}), ValidationError);
}

TEST_CASE("extract_user_features: single-event degeneracy") {
  const auto u = user("u1", UserLabel::genuine, 6);
  const auto x = extract_user_features(u, {event("u1", "i1", 5, 1500000000, 3, 0, 1, 12)});
  REQUIRE(x[0] == 1.0);
  REQUIRE(x[1] == 6.0);
  REQUIRE(x[2] == 0.0);  // level-1 count
  REQUIRE(x[6] == 1.0);  // level-5 count
  REQUIRE(x[11] == 1.0);  // level-5 ratio
  REQUIRE(x[12] == 1.0);
  REQUIRE(x[13] == 0.0);
  REQUIRE(x[14] == 0.0);
  REQUIRE(x[15] == 3.0);
  REQUIRE(x[27] == 0.0);
  REQUIRE(x[28] == 0.0);
  REQUIRE(x[29] == 1.0);
  REQUIRE(x[30] == 5.0);
  REQUIRE(x[31] == 5.0);
  REQUIRE(x[32] == 5.0);
  REQUIRE(x[33] == 5.0);
  REQUIRE(x[34] == 12.0);
  REQUIRE(x[35] == 1.0);
}

TEST_CASE("extract_user_features: no events leaves only the username length") {
  const auto x = extract_user_features(user("u1", UserLabel::genuine, 9), {});
  for (int i = 0; i < kFeatureDim; ++i) {
    if (i == 1) REQUIRE(x[1] == 9.0);
    else REQUIRE(x[static_cast<std::size_t>(i)] == 0.0);
  }
}

TEST_CASE("extract_user_features: same-date and day-gap boundaries") {
  const auto u = user("u1");
  // same UTC calendar date, 10 hours apart
  auto x = extract_user_features(u, {event("u1", "a", 3, 1500000000),
                                     event("u1", "b", 3, 1500000000 + 36000)});
  REQUIRE(x[27] == 0.0);
  REQUIRE(x[29] == 1.0);
  // one second across midnight: different dates, day gap still 0 by floor
  x = extract_user_features(u, {event("u1", "a", 3, 1500076799),   // 23:59:59
                                event("u1", "b", 3, 1500076801)}); // 00:00:01
  REQUIRE(x[29] == 0.0);
  REQUIRE(x[27] == 0.0);
  // exactly 90 days
  x = extract_user_features(u, {event("u1", "a", 3, 1500000000),
                                event("u1", "b", 3, 1500000000 + 90 * 86400)});
  REQUIRE(x[27] == 90.0);
}

TEST_CASE("extract_user_features matches the brute-force oracle bit-exactly") {
  auto rng = Rng::derive(99, "feature-oracle");
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = user("u" + std::to_string(trial), UserLabel::genuine,
                        static_cast<std::int64_t>(rng.below(30)));
    const auto events = random_events(rng, u.user_id, 1 + static_cast<int>(rng.below(50)));
    const auto got = extract_user_features(u, events);
    const auto want = oracle::user_features(u, events);
    for (int i = 0; i < kFeatureDim; ++i) {
      INFO("trial " << trial << " feature " << i);
      REQUIRE(got[static_cast<std::size_t>(i)] == want[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("ratio features: levels sum to 1, positive+negative <= 1") {
  auto rng = Rng::derive(5, "ratio-prop");
  for (int trial = 0; trial < 1000; ++trial) {
    const auto u = user("u");
    const auto events = random_events(rng, "u", 1 + static_cast<int>(rng.below(30)));
    const auto x = extract_user_features(u, events);
    const double level_sum = x[7] + x[8] + x[9] + x[10] + x[11];
    REQUIRE(level_sum == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(x[12] + x[13] <= 1.0 + 1e-12);
    for (int i : {7, 8, 9, 10, 11, 12, 13, 17, 18}) {
      REQUIRE(x[static_cast<std::size_t>(i)] >= 0.0);
      REQUIRE(x[static_cast<std::size_t>(i)] <= 1.0);
    }
  }
}

TEST_CASE("standardizer: constant column maps to zero, z-scores elsewhere") {
  FeatureMatrix m;
  FeatureVector a{}, b{};
  a[0] = 0.0;
  b[0] = 2.0;
  a[5] = 7.0;
  b[5] = 7.0;  // constant feature
  m.rows = {a, b};
  const auto stats = fit_standardizer(m);
  REQUIRE(stats.mean[0] == 1.0);
  REQUIRE(stats.stddev[0] == 1.0);  // population std of {0,2}
  REQUIRE(stats.stddev[5] == 1.0);  // raw std 0 replaced by 1

  const auto sa = standardize(a, stats);
  const auto sb = standardize(b, stats);
  REQUIRE(sa[0] == -1.0);
  REQUIRE(sb[0] == 1.0);
  REQUIRE(sa[5] == 0.0);
  REQUIRE(sb[5] == 0.0);
}

TEST_CASE("standardizer: clamp at +/-5") {
  FeatureMatrix m;
  FeatureVector a{}, b{};
  a[0] = -1.0;
  b[0] = 1.0;  // mean 0, std 1
  m.rows = {a, b};
  const auto stats = fit_standardizer(m);
  FeatureVector big{};
  big[0] = 1000.0;
  REQUIRE(standardize(big, stats)[0] == 5.0);
  big[0] = -1000.0;
  REQUIRE(standardize(big, stats)[0] == -5.0);
}

TEST_CASE("standardized training matrix has mean 0 and std 1 per live feature") {
  auto rng = Rng::derive(21, "std-prop");
  FeatureMatrix m;
  for (int r = 0; r < 60; ++r) {
    FeatureVector x{};
    for (int f = 0; f < kFeatureDim; ++f)
      x[static_cast<std::size_t>(f)] = 10.0 * rng.uniform() + (f % 3);  // uniform: z-scores stay in range
    m.rows.push_back(x);
  }
  const auto stats = fit_standardizer(m);
  const auto std_m = standardize(m, stats);
  for (int f = 0; f < kFeatureDim; ++f) {
    double sum = 0.0, sq = 0.0;
    for (const auto& row : std_m.rows) {
      sum += row[static_cast<std::size_t>(f)];
      sq += row[static_cast<std::size_t>(f)] * row[static_cast<std::size_t>(f)];
    }
    const double mean = sum / static_cast<double>(std_m.rows.size());
    const double var = sq / static_cast<double>(std_m.rows.size()) - mean * mean;
    REQUIRE(mean == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(std::sqrt(var) == Catch::Approx(1.0).margin(1e-6));
  }
}
