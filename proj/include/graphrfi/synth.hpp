#pragma once

// Seed-deterministic synthetic dataset with planted low-rank rating structure
// and planted fraudsters, used as the acceptance-test oracle in place of the
// non-distributable labeled review corpora.
//
// Genuine ratings: clamp(round(3 + u.v + noise), 1, 5) with per-user/item
// latent vectors of rank `latent_rank`. Behavioral fields are drawn from the
// frozen distributions below so acceptance numbers are stable across machines:
//   genuine    timestamps uniform over a 3-year window, helpful votes in
//              [0,30), unhelpful in [0,6), feedback length in [5,200),
//              sentiment tracking the rating sign with a 20% neutral rate,
//              username length in [5,16)
//   fraudster  all timestamps within a 3-day burst, helpful votes in [0,3),
//              unhelpful in [5,20), feedback length in [1,11), extreme
//              sentiment, username length in [3,9)
// Fraudster ratings are then rewritten by the configured attack kind.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "graphrfi/attacks.hpp"
#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/rng.hpp"

namespace graphrfi {

struct SynthConfig {
  int n_genuine = 300;
  int n_fraudsters = 60;
  int n_items = 100;
  int latent_rank = 2;
  double rating_noise_std = 0.5;
  int ratings_per_user = 20;
  AttackKind attack_kind = AttackKind::random;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_genuine <= 0 || n_items <= 0) throw ValidationError("synth: sizes must be positive");
    if (n_fraudsters < 0) throw ValidationError("synth: n_fraudsters must be >= 0");
    if (latent_rank <= 0 || ratings_per_user <= 0)
      throw ValidationError("synth: latent_rank/ratings_per_user must be positive");
    if (ratings_per_user > n_items)
      throw ValidationError("synth: ratings_per_user cannot exceed n_items");
    if (rating_noise_std < 0.0) throw ValidationError("synth: rating_noise_std must be >= 0");
  }
};

namespace detail {

inline std::string padded_id(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%05d", prefix, i);
  return buf;
}

// Popularity-weighted sampling without replacement (weight 1/(i+1)^0.8),
// via the exponent-key method: a fixed number of draws per user keeps the
// stream layout stable.
inline std::vector<int> sample_items(Rng& rng, int n_items, int k, const std::vector<double>& weight) {
  std::vector<std::pair<double, int>> keys(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_items; ++i) {
    const double u = rng.uniform();
    keys[static_cast<std::size_t>(i)] = {std::pow(u, 1.0 / weight[static_cast<std::size_t>(i)]), i};
  }
  std::partial_sort(keys.begin(), keys.begin() + k, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = keys[static_cast<std::size_t>(i)].second;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  const int n_users = cfg.n_genuine + cfg.n_fraudsters;

  // latent factors; scale chosen so sd(u.v) is ~1.1 at any rank
  const double latent_scale = std::pow(1.21 / static_cast<double>(cfg.latent_rank), 0.25);
  auto latent_rng = Rng::derive(cfg.seed, "synth-latent");
  std::vector<std::vector<double>> user_vec(static_cast<std::size_t>(n_users)),
      item_vec(static_cast<std::size_t>(cfg.n_items));
  for (auto& v : user_vec) {
    v.resize(static_cast<std::size_t>(cfg.latent_rank));
    for (auto& x : v) x = latent_rng.normal(0.0, latent_scale);
  }
  for (auto& v : item_vec) {
    v.resize(static_cast<std::size_t>(cfg.latent_rank));
    for (auto& x : v) x = latent_rng.normal(0.0, latent_scale);
  }

  std::vector<double> item_weight(static_cast<std::size_t>(cfg.n_items));
  for (int i = 0; i < cfg.n_items; ++i)
    item_weight[static_cast<std::size_t>(i)] = 1.0 / std::pow(static_cast<double>(i + 1), 0.8);

  constexpr std::int64_t kGenuineStart = 1400000000;       // mid-2014
  constexpr std::int64_t kGenuineSpan = 94608000;          // three years
  constexpr std::int64_t kFraudsterStart = 1500000000;     // mid-2017
  constexpr std::int64_t kFraudsterSpan = 3 * 86400;       // three-day burst

  for (int i = 0; i < n_users; ++i) {
    const bool fraud = i >= cfg.n_genuine;
    auto rng = Rng::derive(cfg.seed, "synth-user", static_cast<std::uint64_t>(i));

    UserRecord rec;
    rec.user_id = detail::padded_id(fraud ? 'f' : 'g', fraud ? i - cfg.n_genuine : i);
    rec.username_length = fraud ? 3 + static_cast<std::int64_t>(rng.below(6))
                                : 5 + static_cast<std::int64_t>(rng.below(11));
    rec.label = fraud ? UserLabel::fraudster : UserLabel::genuine;
    ds.users.push_back(rec);

    const auto items = detail::sample_items(rng, cfg.n_items, cfg.ratings_per_user, item_weight);
    const std::int64_t burst_start =
        kFraudsterStart + static_cast<std::int64_t>(rng.below(365)) * 86400;
    for (int v : items) {
      RatingEvent e;
      e.user_id = rec.user_id;
      e.item_id = detail::padded_id('i', v);
      double dotp = 0.0;
      for (int r = 0; r < cfg.latent_rank; ++r)
        dotp += user_vec[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] *
                item_vec[static_cast<std::size_t>(v)][static_cast<std::size_t>(r)];
      const auto raw = static_cast<int>(std::llround(3.0 + dotp + rng.normal(0.0, cfg.rating_noise_std)));
      e.rating = raw < 1 ? 1 : (raw > 5 ? 5 : raw);
      if (fraud) {
        e.timestamp = burst_start + static_cast<std::int64_t>(rng.below(kFraudsterSpan));
        e.helpful_votes = static_cast<std::int64_t>(rng.below(3));
        e.unhelpful_votes = 5 + static_cast<std::int64_t>(rng.below(15));
        e.feedback_length = 1 + static_cast<std::int64_t>(rng.below(10));
        e.review_sentiment = rng.below(2) == 0 ? -1 : 1;
      } else {
        e.timestamp = kGenuineStart + static_cast<std::int64_t>(rng.below(kGenuineSpan));
        e.helpful_votes = static_cast<std::int64_t>(rng.below(30));
        e.unhelpful_votes = static_cast<std::int64_t>(rng.below(6));
        e.feedback_length = 5 + static_cast<std::int64_t>(rng.below(195));
        e.review_sentiment = rng.below(10) < 2 ? 0 : (e.rating >= 4 ? 1 : (e.rating <= 2 ? -1 : 0));
      }
      ds.events.push_back(std::move(e));
    }
  }

  if (cfg.n_fraudsters > 0) {
    AttackSpec spec;
    spec.kind = cfg.attack_kind;
    spec.intent = AttackIntent::push;
    spec.seed = splitmix64(cfg.seed ^ fnv1a64("synth-attack"));
    ds = apply_attack(ds, spec);
  }
  return ds;
}

}  // namespace graphrfi
