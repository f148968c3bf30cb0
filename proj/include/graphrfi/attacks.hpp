#pragma once

// Type-specific shilling attacks that rewrite fraudsters' existing ratings:
// per fraudster, the most popular rated item becomes the target and every
// other rated item is a filler. The edge set is preserved exactly; only
// rating values change, and only on fraudster-owned events.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/rng.hpp"

namespace graphrfi {

enum class AttackKind { random, average, hate, mixed };
enum class AttackIntent { push, nuke };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::random: return "random";
    case AttackKind::average: return "average";
    case AttackKind::hate: return "hate";
    default: return "mixed";
  }
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "random") return AttackKind::random;
  if (s == "average") return AttackKind::average;
  if (s == "hate") return AttackKind::hate;
  if (s == "mixed") return AttackKind::mixed;
  throw ValidationError("unknown attack kind: " + s);
}

struct AttackSpec {
  AttackKind kind = AttackKind::random;
  AttackIntent intent = AttackIntent::push;  // hate always acts as nuke
  std::uint64_t seed = 0;
};

struct AttackProfile {
  std::string user_id;
  AttackKind kind = AttackKind::random;  // resolved kind (mixed picks one)
  std::string target_item;
  std::vector<std::string> filler_items;
  std::unordered_map<std::string, int> rewritten;  // item_id -> new rating
};

// The rated item with the greatest global rating count; ties break toward the
// lexicographically smaller item_id.
inline std::string select_target(const std::vector<RatingEvent>& fraudster_events,
                                 const std::unordered_map<std::string, std::int64_t>& item_popularity) {
  if (fraudster_events.empty()) throw ValidationError("select_target: fraudster has no events");
  std::string best;
  std::int64_t best_pop = -1;
  for (const auto& e : fraudster_events) {
    auto it = item_popularity.find(e.item_id);
    const std::int64_t pop = it == item_popularity.end() ? 0 : it->second;
    if (pop > best_pop || (pop == best_pop && e.item_id < best)) {
      best = e.item_id;
      best_pop = pop;
    }
  }
  return best;
}

namespace detail {

// Half-away-from-zero rounding, clamped to the valid star range.
inline int round_rating(double x) {
  const auto r = static_cast<int>(std::llround(x));
  return r < 1 ? 1 : (r > 5 ? 5 : r);
}

}  // namespace detail

struct DatasetRatingStats {
  double global_mean = 0.0;
  double global_std = 0.0;  // population
  std::unordered_map<std::string, double> item_mean;
  std::unordered_map<std::string, std::int64_t> item_count;
};

inline DatasetRatingStats rating_stats(const Dataset& ds) {
  DatasetRatingStats s;
  if (ds.events.empty()) return s;
  double sum = 0.0;
  std::unordered_map<std::string, double> item_sum;
  for (const auto& e : ds.events) {
    sum += e.rating;
    item_sum[e.item_id] += e.rating;
    s.item_count[e.item_id] += 1;
  }
  s.global_mean = sum / static_cast<double>(ds.events.size());
  double ss = 0.0;
  for (const auto& e : ds.events) {
    const double d = e.rating - s.global_mean;
    ss += d * d;
  }
  s.global_std = std::sqrt(ss / static_cast<double>(ds.events.size()));
  for (const auto& [item, total] : item_sum)
    s.item_mean[item] = total / static_cast<double>(s.item_count[item]);
  return s;
}

// Builds the per-fraudster rewrite plan. All statistics (global mean/std,
// item means, popularity) come from the input dataset before any rewriting.
inline std::vector<AttackProfile> attack_profiles(const Dataset& ds, const AttackSpec& spec) {
  const auto stats = rating_stats(ds);
  std::unordered_map<std::string, std::vector<RatingEvent>> by_user;
  for (const auto& e : ds.events) by_user[e.user_id].push_back(e);

  std::vector<std::string> fraudsters;
  for (const auto& u : ds.users)
    if (u.label == UserLabel::fraudster && by_user.count(u.user_id)) fraudsters.push_back(u.user_id);
  std::sort(fraudsters.begin(), fraudsters.end());

  std::vector<AttackProfile> profiles;
  profiles.reserve(fraudsters.size());
  for (const auto& uid : fraudsters) {
    const auto& events = by_user.at(uid);
    AttackProfile prof;
    prof.user_id = uid;
    prof.kind = spec.kind;
    if (spec.kind == AttackKind::mixed) {
      auto kind_rng = Rng::derive(spec.seed, "attack-kind", fnv1a64(uid));
      prof.kind = static_cast<AttackKind>(kind_rng.below(3));  // random, average, hate
    }
    prof.target_item = select_target(events, stats.item_count);
    const bool nuke = prof.kind == AttackKind::hate || spec.intent == AttackIntent::nuke;
    const int target_rating = prof.kind == AttackKind::hate ? 1 : (nuke ? 1 : 5);

    auto rating_rng = Rng::derive(spec.seed, "attack-ratings", fnv1a64(uid));
    for (const auto& e : events) {
      if (e.item_id == prof.target_item) {
        prof.rewritten[e.item_id] = target_rating;
        continue;
      }
      prof.filler_items.push_back(e.item_id);
      switch (prof.kind) {
        case AttackKind::random:
          prof.rewritten[e.item_id] =
              detail::round_rating(rating_rng.normal(stats.global_mean, stats.global_std));
          break;
        case AttackKind::average:
          prof.rewritten[e.item_id] = detail::round_rating(stats.item_mean.at(e.item_id));
          break;
        case AttackKind::hate:
          prof.rewritten[e.item_id] = 5;
          break;
        case AttackKind::mixed:
          throw RuntimeFailure("attack_profiles: unresolved mixed kind");
      }
    }
    profiles.push_back(std::move(prof));
  }
  return profiles;
}

// Rewrites fraudster ratings in place; genuine users' events are untouched.
inline Dataset apply_attack(const Dataset& ds, const AttackSpec& spec) {
  bool any_fraudster = false;
  for (const auto& u : ds.users) any_fraudster |= u.label == UserLabel::fraudster;
  if (!any_fraudster) throw ValidationError("apply_attack: dataset has no labeled fraudsters");

  const auto profiles = attack_profiles(ds, spec);
  std::unordered_map<std::string, const AttackProfile*> by_user;
  for (const auto& p : profiles) by_user.emplace(p.user_id, &p);

  Dataset out = ds;
  for (auto& e : out.events) {
    auto it = by_user.find(e.user_id);
    if (it == by_user.end()) continue;
    e.rating = it->second->rewritten.at(e.item_id);
  }
  return out;
}

}  // namespace graphrfi
