#pragma once

// Canonical on-disk data format and deterministic train/test splitting.
//
// A dataset is line-delimited JSON, UTF-8, one record per line, with two
// record kinds discriminated by "kind":
//   {"kind":"user","user_id":str,"username_length":int,
//    "label":"genuine"|"fraudster"|"unlabeled"}
//   {"kind":"rating","user_id":str,"item_id":str,"rating":int,"timestamp":int,
//    "helpful_votes":int,"unhelpful_votes":int,"review_sentiment":int,
//    "feedback_length":int}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "graphrfi/errors.hpp"
#include "graphrfi/rng.hpp"

namespace graphrfi {

enum class UserLabel { genuine, fraudster, unlabeled };

inline const char* to_string(UserLabel l) {
  switch (l) {
    case UserLabel::genuine: return "genuine";
    case UserLabel::fraudster: return "fraudster";
    default: return "unlabeled";
  }
}

struct RatingEvent {
  std::string user_id;
  std::string item_id;
  int rating = 0;                  // stars, 1..5
  std::int64_t timestamp = 0;      // Unix seconds
  std::int64_t helpful_votes = 0;
  std::int64_t unhelpful_votes = 0;
  int review_sentiment = 0;        // -1, 0, 1
  std::int64_t feedback_length = 0;  // words

  bool operator==(const RatingEvent&) const = default;
};

struct UserRecord {
  std::string user_id;
  std::int64_t username_length = 0;
  UserLabel label = UserLabel::unlabeled;

  bool operator==(const UserRecord&) const = default;
};

struct Dataset {
  std::vector<UserRecord> users;
  std::vector<RatingEvent> events;

  bool operator==(const Dataset&) const = default;

  const UserRecord* find_user(const std::string& id) const {
    for (const auto& u : users)
      if (u.user_id == id) return &u;
    return nullptr;
  }
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double rating_test_fraction = 0.2;
  double user_train_fraction = 0.8;
};

namespace detail {

inline std::string edge_key(const std::string& user, const std::string& item) {
  return user + '\x1f' + item;
}

[[noreturn]] inline void parse_fail(std::string_view source, std::size_t line, const std::string& what) {
  throw ValidationError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

inline std::int64_t require_int(const nlohmann::json& j, const char* field, std::string_view src,
                                std::size_t line) {
  if (!j.contains(field) || !j[field].is_number_integer())
    parse_fail(src, line, std::string("missing or non-integer field \"") + field + "\"");
  return j[field].get<std::int64_t>();
}

inline std::string require_str(const nlohmann::json& j, const char* field, std::string_view src,
                               std::size_t line) {
  if (!j.contains(field) || !j[field].is_string())
    parse_fail(src, line, std::string("missing or non-string field \"") + field + "\"");
  return j[field].get<std::string>();
}

}  // namespace detail

// Parses and validates a line-delimited JSON dataset. Fails loudly with the
// offending line number; never drops records silently.
inline Dataset parse_dataset_stream(std::istream& in, std::string_view source_name) {
  Dataset ds;
  std::unordered_set<std::string> user_ids;
  std::unordered_set<std::string> edges;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::size_t, RatingEvent>> pending;  // events with line numbers

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) detail::parse_fail(source_name, lineno, "malformed JSON");
    const std::string kind = detail::require_str(j, "kind", source_name, lineno);
    if (kind == "user") {
      UserRecord u;
      u.user_id = detail::require_str(j, "user_id", source_name, lineno);
      u.username_length = detail::require_int(j, "username_length", source_name, lineno);
      if (u.username_length < 0)
        detail::parse_fail(source_name, lineno, "negative field \"username_length\"");
      const std::string label = detail::require_str(j, "label", source_name, lineno);
      if (label == "genuine") u.label = UserLabel::genuine;
      else if (label == "fraudster") u.label = UserLabel::fraudster;
      else if (label == "unlabeled") u.label = UserLabel::unlabeled;
      else detail::parse_fail(source_name, lineno, "unknown label \"" + label + "\"");
      if (!user_ids.insert(u.user_id).second)
        detail::parse_fail(source_name, lineno, "duplicate user_id \"" + u.user_id + "\"");
      ds.users.push_back(std::move(u));
    } else if (kind == "rating") {
      RatingEvent e;
      e.user_id = detail::require_str(j, "user_id", source_name, lineno);
      e.item_id = detail::require_str(j, "item_id", source_name, lineno);
      e.rating = static_cast<int>(detail::require_int(j, "rating", source_name, lineno));
      if (e.rating < 1 || e.rating > 5)
        detail::parse_fail(source_name, lineno,
                           "field \"rating\" out of range [1,5]: " + std::to_string(e.rating));
      e.timestamp = detail::require_int(j, "timestamp", source_name, lineno);
      e.helpful_votes = detail::require_int(j, "helpful_votes", source_name, lineno);
      e.unhelpful_votes = detail::require_int(j, "unhelpful_votes", source_name, lineno);
      if (e.helpful_votes < 0 || e.unhelpful_votes < 0)
        detail::parse_fail(source_name, lineno, "negative vote count");
      e.review_sentiment = static_cast<int>(detail::require_int(j, "review_sentiment", source_name, lineno));
      if (e.review_sentiment < -1 || e.review_sentiment > 1)
        detail::parse_fail(source_name, lineno, "field \"review_sentiment\" not in {-1,0,1}");
      e.feedback_length = detail::require_int(j, "feedback_length", source_name, lineno);
      if (e.feedback_length < 0)
        detail::parse_fail(source_name, lineno, "negative field \"feedback_length\"");
      if (!edges.insert(detail::edge_key(e.user_id, e.item_id)).second)
        detail::parse_fail(source_name, lineno,
                           "duplicate (user,item) pair (" + e.user_id + "," + e.item_id + ")");
      pending.emplace_back(lineno, std::move(e));
    } else {
      detail::parse_fail(source_name, lineno, "unknown record kind \"" + kind + "\"");
    }
  }
  for (auto& [ln, e] : pending) {
    if (!user_ids.count(e.user_id))
      detail::parse_fail(source_name, ln, "rating references unknown user \"" + e.user_id + "\"");
    ds.events.push_back(std::move(e));
  }
  return ds;
}

inline Dataset parse_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  return parse_dataset_stream(in, path);
}

inline void write_dataset(const Dataset& ds, std::ostream& out) {
  for (const auto& u : ds.users) {
    nlohmann::ordered_json j;
    j["kind"] = "user";
    j["user_id"] = u.user_id;
    j["username_length"] = u.username_length;
    j["label"] = to_string(u.label);
    out << j.dump() << '\n';
  }
  for (const auto& e : ds.events) {
    nlohmann::ordered_json j;
    j["kind"] = "rating";
    j["user_id"] = e.user_id;
    j["item_id"] = e.item_id;
    j["rating"] = e.rating;
    j["timestamp"] = e.timestamp;
    j["helpful_votes"] = e.helpful_votes;
    j["unhelpful_votes"] = e.unhelpful_votes;
    j["review_sentiment"] = e.review_sentiment;
    j["feedback_length"] = e.feedback_length;
    out << j.dump() << '\n';
  }
}

inline void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write dataset file: " + path);
  write_dataset(ds, out);
}

inline std::unordered_map<std::string, UserLabel> label_map(const Dataset& ds) {
  std::unordered_map<std::string, UserLabel> m;
  m.reserve(ds.users.size());
  for (const auto& u : ds.users) m.emplace(u.user_id, u.label);
  return m;
}

struct RatingSplit {
  std::vector<RatingEvent> train;  // genuine remainder + all fraudster and unlabeled events
  std::vector<RatingEvent> test;   // sampled genuine events only
};

// Holds out round(rating_test_fraction * #genuine events) genuine events,
// sampled globally and uniformly. Fraudster and unlabeled events always train.
inline RatingSplit split_ratings(const Dataset& ds, const SplitSpec& spec) {
  if (spec.rating_test_fraction <= 0.0 || spec.rating_test_fraction >= 1.0)
    throw ValidationError("rating_test_fraction must be in (0,1)");
  const auto labels = label_map(ds);
  std::vector<std::size_t> genuine_idx;
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    auto it = labels.find(ds.events[i].user_id);
    if (it != labels.end() && it->second == UserLabel::genuine) genuine_idx.push_back(i);
  }
  if (genuine_idx.empty()) throw ValidationError("split_ratings: dataset has no genuine users' events");

  auto rng = Rng::derive(spec.seed, "split-ratings");
  rng.shuffle(genuine_idx);
  const auto n_test =
      static_cast<std::size_t>(std::llround(spec.rating_test_fraction * static_cast<double>(genuine_idx.size())));
  std::vector<bool> in_test(ds.events.size(), false);
  for (std::size_t k = 0; k < n_test; ++k) in_test[genuine_idx[k]] = true;

  RatingSplit split;
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    (in_test[i] ? split.test : split.train).push_back(ds.events[i]);
  }
  return split;
}

struct UserSplit {
  std::vector<UserRecord> train;
  std::vector<UserRecord> test;
};

// Stratified partition of the labeled users; unlabeled users land in neither.
inline UserSplit split_users(const Dataset& ds, const SplitSpec& spec) {
  if (spec.user_train_fraction <= 0.0 || spec.user_train_fraction >= 1.0)
    throw ValidationError("user_train_fraction must be in (0,1)");
  std::vector<UserRecord> genuine, fraud;
  for (const auto& u : ds.users) {
    if (u.label == UserLabel::genuine) genuine.push_back(u);
    else if (u.label == UserLabel::fraudster) fraud.push_back(u);
  }
  if (genuine.empty()) throw ValidationError("split_users: no labeled genuine users");
  if (fraud.empty()) throw ValidationError("split_users: no labeled fraudsters");

  UserSplit out;
  int stratum = 0;
  for (auto* cls : {&genuine, &fraud}) {
    std::sort(cls->begin(), cls->end(),
              [](const UserRecord& a, const UserRecord& b) { return a.user_id < b.user_id; });
    auto rng = Rng::derive(spec.seed, "split-users", static_cast<std::uint64_t>(stratum++));
    rng.shuffle(*cls);
    const auto n_train =
        static_cast<std::size_t>(std::llround(spec.user_train_fraction * static_cast<double>(cls->size())));
    for (std::size_t i = 0; i < cls->size(); ++i) {
      (i < n_train ? out.train : out.test).push_back((*cls)[i]);
    }
  }
  return out;
}

// Fixed seeded permutation of the fraudster ids; a fraction selects a prefix,
// so the injected sets nest monotonically across sweep points.
inline std::vector<std::string> injection_order(const Dataset& ds, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& u : ds.users)
    if (u.label == UserLabel::fraudster) ids.push_back(u.user_id);
  std::sort(ids.begin(), ids.end());
  auto rng = Rng::derive(seed, "inject-fraudsters");
  rng.shuffle(ids);
  return ids;
}

// Appends the events of round(fraction * #fraudsters) seed-chosen fraudsters.
// `train_events` is expected to be free of fraudster events (the genuine base).
inline std::vector<RatingEvent> inject_fraudsters(std::vector<RatingEvent> train_events,
                                                  const Dataset& ds, double fraction,
                                                  std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ValidationError("inject_fraudsters: fraction must be in [0,1]");
  const auto order = injection_order(ds, seed);
  const auto n_pick =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  std::unordered_set<std::string> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_pick));
  for (const auto& e : ds.events) {
    if (picked.count(e.user_id)) train_events.push_back(e);
  }
  return train_events;
}

// Strips fraudster-owned events: the fraction-0 baseline that injection grows.
inline std::vector<RatingEvent> without_fraudster_events(const std::vector<RatingEvent>& events,
                                                         const Dataset& ds) {
  const auto labels = label_map(ds);
  std::vector<RatingEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    auto it = labels.find(e.user_id);
    if (it == labels.end() || it->second != UserLabel::fraudster) out.push_back(e);
  }
  return out;
}

}  // namespace graphrfi
