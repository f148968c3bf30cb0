#pragma once

// Weighted bipartite rating graph with dense, deterministic indexing.
// Ids are re-indexed sorted lexicographically so parameter tables are arrays
// and training order is reproducible.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"

namespace graphrfi {

struct RatingGraph {
  std::vector<std::string> user_ids;  // dense index -> id, sorted
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  // adjacency entries are (neighbor dense index, rating), ascending by index
  std::vector<std::vector<std::pair<int, int>>> user_adj;
  std::vector<std::vector<std::pair<int, int>>> item_adj;
  std::size_t edge_count = 0;

  int n_users() const { return static_cast<int>(user_ids.size()); }
  int n_items() const { return static_cast<int>(item_ids.size()); }
};

// Builds the graph over an explicit item universe (edges may cover a subset;
// items outside `events` still get indices, e.g. items seen only in held-out
// ratings).
inline RatingGraph build_graph(const std::vector<UserRecord>& users,
                               const std::vector<RatingEvent>& events,
                               const std::vector<std::string>& item_universe) {
  RatingGraph g;
  g.user_ids.reserve(users.size());
  for (const auto& u : users) g.user_ids.push_back(u.user_id);
  std::sort(g.user_ids.begin(), g.user_ids.end());
  for (std::size_t i = 0; i < g.user_ids.size(); ++i) {
    if (!g.user_index.emplace(g.user_ids[i], static_cast<int>(i)).second)
      throw ValidationError("build_graph: duplicate user_id \"" + g.user_ids[i] + "\"");
  }

  g.item_ids = item_universe;
  std::sort(g.item_ids.begin(), g.item_ids.end());
  g.item_ids.erase(std::unique(g.item_ids.begin(), g.item_ids.end()), g.item_ids.end());
  for (std::size_t i = 0; i < g.item_ids.size(); ++i)
    g.item_index.emplace(g.item_ids[i], static_cast<int>(i));

  g.user_adj.resize(g.user_ids.size());
  g.item_adj.resize(g.item_ids.size());
  std::unordered_set<std::int64_t> seen;
  seen.reserve(events.size() * 2);
  for (const auto& e : events) {
    auto uit = g.user_index.find(e.user_id);
    if (uit == g.user_index.end())
      throw ValidationError("build_graph: event references unknown user \"" + e.user_id + "\"");
    auto iit = g.item_index.find(e.item_id);
    if (iit == g.item_index.end())
      throw ValidationError("build_graph: event references item outside universe \"" + e.item_id + "\"");
    const int u = uit->second, v = iit->second;
    const std::int64_t key = static_cast<std::int64_t>(u) * static_cast<std::int64_t>(g.item_ids.size() + 1) + v;
    if (!seen.insert(key).second)
      throw ValidationError("build_graph: duplicate edge (" + e.user_id + "," + e.item_id + ")");
    g.user_adj[static_cast<std::size_t>(u)].emplace_back(v, e.rating);
    g.item_adj[static_cast<std::size_t>(v)].emplace_back(u, e.rating);
    ++g.edge_count;
  }
  for (auto& adj : g.user_adj) std::sort(adj.begin(), adj.end());
  for (auto& adj : g.item_adj) std::sort(adj.begin(), adj.end());
  return g;
}

inline RatingGraph build_graph(const std::vector<UserRecord>& users,
                               const std::vector<RatingEvent>& events) {
  std::vector<std::string> items;
  items.reserve(events.size());
  for (const auto& e : events) items.push_back(e.item_id);
  return build_graph(users, events, items);
}

struct Neighbor {
  int index = 0;    // dense index on the opposite side, or the node itself
  int rating = 0;   // 0 for the self entry (no rating exists for the self loop)
  bool is_self = false;
};

// I(u) = N(u) + the node itself; neighbors ascending by index, self last.
inline std::vector<Neighbor> user_neighbor_set(const RatingGraph& g, int user) {
  if (user < 0 || user >= g.n_users()) throw ValidationError("user_neighbor_set: unknown user index");
  std::vector<Neighbor> out;
  out.reserve(g.user_adj[static_cast<std::size_t>(user)].size() + 1);
  for (const auto& [v, r] : g.user_adj[static_cast<std::size_t>(user)]) out.push_back({v, r, false});
  out.push_back({user, 0, true});
  return out;
}

inline std::vector<Neighbor> item_neighbor_set(const RatingGraph& g, int item) {
  if (item < 0 || item >= g.n_items()) throw ValidationError("item_neighbor_set: unknown item index");
  std::vector<Neighbor> out;
  out.reserve(g.item_adj[static_cast<std::size_t>(item)].size() + 1);
  for (const auto& [u, r] : g.item_adj[static_cast<std::size_t>(item)]) out.push_back({u, r, false});
  out.push_back({item, 0, true});
  return out;
}

}  // namespace graphrfi
