#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfair/error.hpp"
#include "cfair/graph.hpp"

namespace cfair {

inline constexpr std::size_t kMaxDsepNodes = 16;

enum class PathRole { collider, non_collider };

struct Path {
  std::vector<std::string> nodes;
  std::vector<bool> forward;     // forward[i]: edge points nodes[i] -> nodes[i+1]
  std::vector<PathRole> roles;   // one per interior node

  std::string to_string() const {
    std::string s = nodes.empty() ? "" : nodes.front();
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      s += (forward[i] ? " -> " : " <- ") + nodes[i + 1];
    return s;
  }
  friend bool operator==(const Path&, const Path&) = default;
};

struct PathStatus {
  bool open = false;
  std::set<std::string> blocking_nodes;  // unconditioned colliders
  std::set<std::string> opened_by;       // conditioned colliders
  std::set<std::string> cut_by;          // conditioned non-colliders
};

using NodeSet = std::set<std::string>;

namespace detail {

inline void require_resolved(const CausalGraph& g) {
  if (!g.fully_directed())
    throw input_error("graph has unresolved bidirected edges; query each resolution");
  if (g.nodes().size() > kMaxDsepNodes)
    throw input_error("graph has " + std::to_string(g.nodes().size()) +
                      " nodes; d-separation is limited to " + std::to_string(kMaxDsepNodes));
}

inline void require_node(const CausalGraph& g, const std::string& n) {
  if (!g.has_node(n)) throw input_error("unknown node '" + n + "'");
}

inline NodeSet descendants_inclusive(const CausalGraph& g, const std::string& n) {
  NodeSet out{n};
  std::deque<std::string> q{n};
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    for (const auto& c : g.children(u))
      if (out.insert(c).second) q.push_back(c);
  }
  return out;
}

}  // namespace detail

// Caller's conditioning set plus every selection node; rejects latent nodes.
inline NodeSet effective_conditioning(const CausalGraph& g, const NodeSet& conditioned) {
  NodeSet z;
  for (const auto& n : conditioned) {
    detail::require_node(g, n);
    if (is_latent(g.kind_of(n)))
      throw input_error("cannot condition on latent node '" + n + "'");
    z.insert(n);
  }
  for (const auto& s : g.names_of_kind(NodeKind::selection)) z.insert(s);
  return z;
}

inline std::vector<Path> enumerate_paths(const CausalGraph& g, const std::string& u,
                                         const std::string& v) {
  detail::require_resolved(g);
  detail::require_node(g, u);
  detail::require_node(g, v);
  if (u == v) throw input_error("path endpoints must differ");

  // neighbour -> true when the edge points away from the key node
  std::map<std::string, std::map<std::string, bool>> adj;
  for (const auto& e : g.edges()) {
    adj[e.from][e.to] = true;
    adj[e.to][e.from] = false;
  }

  std::vector<Path> out;
  Path cur;
  cur.nodes.push_back(u);
  std::set<std::string> on_path{u};
  auto dfs = [&](auto&& self, const std::string& x) -> void {
    for (const auto& [w, fwd] : adj[x]) {
      if (on_path.count(w)) continue;
      cur.nodes.push_back(w);
      cur.forward.push_back(fwd);
      if (w == v) {
        Path p = cur;
        for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
          bool into_from_left = p.forward[i - 1];
          bool into_from_right = !p.forward[i];
          p.roles.push_back(into_from_left && into_from_right ? PathRole::collider
                                                              : PathRole::non_collider);
        }
        out.push_back(std::move(p));
      } else {
        on_path.insert(w);
        self(self, w);
        on_path.erase(w);
      }
      cur.nodes.pop_back();
      cur.forward.pop_back();
    }
  };
  dfs(dfs, u);
  return out;
}

inline PathStatus path_status(const CausalGraph& g, const Path& path, const NodeSet& conditioned) {
  detail::require_resolved(g);
  const NodeSet z = effective_conditioning(g, conditioned);
  PathStatus st;
  for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
    const std::string& n = path.nodes[i];
    if (path.roles.at(i - 1) == PathRole::non_collider) {
      if (z.count(n)) st.cut_by.insert(n);
      continue;
    }
    bool active = false;
    for (const auto& d : detail::descendants_inclusive(g, n))
      if (z.count(d)) active = true;
    if (active) st.opened_by.insert(n);
    else st.blocking_nodes.insert(n);
  }
  st.open = st.cut_by.empty() && st.blocking_nodes.empty();
  return st;
}

// Reachability ("Bayes ball") over (node, direction) states.
inline bool d_separated(const CausalGraph& g, const std::string& u, const std::string& v,
                        const NodeSet& conditioned) {
  detail::require_resolved(g);
  detail::require_node(g, u);
  detail::require_node(g, v);
  if (u == v) throw input_error("d-separation endpoints must differ");
  const NodeSet z = effective_conditioning(g, conditioned);
  if (z.count(u) || z.count(v))
    throw input_error("d-separation endpoints must not be conditioned");

  NodeSet anc_z;  // z and all its ancestors
  {
    std::deque<std::string> q(z.begin(), z.end());
    anc_z = z;
    while (!q.empty()) {
      auto x = q.front();
      q.pop_front();
      for (const auto& p : g.parents(x))
        if (anc_z.insert(p).second) q.push_back(p);
    }
  }

  enum Dir { up = 0, down = 1 };  // up: arrived from a child; down: from a parent
  std::set<std::pair<std::string, int>> visited;
  std::deque<std::pair<std::string, int>> q{{u, up}};
  while (!q.empty()) {
    auto [x, d] = q.front();
    q.pop_front();
    if (!visited.insert({x, d}).second) continue;
    const bool in_z = z.count(x) > 0;
    if (!in_z && x == v) return false;
    if (d == up && !in_z) {
      for (const auto& p : g.parents(x)) q.push_back({p, up});
      for (const auto& c : g.children(x)) q.push_back({c, down});
    } else if (d == down) {
      if (!in_z)
        for (const auto& c : g.children(x)) q.push_back({c, down});
      if (anc_z.count(x))
        for (const auto& p : g.parents(x)) q.push_back({p, up});
    }
  }
  return true;
}

// Same verdict as d_separated, computed as a conjunction over enumerated paths.
inline bool d_separated_by_paths(const CausalGraph& g, const std::string& u,
                                 const std::string& v, const NodeSet& conditioned) {
  const NodeSet z = effective_conditioning(g, conditioned);
  if (z.count(u) || z.count(v))
    throw input_error("d-separation endpoints must not be conditioned");
  for (const auto& p : enumerate_paths(g, u, v))
    if (path_status(g, p, conditioned).open) return false;
  return true;
}

}  // namespace cfair
