#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "cfair/graph.hpp"

namespace cfair {

struct RandomGraphOptions {
  std::size_t min_observed = 2;  // protected node included
  std::size_t max_observed = 5;
  double edge_prob = 0.4;
  double bidirected_prob = 0.0;
  double latent_prob = 0.3;     // chance of a true-label latent node
  double selection_prob = 0.3;  // chance of a selection sink
  bool require_label = false;
  bool require_x_perp_a = false;
};

// Random graph passing validate(): protected node first in the causal order,
// selection node last, bidirected marks only where both orientations stay acyclic.
template <class Rng>
CausalGraph random_valid_graph(Rng& rng, const RandomGraphOptions& o) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(o.min_observed, o.max_observed);
  const std::size_t floor_obs = 1 + (o.require_label ? 1 : 0) + (o.require_x_perp_a ? 1 : 0);
  const std::size_t n_obs = std::max<std::size_t>({count(rng), floor_obs, 2});

  std::vector<Node> nodes;
  nodes.push_back({"A", NodeKind::protected_attr});
  std::size_t free_slots = n_obs - 1;
  const bool label = o.require_label || unif(rng) < 0.7;
  if (label && free_slots > 0) {
    nodes.push_back({"Y", NodeKind::label});
    --free_slots;
  }
  const NodeKind pool[] = {NodeKind::x_perp_a, NodeKind::x_perp_y, NodeKind::context};
  for (std::size_t i = 0; i < free_slots; ++i) {
    NodeKind k = pool[std::uniform_int_distribution<int>(0, 2)(rng)];
    if (i == 0 && o.require_x_perp_a) k = NodeKind::x_perp_a;
    nodes.push_back({"X" + std::to_string(i + 1), k});
  }
  if (unif(rng) < o.latent_prob) nodes.push_back({"U", NodeKind::true_label_latent});

  std::vector<std::size_t> order(nodes.size() - 1);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  order.insert(order.begin(), 0);

  CausalGraph g;
  for (const auto& n : nodes) g.add_node(n.name, n.kind);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j)
      if (unif(rng) < o.edge_prob) edges.push_back({nodes[order[i]].name, nodes[order[j]].name});

  if (unif(rng) < o.selection_prob) {
    g.add_node("S", NodeKind::selection);
    bool any = false;
    for (const auto& n : nodes) {
      if (unif(rng) < 0.5) {
        edges.push_back({n.name, "S"});
        any = true;
      }
    }
    if (!any) edges.push_back({nodes[order.back()].name, "S"});
  }

  CausalGraph base(g.nodes(), edges);
  if (o.bidirected_prob > 0) {
    std::vector<std::size_t> idx(edges.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      if (unif(rng) >= o.bidirected_prob) continue;
      edges[i].bidirected = true;
      if (!validate(CausalGraph(g.nodes(), edges)).ok()) edges[i].bidirected = false;
    }
    base = CausalGraph(g.nodes(), edges);
  }
  return base;
}

}  // namespace cfair
