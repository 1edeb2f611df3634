#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cfair/error.hpp"

namespace cfair {

enum class NodeKind {
  protected_attr,
  label,
  true_label_latent,
  x_perp_a,
  x_perp_y,
  selection,
  context
};

inline const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::protected_attr: return "protected";
    case NodeKind::label: return "label";
    case NodeKind::true_label_latent: return "true_label";
    case NodeKind::x_perp_a: return "x_perp_a";
    case NodeKind::x_perp_y: return "x_perp_y";
    case NodeKind::selection: return "selection";
    case NodeKind::context: return "context";
  }
  return "?";
}

inline std::optional<NodeKind> parse_kind(const std::string& s) {
  static const std::map<std::string, NodeKind> table = {
      {"protected", NodeKind::protected_attr},
      {"label", NodeKind::label},
      {"true_label", NodeKind::true_label_latent},
      {"x_perp_a", NodeKind::x_perp_a},
      {"x_perp_y", NodeKind::x_perp_y},
      {"selection", NodeKind::selection},
      {"context", NodeKind::context}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline bool is_latent(NodeKind k) { return k == NodeKind::true_label_latent; }

struct Node {
  std::string name;
  NodeKind kind;
};

struct Edge {
  std::string from;
  std::string to;
  bool bidirected = false;
};

class CausalGraph {
 public:
  CausalGraph() = default;
  CausalGraph(std::vector<Node> nodes, std::vector<Edge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {}

  CausalGraph& add_node(const std::string& name, NodeKind kind) {
    nodes_.push_back({name, kind});
    return *this;
  }
  CausalGraph& add_edge(const std::string& from, const std::string& to,
                        bool bidirected = false) {
    edges_.push_back({from, to, bidirected});
    return *this;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_node(const std::string& name) const {
    return find(name) != nullptr;
  }

  const Node* find(const std::string& name) const {
    for (const auto& n : nodes_)
      if (n.name == name) return &n;
    return nullptr;
  }

  NodeKind kind_of(const std::string& name) const {
    const Node* n = find(name);
    if (!n) throw input_error("unknown node '" + name + "'");
    return n->kind;
  }

  std::vector<std::string> names_of_kind(NodeKind k) const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
      if (n.kind == k) out.push_back(n.name);
    return out;
  }

  std::optional<std::string> single_of_kind(NodeKind k) const {
    auto v = names_of_kind(k);
    if (v.empty()) return std::nullopt;
    return v.front();
  }

  // Directed edges only.
  std::vector<std::string> parents(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& e : edges_)
      if (!e.bidirected && e.to == name) out.push_back(e.from);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> children(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& e : edges_)
      if (!e.bidirected && e.from == name) out.push_back(e.to);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool fully_directed() const {
    return std::none_of(edges_.begin(), edges_.end(),
                        [](const Edge& e) { return e.bidirected; });
  }

  std::size_t bidirected_count() const {
    return static_cast<std::size_t>(std::count_if(
        edges_.begin(), edges_.end(), [](const Edge& e) { return e.bidirected; }));
  }

  friend bool operator==(const CausalGraph& x, const CausalGraph& y) {
    return x.canonical_nodes() == y.canonical_nodes() &&
           x.canonical_edges() == y.canonical_edges();
  }

 private:
  std::vector<std::pair<std::string, int>> canonical_nodes() const {
    std::vector<std::pair<std::string, int>> v;
    for (const auto& n : nodes_) v.emplace_back(n.name, static_cast<int>(n.kind));
    std::sort(v.begin(), v.end());
    return v;
  }
  std::vector<std::tuple<std::string, std::string, bool>> canonical_edges() const {
    std::vector<std::tuple<std::string, std::string, bool>> v;
    for (const auto& e : edges_) {
      if (e.bidirected && e.to < e.from)
        v.emplace_back(e.to, e.from, true);
      else
        v.emplace_back(e.from, e.to, e.bidirected);
    }
    std::sort(v.begin(), v.end());
    return v;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

namespace detail {

// Returns a directed cycle as a node sequence, or empty if acyclic.
inline std::vector<std::string> find_cycle(
    const std::vector<std::string>& names,
    const std::vector<std::pair<std::string, std::string>>& arcs) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [f, t] : arcs) out[f].push_back(t);
  for (auto& [k, v] : out) std::sort(v.begin(), v.end());
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;
  auto dfs = [&](auto&& self, const std::string& u) -> bool {
    color[u] = 1;
    stack.push_back(u);
    for (const auto& w : out[u]) {
      if (color[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cycle.assign(it, stack.end());
        cycle.push_back(w);
        return true;
      }
      if (color[w] == 0 && self(self, w)) return true;
    }
    stack.pop_back();
    color[u] = 2;
    return false;
  };
  for (const auto& n : names)
    if (color[n] == 0 && dfs(dfs, n)) return cycle;
  return {};
}

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

inline std::string edge_text(const Edge& e) {
  return e.from + (e.bidirected ? "<->" : "->") + e.to;
}

}  // namespace detail

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

struct Resolution {
  CausalGraph graph;
  std::string orientation;  // e.g. "X_perp_A->Y_tilde"; empty when nothing to orient
};

struct ResolutionSet {
  std::vector<Resolution> acyclic;
  std::vector<std::string> cyclic;  // orientations that closed a cycle
};

inline constexpr std::size_t kMaxBidirected = 16;

namespace detail {

inline ResolutionSet enumerate_orientations(const CausalGraph& g) {
  std::vector<std::size_t> bi;
  for (std::size_t i = 0; i < g.edges().size(); ++i)
    if (g.edges()[i].bidirected) bi.push_back(i);
  if (bi.size() > kMaxBidirected)
    throw input_error("too many bidirected edges (" + std::to_string(bi.size()) +
                      ", limit " + std::to_string(kMaxBidirected) + ")");
  std::vector<std::string> names;
  for (const auto& n : g.nodes()) names.push_back(n.name);

  ResolutionSet out;
  const std::uint32_t total = 1u << bi.size();
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    std::vector<Edge> edges = g.edges();
    std::vector<std::string> parts;
    for (std::size_t j = 0; j < bi.size(); ++j) {
      Edge& e = edges[bi[j]];
      if (mask & (1u << j)) std::swap(e.from, e.to);
      e.bidirected = false;
      parts.push_back(e.from + "->" + e.to);
    }
    std::vector<std::pair<std::string, std::string>> arcs;
    for (const auto& e : edges) arcs.emplace_back(e.from, e.to);
    std::string label = join(parts, ", ");
    if (!find_cycle(names, arcs).empty()) {
      out.cyclic.push_back(label);
      continue;
    }
    out.acyclic.push_back({CausalGraph(g.nodes(), std::move(edges)), label});
  }
  return out;
}

}  // namespace detail

inline ValidationReport validate(const CausalGraph& g) {
  ValidationReport r;
  auto issue = [&](std::string s) { r.issues.push_back(std::move(s)); };

  std::set<std::string> seen;
  for (const auto& n : g.nodes()) {
    if (n.name.empty()) issue("node with empty name");
    else if (!seen.insert(n.name).second) issue("duplicate node name '" + n.name + "'");
  }

  const auto protected_nodes = g.names_of_kind(NodeKind::protected_attr);
  if (protected_nodes.empty()) issue("no protected node");
  if (protected_nodes.size() > 1)
    issue("duplicate kinds: " + std::to_string(protected_nodes.size()) + " protected nodes");
  for (NodeKind k : {NodeKind::label, NodeKind::true_label_latent}) {
    auto v = g.names_of_kind(k);
    if (v.size() > 1)
      issue("duplicate kinds: " + std::to_string(v.size()) + " " + kind_name(k) + " nodes");
  }

  bool dangling = false;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : g.edges()) {
    const std::string txt = detail::edge_text(e);
    bool ok = true;
    for (const auto* end : {&e.from, &e.to}) {
      if (!g.has_node(*end)) {
        issue("dangling edge " + txt + ": unknown node '" + *end + "'");
        ok = false;
      }
    }
    if (!ok) {
      dangling = true;
      continue;
    }
    if (e.from == e.to) {
      issue("self-loop on '" + e.from + "'");
      continue;
    }
    auto key = std::minmax(e.from, e.to);
    if (!pairs.insert({key.first, key.second}).second)
      issue("duplicate edge between '" + key.first + "' and '" + key.second + "'");

    const NodeKind kf = g.kind_of(e.from), kt = g.kind_of(e.to);
    if (kt == NodeKind::protected_attr || (e.bidirected && kf == NodeKind::protected_attr))
      issue("protected node has parent (" + txt + ")");
    if (kf == NodeKind::selection || (e.bidirected && kt == NodeKind::selection))
      issue("selection node has child (" + txt + ")");
  }

  if (dangling) return r;  // cycle search needs every endpoint present

  std::vector<std::string> names;
  for (const auto& n : g.nodes()) names.push_back(n.name);
  std::vector<std::pair<std::string, std::string>> arcs;
  for (const auto& e : g.edges())
    if (!e.bidirected && e.from != e.to) arcs.emplace_back(e.from, e.to);
  auto cyc = detail::find_cycle(names, arcs);
  if (!cyc.empty()) {
    issue("cycle found: " + detail::join(cyc, " -> "));
  } else if (!g.fully_directed()) {
    if (g.bidirected_count() > kMaxBidirected) {
      issue("too many bidirected edges");
    } else {
      for (const auto& o : detail::enumerate_orientations(g).cyclic)
        issue("cycle found when orienting " + o);
    }
  }
  return r;
}

// All orientations of the bidirected edges; cyclic ones are listed in `cyclic`.
inline ResolutionSet resolutions(const CausalGraph& g) {
  ResolutionSet out = detail::enumerate_orientations(g);
  if (out.acyclic.empty())
    throw input_error("every orientation of the bidirected edges is cyclic");
  return out;
}

enum class BiasContext { measurement_error, selection_on_label, selection_on_predictors };

inline const char* context_name(BiasContext c) {
  switch (c) {
    case BiasContext::measurement_error: return "measurement_error";
    case BiasContext::selection_on_label: return "selection_on_label";
    case BiasContext::selection_on_predictors: return "selection_on_predictors";
  }
  return "?";
}

inline std::optional<BiasContext> parse_context(const std::string& s) {
  for (auto c : {BiasContext::measurement_error, BiasContext::selection_on_label,
                 BiasContext::selection_on_predictors})
    if (s == context_name(c)) return c;
  return std::nullopt;
}

inline constexpr BiasContext kAllContexts[] = {BiasContext::measurement_error,
                                               BiasContext::selection_on_label,
                                               BiasContext::selection_on_predictors};

inline CausalGraph canonical_graph(BiasContext c) {
  CausalGraph g;
  switch (c) {
    case BiasContext::measurement_error:
      g.add_node("X_perp_A", NodeKind::x_perp_a)
          .add_node("Y_tilde", NodeKind::true_label_latent)
          .add_node("Y", NodeKind::label)
          .add_node("A", NodeKind::protected_attr)
          .add_node("X_perp_Y", NodeKind::x_perp_y)
          .add_edge("X_perp_A", "Y_tilde", true)
          .add_edge("Y_tilde", "Y")
          .add_edge("A", "Y")
          .add_edge("A", "X_perp_Y");
      break;
    case BiasContext::selection_on_label:
      g.add_node("X_perp_A", NodeKind::x_perp_a)
          .add_node("Y", NodeKind::label)
          .add_node("A", NodeKind::protected_attr)
          .add_node("X_perp_Y", NodeKind::x_perp_y)
          .add_node("S", NodeKind::selection)
          .add_edge("Y", "X_perp_A", true)
          .add_edge("Y", "S")
          .add_edge("A", "S")
          .add_edge("A", "X_perp_Y");
      break;
    case BiasContext::selection_on_predictors:
      g.add_node("X_perp_A", NodeKind::x_perp_a)
          .add_node("Y", NodeKind::label)
          .add_node("A", NodeKind::protected_attr)
          .add_node("X_perp_Y", NodeKind::x_perp_y)
          .add_node("S", NodeKind::selection)
          .add_edge("X_perp_A", "Y", true)
          .add_edge("X_perp_A", "S")
          .add_edge("A", "S")
          .add_edge("A", "X_perp_Y");
      break;
  }
  return g;
}

}  // namespace cfair
