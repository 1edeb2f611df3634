#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/dataset.hpp"
#include "cfair/dsep.hpp"
#include "cfair/graph.hpp"
#include "cfair/graph_json.hpp"

namespace cfair {

// P(node = 1) per parent assignment; bit k of the row index is the value of parents[k].
struct Cpt {
  std::vector<std::string> parents;
  std::vector<double> p1;
};

struct ScmSpec {
  CausalGraph graph;
  std::map<std::string, Cpt> cpts;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
};

inline constexpr const char* kCfPrefix = "cf_";

// Dataset column for a node: protected -> a, label -> y, latent true label -> y_true.
inline std::string column_for(const CausalGraph& g, const std::string& node) {
  switch (g.kind_of(node)) {
    case NodeKind::protected_attr: return "a";
    case NodeKind::label: return "y";
    case NodeKind::true_label_latent: return "y_true";
    default: return node;
  }
}

inline void validate_scm(const ScmSpec& s) {
  auto r = validate(s.graph);
  if (!r.ok()) throw input_error("scm graph invalid: " + detail::join(r.issues, "; "));
  if (!s.graph.fully_directed()) throw input_error("scm graph must be fully directed");
  for (const auto& n : s.graph.nodes()) {
    auto it = s.cpts.find(n.name);
    if (it == s.cpts.end()) throw input_error("scm: no CPT for node '" + n.name + "'");
    auto want = s.graph.parents(n.name);
    auto have = it->second.parents;
    std::sort(have.begin(), have.end());
    if (want != have)
      throw input_error("scm: CPT parents of '" + n.name + "' do not match the graph (expected " +
                        detail::join(want, ", ") + ")");
    if (it->second.p1.size() != (std::size_t{1} << it->second.parents.size()))
      throw input_error("scm: CPT of '" + n.name + "' needs " +
                        std::to_string(std::size_t{1} << it->second.parents.size()) + " rows");
    for (double p : it->second.p1)
      if (!(p >= 0.0 && p <= 1.0)) throw input_error("scm: CPT of '" + n.name + "' has a probability outside [0,1]");
  }
  for (const auto& [name, _] : s.cpts)
    if (!s.graph.has_node(name)) throw input_error("scm: CPT for unknown node '" + name + "'");
}

inline std::vector<std::string> topological_order(const CausalGraph& g) {
  std::map<std::string, int> indeg;
  for (const auto& n : g.nodes()) indeg[n.name] = 0;
  for (const auto& e : g.edges()) ++indeg[e.to];
  std::vector<std::string> order;
  std::vector<bool> done(g.nodes().size(), false);
  while (order.size() < g.nodes().size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
      const auto& name = g.nodes()[i].name;
      if (done[i] || indeg[name] != 0) continue;
      done[i] = true;
      order.push_back(name);
      for (const auto& c : g.children(name)) --indeg[c];
      progressed = true;
      break;
    }
    if (!progressed) throw input_error("graph is cyclic");
  }
  return order;
}

inline std::size_t cpt_row(const Cpt& c, const std::map<std::string, int>& values) {
  std::size_t row = 0;
  for (std::size_t k = 0; k < c.parents.size(); ++k)
    if (values.at(c.parents[k])) row |= std::size_t{1} << k;
  return row;
}

// Association of Y with the rest of X runs only through x_perp_a and A:
// Y is d-separated from every other observed feature given x_perp_a, A and selection.
inline bool purely_spurious(const CausalGraph& g) {
  auto y = g.single_of_kind(NodeKind::label);
  auto a = g.single_of_kind(NodeKind::protected_attr);
  if (!y || !a) return false;
  for (const auto& rs : resolutions(g).acyclic) {
    NodeSet z{*a};
    for (const auto& x : rs.graph.names_of_kind(NodeKind::x_perp_a)) z.insert(x);
    for (const auto& n : rs.graph.nodes()) {
      if (n.kind != NodeKind::x_perp_y && n.kind != NodeKind::context) continue;
      if (!d_separated(rs.graph, *y, n.name, z)) return false;
    }
  }
  return true;
}

// Ancestral sampling with shared uniforms; rows with any selection node at 0 are dropped.
// Every non-protected, non-selection node also gets a cf_ column holding its value
// under the flipped protected attribute.
inline Dataset generate_scm(const ScmSpec& s) {
  validate_scm(s);
  const auto order = topological_order(s.graph);
  const std::string a_node = *s.graph.single_of_kind(NodeKind::protected_attr);
  const auto sel = s.graph.names_of_kind(NodeKind::selection);

  std::vector<std::string> out_nodes;
  for (const auto& n : s.graph.nodes())
    if (n.kind != NodeKind::selection) out_nodes.push_back(n.name);

  std::map<std::string, std::vector<double>> fact, cf;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::map<std::string, double> u;
  std::map<std::string, int> v, w;
  for (std::size_t i = 0; i < s.n; ++i) {
    for (const auto& n : order) u[n] = unif(rng);
    for (const auto& n : order) {
      const Cpt& c = s.cpts.at(n);
      v[n] = u[n] < c.p1[cpt_row(c, v)] ? 1 : 0;
    }
    bool selected = true;
    for (const auto& n : sel) selected = selected && v[n] == 1;
    if (!selected) continue;
    for (const auto& n : order) {
      if (n == a_node) {
        w[n] = 1 - v[n];
        continue;
      }
      const Cpt& c = s.cpts.at(n);
      w[n] = u[n] < c.p1[cpt_row(c, w)] ? 1 : 0;
    }
    for (const auto& n : out_nodes) {
      fact[n].push_back(v[n]);
      cf[n].push_back(w[n]);
    }
  }
  if (fact.empty() || fact.begin()->second.empty())
    throw std::runtime_error("scm: no rows survive selection");

  Dataset d;
  for (const auto& n : out_nodes) d.set_numeric(column_for(s.graph, n), ColumnType::binary, fact[n]);
  for (const auto& n : out_nodes)
    if (n != a_node) d.set_numeric(kCfPrefix + column_for(s.graph, n), ColumnType::binary, cf[n]);
  return d;
}

inline ScmSpec scm_from_json(const nlohmann::json& j) {
  ScmSpec s;
  s.graph = graph_from_json(detail::require_field(j, "graph", "scm"));
  const auto& cpts = detail::require_field(j, "cpts", "scm");
  if (!cpts.is_object()) throw input_error("scm.cpts: expected an object");
  for (const auto& [name, c] : cpts.items()) {
    const std::string path = "scm.cpts." + name;
    Cpt cpt;
    if (c.contains("parents")) {
      if (!c["parents"].is_array()) throw input_error(path + ".parents: expected an array");
      cpt.parents = c["parents"].get<std::vector<std::string>>();
    }
    if (c.contains("p1")) {
      cpt.p1 = c["p1"].get<std::vector<double>>();
    } else if (c.contains("rows")) {
      for (const auto& row : c["rows"]) {
        auto r = row.get<std::vector<double>>();
        if (r.size() != 2) throw input_error(path + ".rows: each row needs [p0, p1]");
        if (std::fabs(r[0] + r[1] - 1.0) > 1e-12) throw input_error(path + ".rows: row does not sum to 1");
        cpt.p1.push_back(r[1]);
      }
    } else {
      throw input_error(path + ": needs 'p1' or 'rows'");
    }
    s.cpts[name] = cpt;
  }
  if (j.contains("n")) s.n = j["n"].get<std::size_t>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  validate_scm(s);
  return s;
}

inline nlohmann::json scm_to_json(const ScmSpec& s) {
  nlohmann::json j;
  j["graph"] = graph_to_json(s.graph);
  for (const auto& [name, c] : s.cpts) j["cpts"][name] = {{"parents", c.parents}, {"p1", c.p1}};
  j["n"] = s.n;
  j["seed"] = s.seed;
  return j;
}

// CPTs drawn uniformly from (lo, hi) for a fully directed graph.
template <class Rng>
ScmSpec random_scm(const CausalGraph& g, Rng& rng, double lo = 0.05, double hi = 0.95) {
  std::uniform_real_distribution<double> unif(lo, hi);
  ScmSpec s;
  s.graph = g;
  for (const auto& n : g.nodes()) {
    Cpt c;
    c.parents = g.parents(n.name);
    c.p1.resize(std::size_t{1} << c.parents.size());
    for (auto& p : c.p1) p = unif(rng);
    s.cpts[n.name] = c;
  }
  return s;
}

}  // namespace cfair
