#pragma once

#include <string>

#include <json.hpp>

#include "cfair/error.hpp"
#include "cfair/graph.hpp"

namespace cfair {

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string where = e.byte > 0 ? line_col(text, e.byte - 1) : "start of input";
    throw input_error(what + ": parse error at " + where + ": " + e.what());
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key,
                                           const std::string& path) {
  if (!obj.is_object()) throw input_error(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw input_error(path + "." + key + ": missing field");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const std::string& key,
                                  const std::string& path) {
  const auto& v = require_field(obj, key, path);
  if (!v.is_string()) throw input_error(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace detail

inline nlohmann::json graph_to_json(const CausalGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes())
    j["nodes"].push_back({{"name", n.name}, {"kind", kind_name(n.kind)}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges())
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"bidirected", e.bidirected}});
  return j;
}

inline CausalGraph graph_from_json(const nlohmann::json& j) {
  CausalGraph g;
  const auto& nodes = detail::require_field(j, "nodes", "graph");
  if (!nodes.is_array()) throw input_error("graph.nodes: expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    std::string name = detail::require_string(nodes[i], "name", path);
    std::string kind = detail::require_string(nodes[i], "kind", path);
    auto k = parse_kind(kind);
    if (!k) throw input_error(path + ".kind: unknown kind '" + kind + "'");
    g.add_node(name, *k);
  }
  const auto& edges = detail::require_field(j, "edges", "graph");
  if (!edges.is_array()) throw input_error("graph.edges: expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "edges[" + std::to_string(i) + "]";
    std::string from = detail::require_string(edges[i], "from", path);
    std::string to = detail::require_string(edges[i], "to", path);
    bool bi = false;
    if (auto it = edges[i].find("bidirected"); it != edges[i].end()) {
      if (!it->is_boolean()) throw input_error(path + ".bidirected: expected a boolean");
      bi = it->get<bool>();
    }
    g.add_edge(from, to, bi);
  }
  return g;
}

inline std::string codec_write(const CausalGraph& g) { return graph_to_json(g).dump(2) + "\n"; }

// Structural problems (dangling edges, cycles) are left to validate().
inline CausalGraph codec_read(const std::string& text) {
  return graph_from_json(detail::parse_json_text(text, "graph"));
}

}  // namespace cfair
