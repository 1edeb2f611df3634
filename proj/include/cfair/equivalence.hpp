#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/dsep.hpp"
#include "cfair/graph.hpp"

namespace cfair {

enum class MetricId {
  demographic_parity,
  conditional_demographic_parity,
  equalized_odds,
  fpr_balance,
  fnr_balance,
  balance_negative_class,
  balance_positive_class,
  binary_calibration,
  predictive_parity,
  score_calibration
};

inline constexpr std::array<MetricId, 10> kAllMetrics = {
    MetricId::demographic_parity,    MetricId::conditional_demographic_parity,
    MetricId::equalized_odds,        MetricId::fpr_balance,
    MetricId::fnr_balance,           MetricId::balance_negative_class,
    MetricId::balance_positive_class, MetricId::binary_calibration,
    MetricId::predictive_parity,     MetricId::score_calibration};

enum class ParentTest { dp, eo, cal };

inline const char* metric_name(MetricId m) {
  switch (m) {
    case MetricId::demographic_parity: return "demographic_parity";
    case MetricId::conditional_demographic_parity: return "conditional_demographic_parity";
    case MetricId::equalized_odds: return "equalized_odds";
    case MetricId::fpr_balance: return "fpr_balance";
    case MetricId::fnr_balance: return "fnr_balance";
    case MetricId::balance_negative_class: return "balance_negative_class";
    case MetricId::balance_positive_class: return "balance_positive_class";
    case MetricId::binary_calibration: return "binary_calibration";
    case MetricId::predictive_parity: return "predictive_parity";
    case MetricId::score_calibration: return "score_calibration";
  }
  return "?";
}

inline ParentTest parent_test(MetricId m) {
  switch (m) {
    case MetricId::demographic_parity:
    case MetricId::conditional_demographic_parity: return ParentTest::dp;
    case MetricId::equalized_odds:
    case MetricId::fpr_balance:
    case MetricId::fnr_balance:
    case MetricId::balance_negative_class:
    case MetricId::balance_positive_class: return ParentTest::eo;
    default: return ParentTest::cal;
  }
}

enum class Verdict { equivalent, not_equivalent };

inline const char* verdict_name(Verdict v) {
  return v == Verdict::equivalent ? "equivalent" : "not_equivalent";
}

struct PathAudit {
  std::string resolution;
  std::string path;
  bool passes = false;
  std::string reason;

  std::string to_string() const {
    std::string s = resolution.empty() ? "" : "[" + resolution + "] ";
    return s + path + ": " + reason;
  }
};

struct TestResult {
  bool passes = false;              // every resolution passes and criteria agree
  bool resolution_consistent = true;
  std::vector<bool> per_resolution;  // reduced-query verdict per acyclic resolution
  std::vector<PathAudit> audits;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline void require_valid(const CausalGraph& g) {
  auto r = validate(g);
  if (!r.ok()) throw input_error("invalid graph: " + join(r.issues, "; "));
}

inline std::string names_text(const NodeSet& s) {
  return join(std::vector<std::string>(s.begin(), s.end()), ", ");
}

// Per-path criterion: with base conditioning z0 and test variables t,
// a path passes when it has a member of t as a non-collider, is cut by z0, or has a
// collider blocking it that conditioning on t does not open.
inline PathAudit audit_path(const CausalGraph& g, const Path& p, const NodeSet& z0,
                            const NodeSet& t) {
  PathAudit a;
  a.path = p.to_string();
  const std::string tname = t.empty() ? "the test set" : names_text(t);
  for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
    if (p.roles[i - 1] == PathRole::non_collider && t.count(p.nodes[i])) {
      a.passes = true;
      a.reason = "contains " + p.nodes[i] + " as a non-collider";
      return a;
    }
  }
  const PathStatus st = path_status(g, p, z0);
  if (!st.cut_by.empty()) {
    a.passes = true;
    a.reason = "cut by conditioned " + names_text(st.cut_by);
    return a;
  }
  for (const auto& c : st.blocking_nodes) {
    bool opened = false;
    for (const auto& d : descendants_inclusive(g, c))
      if (t.count(d)) opened = true;
    if (!opened) {
      a.passes = true;
      a.reason = "blocked at collider " + c;
      return a;
    }
  }
  a.passes = false;
  if (!st.blocking_nodes.empty())
    a.reason = "the only block is collider " + names_text(st.blocking_nodes) +
               ", opened by conditioning on " + tname;
  else if (!st.opened_by.empty())
    a.reason = "open through conditioned collider " + names_text(st.opened_by) +
               " and does not contain " + tname;
  else
    a.reason = "open and does not contain " + tname;
  return a;
}

struct TestQuery {
  std::vector<std::string> sources;  // each must be separated from target
  std::string target;
  NodeSet base;  // conditioning before the test variables
  NodeSet test;  // test variables
};

inline TestResult run_test(const CausalGraph& g, const TestQuery& q) {
  TestResult r;
  const auto res = resolutions(g);
  const bool label_orientation = res.acyclic.size() > 1;
  NodeSet full = q.base;
  full.insert(q.test.begin(), q.test.end());
  for (const auto& rs : res.acyclic) {
    bool reduced_ok = true, paths_ok = true;
    for (const auto& s : q.sources) {
      const bool sep = d_separated(rs.graph, s, q.target, full);
      bool all_pass = true;
      for (const auto& p : enumerate_paths(rs.graph, s, q.target)) {
        PathAudit a = audit_path(rs.graph, p, q.base, q.test);
        if (label_orientation) a.resolution = rs.orientation;
        all_pass = all_pass && a.passes;
        r.audits.push_back(std::move(a));
      }
      if (sep != all_pass)
        r.diagnostics.push_back("error: per-path criterion (" +
                                std::string(all_pass ? "pass" : "fail") +
                                ") disagrees with d-separation (" +
                                std::string(sep ? "separated" : "connected") + ") for " + s +
                                " and " + q.target +
                                (rs.orientation.empty() ? "" : " under " + rs.orientation));
      reduced_ok = reduced_ok && sep;
      paths_ok = paths_ok && all_pass;
    }
    r.per_resolution.push_back(reduced_ok);
    if (reduced_ok != paths_ok) reduced_ok = false;
    if (&rs == &res.acyclic.front()) r.passes = reduced_ok;
    else r.passes = r.passes && reduced_ok;
  }
  for (std::size_t i = 1; i < r.per_resolution.size(); ++i)
    if (r.per_resolution[i] != r.per_resolution[0]) r.resolution_consistent = false;
  for (const auto& c : res.cyclic)
    r.diagnostics.push_back("orientation " + c + " closes a cycle and was skipped");
  return r;
}

inline std::string require_protected(const CausalGraph& g) {
  auto a = g.single_of_kind(NodeKind::protected_attr);
  if (!a) throw input_error("graph has no protected node");
  return *a;
}

inline std::vector<std::string> require_x_perp_a(const CausalGraph& g) {
  auto xs = g.names_of_kind(NodeKind::x_perp_a);
  if (xs.empty()) throw input_error("graph has no x_perp_a node");
  return xs;
}

inline std::string require_label(const CausalGraph& g) {
  auto y = g.single_of_kind(NodeKind::label);
  if (!y) throw input_error("graph has no label node");
  return *y;
}

inline NodeSet require_strata(const CausalGraph& g, const NodeSet& strata) {
  for (const auto& l : strata) {
    if (!g.has_node(l)) throw input_error("unknown strata node '" + l + "'");
    if (g.kind_of(l) != NodeKind::context)
      throw input_error("strata node '" + l + "' must have kind context");
  }
  return strata;
}

}  // namespace detail

// Every x_perp_a node d-separated from A given selection (and strata, if any).
inline TestResult dp_equivalent(const CausalGraph& g, const NodeSet& strata = {}) {
  detail::require_valid(g);
  const auto a = detail::require_protected(g);
  const auto xs = detail::require_x_perp_a(g);
  return detail::run_test(g, {xs, a, NodeSet{}, detail::require_strata(g, strata)});
}

// Every x_perp_a node d-separated from A given Y and selection.
inline TestResult eo_equivalent(const CausalGraph& g) {
  detail::require_valid(g);
  const auto a = detail::require_protected(g);
  const auto xs = detail::require_x_perp_a(g);
  const auto y = detail::require_label(g);
  return detail::run_test(g, {xs, a, NodeSet{}, NodeSet{y}});
}

// Y d-separated from A given all x_perp_a nodes and selection.
inline TestResult calibration_equivalent(const CausalGraph& g) {
  detail::require_valid(g);
  const auto a = detail::require_protected(g);
  const auto xs = detail::require_x_perp_a(g);
  const auto y = detail::require_label(g);
  return detail::run_test(g, {{y}, a, NodeSet{}, NodeSet(xs.begin(), xs.end())});
}

struct MetricEntry {
  MetricId id;
  std::optional<Verdict> verdict;
  std::vector<std::string> paths;
  std::string note;
};

struct ResolutionVerdicts {
  std::string orientation;
  bool dp = false, eo = false, cal = false;
  std::optional<bool> cdp;
};

struct MetricEquivalenceReport {
  std::vector<MetricEntry> metrics;
  bool resolution_consistent = true;
  std::vector<std::string> caveats;
  std::vector<ResolutionVerdicts> resolutions;
  std::vector<std::string> diagnostics;

  const MetricEntry& at(MetricId m) const {
    for (const auto& e : metrics)
      if (e.id == m) return e;
    throw std::out_of_range(metric_name(m));
  }
  bool equivalent(MetricId m) const {
    const auto& e = at(m);
    return e.verdict && *e.verdict == Verdict::equivalent;
  }
};

inline const std::vector<std::string>& equivalence_caveats() {
  static const std::vector<std::string> c = {
      "Verdicts assume faithfulness: the only conditional independencies are those implied "
      "by d-separation.",
      "Metric tables write S for the score while graphs write S for selection; here scores "
      "are called 'score' and selection nodes keep their graph names.",
      "The predictor is identified with the x_perp_a nodes for graphical purposes, as a "
      "counterfactually fair predictor depends only on them."};
  return c;
}

inline MetricEquivalenceReport metric_equivalence_report(const CausalGraph& g,
                                                         const NodeSet& strata = {}) {
  const TestResult dp = dp_equivalent(g);
  const TestResult eo = eo_equivalent(g);
  const TestResult cal = calibration_equivalent(g);
  std::optional<TestResult> cdp;
  if (!strata.empty()) cdp = dp_equivalent(g, strata);

  MetricEquivalenceReport rep;
  rep.caveats = equivalence_caveats();
  auto paths_of = [](const TestResult& t) {
    std::vector<std::string> v;
    for (const auto& a : t.audits) v.push_back(a.to_string());
    return v;
  };
  for (MetricId m : kAllMetrics) {
    MetricEntry e{m, std::nullopt, {}, {}};
    const TestResult* t = nullptr;
    switch (parent_test(m)) {
      case ParentTest::dp:
        if (m == MetricId::conditional_demographic_parity) {
          if (cdp) t = &*cdp;
          else e.note = "no strata given; conditional demographic parity not evaluated";
        } else {
          t = &dp;
        }
        break;
      case ParentTest::eo: t = &eo; break;
      case ParentTest::cal: t = &cal; break;
    }
    if (t) {
      e.verdict = t->passes ? Verdict::equivalent : Verdict::not_equivalent;
      e.paths = paths_of(*t);
    }
    rep.metrics.push_back(std::move(e));
  }

  rep.resolution_consistent = dp.resolution_consistent && eo.resolution_consistent &&
                              cal.resolution_consistent &&
                              (!cdp || cdp->resolution_consistent);
  const auto res = resolutions(g);
  for (std::size_t i = 0; i < res.acyclic.size(); ++i) {
    ResolutionVerdicts rv;
    rv.orientation = res.acyclic[i].orientation;
    rv.dp = dp.per_resolution[i];
    rv.eo = eo.per_resolution[i];
    rv.cal = cal.per_resolution[i];
    if (cdp) rv.cdp = cdp->per_resolution[i];
    rep.resolutions.push_back(rv);
  }
  for (const TestResult* t : {&dp, &eo, &cal})
    rep.diagnostics.insert(rep.diagnostics.end(), t->diagnostics.begin(), t->diagnostics.end());
  if (cdp) rep.diagnostics.insert(rep.diagnostics.end(), cdp->diagnostics.begin(),
                                  cdp->diagnostics.end());
  std::sort(rep.diagnostics.begin(), rep.diagnostics.end());
  rep.diagnostics.erase(std::unique(rep.diagnostics.begin(), rep.diagnostics.end()),
                        rep.diagnostics.end());
  return rep;
}

inline nlohmann::json report_to_json(const MetricEquivalenceReport& rep) {
  nlohmann::json j;
  for (const auto& e : rep.metrics) {
    nlohmann::json m;
    if (e.verdict) m["verdict"] = verdict_name(*e.verdict);
    m["paths"] = e.paths;
    if (!e.note.empty()) m["note"] = e.note;
    j[metric_name(e.id)] = m;
  }
  j["resolution_consistent"] = rep.resolution_consistent;
  j["caveats"] = rep.caveats;
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rep.resolutions) {
    nlohmann::json x = {{"orientation", r.orientation},
                        {"dp_test", r.dp},
                        {"eo_test", r.eo},
                        {"cal_test", r.cal}};
    if (r.cdp) x["conditional_dp_test"] = *r.cdp;
    rs.push_back(x);
  }
  j["resolutions"] = rs;
  j["diagnostics"] = rep.diagnostics;
  return j;
}

}  // namespace cfair
