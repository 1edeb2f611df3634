#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfair/ci_oracle.hpp"
#include "cfair/logistic.hpp"
#include "cfair/metrics.hpp"

namespace cfair {

enum class PredictorKind { naive, ftu, counterfactual, target_trained, oracle };

inline const char* predictor_name(PredictorKind k) {
  switch (k) {
    case PredictorKind::naive: return "naive";
    case PredictorKind::ftu: return "ftu";
    case PredictorKind::counterfactual: return "counterfactual";
    case PredictorKind::target_trained: return "target_trained";
    case PredictorKind::oracle: return "oracle";
  }
  return "?";
}

inline std::optional<PredictorKind> parse_predictor(const std::string& s) {
  for (auto k : {PredictorKind::naive, PredictorKind::ftu, PredictorKind::counterfactual,
                 PredictorKind::target_trained, PredictorKind::oracle})
    if (s == predictor_name(k)) return k;
  return std::nullopt;
}

// ---- counterfactual mixture --------------------------------------------------

inline void check_cf_inputs(const Model& naive, double weight_pa1) {
  if (!naive.uses_protected()) throw input_error("counterfactual predictor needs a model trained with the protected attribute");
  if (!(weight_pa1 >= 0 && weight_pa1 <= 1)) throw input_error("mixture weight must lie in [0,1]");
}

// w f(x,1) + (1-w) f(x,0); the a column is never read.
inline std::vector<double> cf_predict(const Model& naive, const Dataset& d, double weight_pa1) {
  check_cf_inputs(naive, weight_pa1);
  const auto s1 = naive.predict(d, 1);
  const auto s0 = naive.predict(d, 0);
  std::vector<double> out(d.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight_pa1 * s1[i] + (1 - weight_pa1) * s0[i];
  return out;
}

inline double cf_predict(const Model& naive, const Dataset& d, std::size_t row, double weight_pa1) {
  return cf_predict(naive, d.take({row}), weight_pa1).front();
}

inline double mix_scores(double f1, double f0, double weight_pa1) {
  if (!(weight_pa1 >= 0 && weight_pa1 <= 1)) throw input_error("mixture weight must lie in [0,1]");
  return weight_pa1 * f1 + (1 - weight_pa1) * f0;
}

// ---- exact predictors from a known SCM -----------------------------------------

enum class OracleKind { naive, ftu, counterfactual, target_trained, cf_risk_minimizer };

inline const char* oracle_kind_name(OracleKind k) {
  switch (k) {
    case OracleKind::naive: return "naive";
    case OracleKind::ftu: return "ftu";
    case OracleKind::counterfactual: return "counterfactual";
    case OracleKind::target_trained: return "target_trained";
    case OracleKind::cf_risk_minimizer: return "cf_risk_minimizer";
  }
  return "?";
}

// Score table over the observed non-label nodes; bit j of a cell is inputs[j].
// naive          P(Y=1 | x, a) on the selected population
// ftu            P(Y=1 | x)
// counterfactual w P(Y=1 | x, 1) + (1-w) P(Y=1 | x, 0), w = Q(A=1) unless given
// target_trained Q(Y=1 | x, a) on the unselected population
// cf_risk_minimizer P(Y=1 | x_perp_a)
// Cells of zero probability fall back to the marginal P(Y=1).
struct OraclePredictor {
  OracleKind kind;
  std::string label;
  std::string protected_node;
  std::vector<std::string> inputs;
  std::vector<std::string> reads;  // inputs the score actually depends on
  std::vector<double> table;

  std::size_t cell_of(const std::map<std::string, int>& values) const {
    std::size_t cell = 0;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      auto it = values.find(inputs[j]);
      if (it == values.end()) {
        if (std::find(reads.begin(), reads.end(), inputs[j]) != reads.end())
          throw input_error("oracle score needs a value for '" + inputs[j] + "'");
        continue;
      }
      if (it->second) cell |= std::size_t{1} << j;
    }
    return cell;
  }

  double score(const std::map<std::string, int>& values) const { return table[cell_of(values)]; }

  // Scores for scm rows; with counterfactual=true the cf_ columns and the flipped a are used.
  std::vector<double> score(const Dataset& d, const CausalGraph& g, bool counterfactual = false) const {
    std::vector<std::vector<int>> cols;
    for (const auto& n : inputs) {
      if (std::find(reads.begin(), reads.end(), n) == reads.end()) {
        cols.emplace_back();
        continue;
      }
      const std::string c = column_for(g, n);
      const bool flip_a = counterfactual && n == protected_node;
      cols.push_back(d.binary(counterfactual && !flip_a ? kCfPrefix + c : c));
      if (flip_a)
        for (auto& v : cols.back()) v = 1 - v;
    }
    std::vector<double> out(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
      std::size_t cell = 0;
      for (std::size_t j = 0; j < inputs.size(); ++j)
        if (!cols[j].empty() && cols[j][i]) cell |= std::size_t{1} << j;
      out[i] = table[cell];
    }
    return out;
  }
};

namespace detail {

// P(label=1 | vars in `cond`) for every cell of `inputs`, exact.
inline std::vector<Rational> conditional_table(const JointTable<Rational>& j, const std::string& label,
                                               const std::vector<std::string>& inputs,
                                               const std::vector<std::string>& cond) {
  const int iy = j.index_of(label);
  std::vector<int> ci;
  for (const auto& c : cond) ci.push_back(j.index_of(c));
  const Rational base = j.prob({iy}, {1}) / j.total();
  std::vector<Rational> out(std::size_t{1} << inputs.size());
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    std::vector<int> val;
    for (const auto& c : cond) {
      auto pos = std::find(inputs.begin(), inputs.end(), c) - inputs.begin();
      val.push_back(static_cast<int>((cell >> pos) & 1u));
    }
    const Rational den = j.prob(ci, val);
    if (den == 0) {
      out[cell] = base;
      continue;
    }
    auto idx = ci;
    auto v1 = val;
    idx.push_back(iy);
    v1.push_back(1);
    out[cell] = j.prob(idx, v1) / den;
  }
  return out;
}

}  // namespace detail

inline OraclePredictor oracle_predictor(const ScmSpec& s, OracleKind kind,
                                        std::optional<double> weight_pa1 = std::nullopt) {
  const auto y = s.graph.single_of_kind(NodeKind::label);
  const auto a = s.graph.single_of_kind(NodeKind::protected_attr);
  if (!y || !a) throw input_error("oracle predictor needs one label and one protected node");
  const auto source = joint_from_scm<Rational>(s, true);
  const auto target = joint_from_scm<Rational>(s, false);

  OraclePredictor o;
  o.kind = kind;
  o.label = *y;
  o.protected_node = *a;
  for (const auto& v : source.vars)
    if (v != *y) o.inputs.push_back(v);

  std::vector<std::string> no_a;
  for (const auto& v : o.inputs)
    if (v != *a) no_a.push_back(v);

  std::vector<Rational> t;
  switch (kind) {
    case OracleKind::naive:
      o.reads = o.inputs;
      t = detail::conditional_table(source, *y, o.inputs, o.inputs);
      break;
    case OracleKind::ftu:
      o.reads = no_a;
      t = detail::conditional_table(source, *y, o.inputs, no_a);
      break;
    case OracleKind::target_trained:
      o.reads = o.inputs;
      t = detail::conditional_table(target, *y, o.inputs, o.inputs);
      break;
    case OracleKind::cf_risk_minimizer:
      o.reads = s.graph.names_of_kind(NodeKind::x_perp_a);
      t = detail::conditional_table(source, *y, o.inputs, o.reads);
      break;
    case OracleKind::counterfactual: {
      o.reads = no_a;
      const Rational w = weight_pa1 ? Rational(*weight_pa1) : target.prob({target.index_of(*a)}, {1}) / target.total();
      if (w < 0 || w > 1) throw input_error("mixture weight must lie in [0,1]");
      const auto naive = detail::conditional_table(source, *y, o.inputs, o.inputs);
      const std::size_t abit = std::size_t{1} << (std::find(o.inputs.begin(), o.inputs.end(), *a) - o.inputs.begin());
      t.resize(naive.size());
      for (std::size_t cell = 0; cell < naive.size(); ++cell)
        t[cell] = w * naive[cell | abit] + (1 - w) * naive[cell & ~abit];
      break;
    }
  }
  for (const auto& x : t) o.table.push_back(x.convert_to<double>());
  return o;
}

// Cells of the target joint paired with their probability, for exact risk sums.
struct TargetCell {
  std::map<std::string, int> values;
  int y;
  double q;
};

inline std::vector<TargetCell> target_cells(const ScmSpec& s) {
  const auto y = s.graph.single_of_kind(NodeKind::label);
  if (!y) throw input_error("scm has no label node");
  const auto q = joint_from_scm<double>(s, false);
  std::vector<TargetCell> out;
  for (std::size_t cell = 0; cell < q.p.size(); ++cell) {
    TargetCell c;
    for (std::size_t k = 0; k < q.vars.size(); ++k) {
      const int v = static_cast<int>((cell >> k) & 1u);
      if (q.vars[k] == *y) c.y = v;
      else c.values[q.vars[k]] = v;
    }
    c.q = q.p[cell];
    out.push_back(std::move(c));
  }
  return out;
}

inline double log_loss(double score, int y) {
  constexpr double eps = 1e-15;
  const double p = std::clamp(score, eps, 1 - eps);
  return y ? -std::log(p) : -std::log(1 - p);
}

template <class ScoreFn>
double target_cross_entropy_of(const ScmSpec& s, ScoreFn&& score) {
  double ce = 0;
  for (const auto& c : target_cells(s))
    if (c.q > 0) ce += c.q * log_loss(score(c.values), c.y);
  return ce;
}

inline double target_cross_entropy(const ScmSpec& s, const OraclePredictor& f) {
  return target_cross_entropy_of(s, [&](const std::map<std::string, int>& v) { return f.score(v); });
}

// Every assignment of the observed non-label nodes as dataset rows (columns named as in generate_scm).
struct InputGrid {
  std::vector<std::string> nodes;
  Dataset data;

  std::size_t row_of(const std::map<std::string, int>& values) const {
    std::size_t r = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (values.at(nodes[k])) r |= std::size_t{1} << k;
    return r;
  }
};

inline InputGrid input_grid(const ScmSpec& s) {
  const auto y = s.graph.single_of_kind(NodeKind::label);
  InputGrid g;
  for (const auto& n : s.graph.nodes())
    if (n.kind != NodeKind::selection && !is_latent(n.kind) && (!y || n.name != *y)) g.nodes.push_back(n.name);
  const std::size_t cells = std::size_t{1} << g.nodes.size();
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    std::vector<int> v(cells);
    for (std::size_t c = 0; c < cells; ++c) v[c] = static_cast<int>((c >> k) & 1u);
    g.data.set_binary(column_for(s.graph, g.nodes[k]), v);
  }
  return g;
}

// Target risk of scores laid out on input_grid(s) rows.
inline double target_cross_entropy(const ScmSpec& s, const std::vector<double>& grid_scores) {
  const auto grid = input_grid(s);
  if (grid_scores.size() != grid.data.rows()) throw input_error("score count does not match the input grid");
  return target_cross_entropy_of(s, [&](const std::map<std::string, int>& v) { return grid_scores[grid.row_of(v)]; });
}

}  // namespace cfair
