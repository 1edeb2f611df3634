#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cfair/dsep.hpp"
#include "cfair/scm.hpp"

namespace cfair {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kMaxOracleVariables = 5;
inline constexpr std::size_t kMaxOracleNodes = 20;

// Joint over binary variables; bit j of a cell index is the value of vars[j].
template <class Scalar>
struct JointTable {
  std::vector<std::string> vars;
  std::vector<Scalar> p;

  int index_of(const std::string& name) const {
    for (std::size_t j = 0; j < vars.size(); ++j)
      if (vars[j] == name) return static_cast<int>(j);
    throw input_error("joint has no variable '" + name + "'");
  }

  // P(vars[idx[k]] = val[k] for all k)
  Scalar prob(const std::vector<int>& idx, const std::vector<int>& val) const {
    Scalar s = 0;
    for (std::size_t cell = 0; cell < p.size(); ++cell) {
      bool match = true;
      for (std::size_t k = 0; k < idx.size() && match; ++k)
        match = static_cast<int>((cell >> idx[k]) & 1u) == val[k];
      if (match) s += p[cell];
    }
    return s;
  }

  Scalar total() const {
    Scalar s = 0;
    for (const auto& x : p) s += x;
    return s;
  }
};

template <class Scalar>
Scalar to_scalar(double x) {
  return Scalar(x);  // exact for cpp_rational
}

// Exact joint of the observed variables. With apply_selection the joint is conditioned on
// every selection node being 1; without it, selection nodes are simply marginalized
// (the unbiased target distribution).
template <class Scalar>
JointTable<Scalar> joint_from_scm(const ScmSpec& s, bool apply_selection = true,
                                  bool normalize = true) {
  validate_scm(s);
  const auto& nodes = s.graph.nodes();
  if (nodes.size() > kMaxOracleNodes) throw input_error("scm too large for exhaustive enumeration");
  JointTable<Scalar> j;
  std::vector<std::size_t> obs_pos;
  std::vector<std::size_t> sel_pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::selection) sel_pos.push_back(i);
    else if (!is_latent(nodes[i].kind)) {
      obs_pos.push_back(i);
      j.vars.push_back(nodes[i].name);
    }
  }
  if (j.vars.size() > kMaxOracleVariables)
    throw input_error("exhaustive oracle is limited to " + std::to_string(kMaxOracleVariables) +
                      " observed binary variables, scm has " + std::to_string(j.vars.size()));

  struct Factor {
    std::vector<std::size_t> parent_pos;
    std::vector<Scalar> p1, p0;
  };
  std::vector<Factor> f(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Cpt& c = s.cpts.at(nodes[i].name);
    for (const auto& par : c.parents)
      for (std::size_t k = 0; k < nodes.size(); ++k)
        if (nodes[k].name == par) f[i].parent_pos.push_back(k);
    for (double x : c.p1) {
      f[i].p1.push_back(to_scalar<Scalar>(x));
      f[i].p0.push_back(Scalar(1) - to_scalar<Scalar>(x));
    }
  }

  j.p.assign(std::size_t{1} << j.vars.size(), Scalar(0));
  const std::uint64_t total = std::uint64_t{1} << nodes.size();
  for (std::uint64_t full = 0; full < total; ++full) {
    if (apply_selection) {
      bool sel = true;
      for (auto k : sel_pos) sel = sel && ((full >> k) & 1u);
      if (!sel) continue;
    }
    Scalar prob = 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::size_t row = 0;
      for (std::size_t k = 0; k < f[i].parent_pos.size(); ++k)
        if ((full >> f[i].parent_pos[k]) & 1u) row |= std::size_t{1} << k;
      prob *= ((full >> i) & 1u) ? f[i].p1[row] : f[i].p0[row];
      if (prob == 0) break;
    }
    std::size_t cell = 0;
    for (std::size_t k = 0; k < obs_pos.size(); ++k)
      if ((full >> obs_pos[k]) & 1u) cell |= std::size_t{1} << k;
    j.p[cell] += prob;
  }
  Scalar z = j.total();
  if (z == 0) throw std::runtime_error("selection event has probability 0");
  if (normalize)
    for (auto& x : j.p) x /= z;
  return j;
}

// Largest |P(u,v|w) - P(u|w)P(v|w)| over cells and assignments w with P(w) > 0.
// Ratios only, so an unnormalized table gives the same answer.
template <class Scalar>
Scalar ci_residual(const JointTable<Scalar>& j, const std::string& u, const std::string& v,
                   const std::vector<std::string>& given) {
  if (u == v) throw input_error("independence query needs two different variables");
  const int iu = j.index_of(u), iv = j.index_of(v);
  std::vector<int> gi;
  for (const auto& g : given) {
    int k = j.index_of(g);
    if (k == iu || k == iv) throw input_error("query variable '" + g + "' also in conditioning set");
    gi.push_back(k);
  }
  const std::size_t m = gi.size();
  // marg[(w << 2) | (b << 1) | a] = P(u=a, v=b, w)
  std::vector<Scalar> marg(std::size_t{4} << m, Scalar(0));
  for (std::size_t cell = 0; cell < j.p.size(); ++cell) {
    std::size_t w = 0;
    for (std::size_t k = 0; k < m; ++k)
      if ((cell >> gi[k]) & 1u) w |= std::size_t{1} << k;
    const std::size_t a = (cell >> iu) & 1u, b = (cell >> iv) & 1u;
    marg[(w << 2) | (b << 1) | a] += j.p[cell];
  }
  Scalar worst = 0;
  for (std::size_t w = 0; w < (std::size_t{1} << m); ++w) {
    const Scalar* q = &marg[w << 2];
    const Scalar pw = q[0] + q[1] + q[2] + q[3];
    if (pw <= 0) continue;
    // For binary u, v every cell has the same |P(uv)P(w) - P(u)P(v)|.
    const Scalar pu1 = q[1] + q[3], pv1 = q[2] + q[3];
    Scalar num = q[3] * pw - pu1 * pv1;
    if (num == 0) continue;
    if (num < 0) num = -num;
    Scalar r = num / (pw * pw);
    if (r > worst) worst = r;
  }
  return worst;
}

template <class Scalar>
bool conditional_independent(const JointTable<Scalar>& j, const std::string& u, const std::string& v,
                             const std::vector<std::string>& given, double tol = 1e-12) {
  return ci_residual(j, u, v, given) <= to_scalar<Scalar>(tol);
}

struct CrosscheckOptions {
  double cpt_lo = 0.05, cpt_hi = 0.95;
  int max_consecutive_failures = 3;  // independent draws in a row before giving up
  double tol = 1e-12;
};

struct CrosscheckReport {
  std::size_t trials = 0;
  std::size_t separated_queries = 0;
  std::size_t soundness_violations = 0;
  std::size_t connected_queries = 0;
  std::size_t dependent_first_draw = 0;
  std::size_t faithfulness_failures = 0;  // still independent after every redraw
  double max_separated_residual = 0;
  std::vector<std::string> messages;

  double dependence_rate() const {
    return connected_queries ? static_cast<double>(dependent_first_draw) / connected_queries : 1.0;
  }
  bool ok() const {
    return soundness_violations == 0 && faithfulness_failures == 0 && dependence_rate() >= 0.99;
  }
};

namespace detail {

inline std::vector<std::vector<std::string>> subsets(const std::vector<std::string>& xs) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t m = 0; m < (std::size_t{1} << xs.size()); ++m) {
    std::vector<std::string> s;
    for (std::size_t k = 0; k < xs.size(); ++k)
      if (m & (std::size_t{1} << k)) s.push_back(xs[k]);
    out.push_back(s);
  }
  return out;
}

}  // namespace detail

// For each resolution and trial: random CPTs, exact joint, and every pair/conditioning-set
// query compared with d-separation.
inline CrosscheckReport faithfulness_crosscheck(const CausalGraph& g, std::size_t trials,
                                                std::uint64_t seed, const CrosscheckOptions& o = {}) {
  CrosscheckReport rep;
  std::mt19937_64 rng(seed);
  for (const auto& rs : resolutions(g).acyclic) {
    const CausalGraph& h = rs.graph;
    std::vector<std::string> obs;
    for (const auto& n : h.nodes())
      if (n.kind != NodeKind::selection && !is_latent(n.kind)) obs.push_back(n.name);
    if (obs.size() > kMaxOracleVariables)
      throw input_error("graph too large for the exhaustive oracle (" + std::to_string(obs.size()) +
                        " observed nodes)");
    for (std::size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      auto joint = joint_from_scm<Rational>(random_scm(h, rng, o.cpt_lo, o.cpt_hi), true, false);
      for (std::size_t a = 0; a < obs.size(); ++a) {
        for (std::size_t b = a + 1; b < obs.size(); ++b) {
          std::vector<std::string> rest;
          for (const auto& x : obs)
            if (x != obs[a] && x != obs[b]) rest.push_back(x);
          for (const auto& w : detail::subsets(rest)) {
            const bool sep = d_separated(h, obs[a], obs[b], NodeSet(w.begin(), w.end()));
            const Rational r = ci_residual(joint, obs[a], obs[b], w);
            const std::string q = obs[a] + " _||_ " + obs[b] + " | {" + detail::join(w, ",") + "}";
            if (sep) {
              ++rep.separated_queries;
              rep.max_separated_residual = std::max(rep.max_separated_residual, r.convert_to<double>());
              if (r > to_scalar<Rational>(o.tol)) {
                ++rep.soundness_violations;
                rep.messages.push_back("soundness: " + q + " separated but dependent");
              }
              continue;
            }
            ++rep.connected_queries;
            if (r > 0) {
              ++rep.dependent_first_draw;
              continue;
            }
            bool found = false;
            for (int k = 1; k < o.max_consecutive_failures && !found; ++k) {
              auto again = joint_from_scm<Rational>(random_scm(h, rng, o.cpt_lo, o.cpt_hi), true, false);
              found = ci_residual(again, obs[a], obs[b], w) > 0;
            }
            if (!found) {
              ++rep.faithfulness_failures;
              rep.messages.push_back("faithfulness: " + q + " connected but independent in " +
                                     std::to_string(o.max_consecutive_failures) + " draws");
            }
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace cfair
