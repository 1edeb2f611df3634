#include <catch_amalgamated.hpp>

#include <random>

#include "cfair/ci_oracle.hpp"
#include "cfair/random_graph.hpp"

using namespace cfair;

namespace {

ScmSpec coins() {
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr).add_node("X", NodeKind::x_perp_a);
  s.cpts["A"] = {{}, {0.5}};
  s.cpts["X"] = {{}, {0.5}};
  return s;
}

ScmSpec collider(double pc00, double pc10, double pc01, double pc11) {
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr)
      .add_node("B", NodeKind::x_perp_a)
      .add_node("C", NodeKind::x_perp_y)
      .add_edge("A", "C")
      .add_edge("B", "C");
  s.cpts["A"] = {{}, {0.3}};
  s.cpts["B"] = {{}, {0.6}};
  s.cpts["C"] = {{"A", "B"}, {pc00, pc10, pc01, pc11}};
  return s;
}

}  // namespace

TEST_CASE("independent fair coins", "[ci_oracle]") {
  auto j = joint_from_scm<Rational>(coins());
  REQUIRE(j.p.size() == 4);
  for (const auto& p : j.p) CHECK(p == Rational(1, 4));
  CHECK(conditional_independent(j, "A", "X", {}));
  CHECK(conditional_independent(j, "X", "A", {}));
}

TEST_CASE("deterministic edge", "[ci_oracle]") {
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr).add_node("Y", NodeKind::label).add_edge("A", "Y");
  s.cpts["A"] = {{}, {0.375}};
  s.cpts["Y"] = {{"A"}, {0.0, 1.0}};
  auto j = joint_from_scm<Rational>(s);
  CHECK(j.prob({j.index_of("A"), j.index_of("Y")}, {1, 1}) == j.prob({j.index_of("A")}, {1}));
  CHECK(j.prob({j.index_of("A")}, {1}) == Rational(3, 8));
}

TEST_CASE("selection renormalizes the joint", "[ci_oracle]") {
  std::mt19937_64 rng(3);
  for (const auto& rs : resolutions(canonical_graph(BiasContext::selection_on_label)).acyclic) {
    auto s = random_scm(rs.graph, rng);
    auto exact = joint_from_scm<Rational>(s);
    CHECK(exact.total() == 1);
    auto approx = joint_from_scm<double>(s);
    CHECK(std::fabs(approx.total() - 1.0) <= 1e-12);
    CHECK(std::find(exact.vars.begin(), exact.vars.end(), "S") == exact.vars.end());
  }
}

TEST_CASE("selection with probability zero is an error", "[ci_oracle]") {
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr).add_node("S", NodeKind::selection).add_edge("A", "S");
  s.cpts["A"] = {{}, {0.5}};
  s.cpts["S"] = {{"A"}, {0.0, 0.0}};
  CHECK_THROWS(joint_from_scm<Rational>(s));
}

TEST_CASE("collider: independent causes become dependent given the effect", "[ci_oracle]") {
  auto j = joint_from_scm<Rational>(collider(0.1, 0.7, 0.4, 0.95));
  CHECK(conditional_independent(j, "A", "B", {}));
  CHECK_FALSE(conditional_independent(j, "A", "B", {"C"}));
  // P(A=1,B=1|C=1) - P(A=1|C=1)P(B=1|C=1) worked by hand:
  // P(C=1) = .28*.1 + .12*.7 + .42*.4 + .18*.95 = .451
  const Rational pc = Rational(451, 1000);
  const Rational pab = Rational(171, 1000), pa = Rational(84 + 171, 1000), pb = Rational(168 + 171, 1000);
  Rational expect = pab / pc - (pa / pc) * (pb / pc);
  if (expect < 0) expect = -expect;
  CHECK(ci_residual(j, "A", "B", {"C"}).convert_to<double>() == Catch::Approx(expect.convert_to<double>()).epsilon(1e-12));
}

TEST_CASE("symmetric in the two query variables", "[ci_oracle]") {
  std::mt19937_64 rng(9);
  auto g = canonical_graph(BiasContext::selection_on_predictors);
  for (const auto& rs : resolutions(g).acyclic) {
    auto j = joint_from_scm<Rational>(random_scm(rs.graph, rng));
    for (const auto& w : std::vector<std::vector<std::string>>{{}, {"Y"}, {"X_perp_Y"}, {"Y", "X_perp_Y"}})
      CHECK(ci_residual(j, "X_perp_A", "A", w) == ci_residual(j, "A", "X_perp_A", w));
  }
}

TEST_CASE("degenerate queries are rejected", "[ci_oracle]") {
  auto j = joint_from_scm<Rational>(coins());
  CHECK_THROWS_AS(conditional_independent(j, "A", "A", {}), input_error);
  CHECK_THROWS_AS(conditional_independent(j, "A", "X", {"A"}), input_error);
  CHECK_THROWS_AS(conditional_independent(j, "A", "Q", {}), input_error);
}

TEST_CASE("measurement error graph: x_perp_a independent of A", "[ci_oracle]") {
  std::mt19937_64 rng(21);
  for (const auto& rs : resolutions(canonical_graph(BiasContext::measurement_error)).acyclic)
    for (int t = 0; t < 25; ++t) {
      auto j = joint_from_scm<Rational>(random_scm(rs.graph, rng));
      CHECK(ci_residual(j, "X_perp_A", "A", {}) == 0);
      CHECK(ci_residual(j, "X_perp_A", "A", {"Y"}) > 0);
    }
}

TEST_CASE("label selection graph: x_perp_a independent of A given Y under selection", "[ci_oracle]") {
  std::mt19937_64 rng(22);
  for (const auto& rs : resolutions(canonical_graph(BiasContext::selection_on_label)).acyclic)
    for (int t = 0; t < 25; ++t) {
      auto j = joint_from_scm<Rational>(random_scm(rs.graph, rng));
      CHECK(ci_residual(j, "X_perp_A", "A", {"Y"}) == 0);
      CHECK(ci_residual(j, "X_perp_A", "A", {}) > 0);
    }
}

TEST_CASE("edgeless graph: every pair independent", "[ci_oracle]") {
  CausalGraph g;
  g.add_node("A", NodeKind::protected_attr)
      .add_node("Y", NodeKind::label)
      .add_node("X1", NodeKind::x_perp_a)
      .add_node("X2", NodeKind::x_perp_y);
  auto rep = faithfulness_crosscheck(g, 10, 4);
  CHECK(rep.connected_queries == 0);
  CHECK(rep.separated_queries == 10 * 6 * 4);
  CHECK(rep.ok());
}

TEST_CASE("canonical graphs pass the crosscheck", "[ci_oracle]") {
  for (auto c : kAllContexts) {
    auto rep = faithfulness_crosscheck(canonical_graph(c), 20, 5);
    INFO(context_name(c));
    CHECK(rep.soundness_violations == 0);
    CHECK(rep.max_separated_residual == 0.0);
    CHECK(rep.ok());
  }
}

TEST_CASE("random graphs pass the crosscheck", "[ci_oracle]") {
  std::mt19937_64 rng(77);
  RandomGraphOptions o;
  o.max_observed = 5;
  for (int i = 0; i < 40; ++i) {
    auto g = random_valid_graph(rng, o);
    auto rep = faithfulness_crosscheck(g, 2, static_cast<std::uint64_t>(i));
    INFO(codec_write(g));
    CHECK(rep.soundness_violations == 0);
    CHECK(rep.faithfulness_failures == 0);
  }
}

TEST_CASE("oracle refuses large graphs", "[ci_oracle]") {
  CausalGraph g;
  g.add_node("A", NodeKind::protected_attr);
  for (int i = 0; i < 5; ++i) g.add_node("X" + std::to_string(i), NodeKind::x_perp_y);
  CHECK_THROWS_AS(faithfulness_crosscheck(g, 1, 1), input_error);
}

TEST_CASE("selection keeps the parents' conditional of non-descendants", "[ci_oracle]") {
  // Y -> X with S a child of Y and A: P(X|Y) survives selection.
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr)
      .add_node("Y", NodeKind::label)
      .add_node("X", NodeKind::x_perp_a)
      .add_node("S", NodeKind::selection)
      .add_edge("Y", "X")
      .add_edge("Y", "S")
      .add_edge("A", "S");
  s.cpts["A"] = {{}, {0.5}};
  s.cpts["Y"] = {{}, {0.3}};
  s.cpts["X"] = {{"Y"}, {0.25, 0.625}};
  s.cpts["S"] = {{"Y", "A"}, {1.0, 1.0, 0.2, 1.0}};
  auto sel = joint_from_scm<Rational>(s, true);
  auto all = joint_from_scm<Rational>(s, false);
  const int x = sel.index_of("X"), y = sel.index_of("Y");
  for (int yv = 0; yv < 2; ++yv)
    CHECK(sel.prob({x, y}, {1, yv}) / sel.prob({y}, {yv}) == all.prob({x, y}, {1, yv}) / all.prob({y}, {yv}));
}
