#include <catch_amalgamated.hpp>

#include <random>

#include "cfair/equivalence.hpp"
#include "cfair/random_graph.hpp"

using namespace cfair;

namespace {

std::set<MetricId> equivalent_set(const MetricEquivalenceReport& r) {
  std::set<MetricId> s;
  for (const auto& e : r.metrics)
    if (e.verdict && *e.verdict == Verdict::equivalent) s.insert(e.id);
  return s;
}

const std::set<MetricId> kEoFamily = {MetricId::equalized_odds, MetricId::fpr_balance,
                                      MetricId::fnr_balance, MetricId::balance_negative_class,
                                      MetricId::balance_positive_class};
const std::set<MetricId> kCalFamily = {MetricId::binary_calibration, MetricId::predictive_parity,
                                       MetricId::score_calibration};

}  // namespace

TEST_CASE("measurement error: demographic parity only", "[equivalence]") {
  auto g = canonical_graph(BiasContext::measurement_error);
  CHECK(dp_equivalent(g).passes);
  CHECK_FALSE(eo_equivalent(g).passes);
  CHECK_FALSE(calibration_equivalent(g).passes);
  auto r = metric_equivalence_report(g);
  CHECK(equivalent_set(r) == std::set<MetricId>{MetricId::demographic_parity});
  CHECK_FALSE(r.at(MetricId::conditional_demographic_parity).verdict.has_value());
  CHECK_FALSE(r.at(MetricId::conditional_demographic_parity).note.empty());
  CHECK(r.resolution_consistent);
  CHECK(r.diagnostics.empty());
}

TEST_CASE("selection on label: equalized odds family", "[equivalence]") {
  auto r = metric_equivalence_report(canonical_graph(BiasContext::selection_on_label));
  CHECK(equivalent_set(r) == kEoFamily);
  CHECK(r.resolution_consistent);
}

TEST_CASE("selection on predictors: calibration family", "[equivalence]") {
  auto r = metric_equivalence_report(canonical_graph(BiasContext::selection_on_predictors));
  CHECK(equivalent_set(r) == kCalFamily);
  CHECK(r.resolution_consistent);
}

TEST_CASE("failing paths carry the expected explanation", "[equivalence]") {
  auto eo_me = eo_equivalent(canonical_graph(BiasContext::measurement_error));
  REQUIRE_FALSE(eo_me.audits.empty());
  for (const auto& a : eo_me.audits) {
    CHECK_FALSE(a.passes);
    CHECK(a.reason.find("the only block is collider Y") != std::string::npos);
  }
  auto eo_sp = eo_equivalent(canonical_graph(BiasContext::selection_on_predictors));
  bool saw = false;
  for (const auto& a : eo_sp.audits)
    if (!a.passes && a.path == "X_perp_A -> S <- A") {
      saw = true;
      CHECK(a.reason.find("does not contain Y") != std::string::npos);
    }
  CHECK(saw);
  auto dp_sl = dp_equivalent(canonical_graph(BiasContext::selection_on_label));
  CHECK_FALSE(dp_sl.passes);
  auto cal_me = calibration_equivalent(canonical_graph(BiasContext::measurement_error));
  bool direct = false;
  for (const auto& a : cal_me.audits)
    if (a.path == "Y <- A") direct = !a.passes;
  CHECK(direct);
}

TEST_CASE("no path between x_perp_a and A is vacuously equivalent", "[equivalence]") {
  CausalGraph g;
  g.add_node("A", NodeKind::protected_attr)
      .add_node("X", NodeKind::x_perp_a)
      .add_node("Y", NodeKind::label)
      .add_edge("X", "Y");
  CHECK(dp_equivalent(g).passes);
}

TEST_CASE("missing kinds are errors", "[equivalence]") {
  CausalGraph no_label;
  no_label.add_node("A", NodeKind::protected_attr).add_node("X", NodeKind::x_perp_a);
  CHECK_THROWS_AS(eo_equivalent(no_label), input_error);
  CHECK_THROWS_AS(calibration_equivalent(no_label), input_error);
  CausalGraph no_x;
  no_x.add_node("A", NodeKind::protected_attr).add_node("Y", NodeKind::label);
  CHECK_THROWS_AS(dp_equivalent(no_x), input_error);
}

TEST_CASE("strata enter the conditional demographic parity test", "[equivalence]") {
  // X -> L <- A: unconditional DP holds, conditioning on L opens the collider.
  CausalGraph g;
  g.add_node("A", NodeKind::protected_attr)
      .add_node("X", NodeKind::x_perp_a)
      .add_node("Y", NodeKind::label)
      .add_node("L", NodeKind::context)
      .add_edge("X", "L")
      .add_edge("A", "L")
      .add_edge("X", "Y");
  auto r = metric_equivalence_report(g, {"L"});
  CHECK(r.equivalent(MetricId::demographic_parity));
  REQUIRE(r.at(MetricId::conditional_demographic_parity).verdict.has_value());
  CHECK_FALSE(r.equivalent(MetricId::conditional_demographic_parity));
  CHECK_THROWS_AS(metric_equivalence_report(g, {"Y"}), input_error);
}

TEST_CASE("resolution disagreement is reported", "[equivalence]") {
  // X <-> Y with A -> Y: orienting Y -> X makes X depend on A.
  CausalGraph g;
  g.add_node("A", NodeKind::protected_attr)
      .add_node("X", NodeKind::x_perp_a)
      .add_node("Y", NodeKind::label)
      .add_edge("A", "Y")
      .add_edge("X", "Y", true);
  auto r = metric_equivalence_report(g);
  CHECK_FALSE(r.resolution_consistent);
  REQUIRE(r.resolutions.size() == 2);
  CHECK(r.resolutions[0].dp);
  CHECK_FALSE(r.resolutions[1].dp);
  CHECK_FALSE(r.equivalent(MetricId::demographic_parity));
}

TEST_CASE("families share their parent verdict", "[equivalence]") {
  std::mt19937_64 rng(21);
  RandomGraphOptions o;
  o.max_observed = 6;
  o.require_label = true;
  o.require_x_perp_a = true;
  o.bidirected_prob = 0.2;
  for (int i = 0; i < 200; ++i) {
    auto r = metric_equivalence_report(random_valid_graph(rng, o));
    for (auto m : kEoFamily) CHECK(r.equivalent(m) == r.equivalent(MetricId::equalized_odds));
    for (auto m : kCalFamily) CHECK(r.equivalent(m) == r.equivalent(MetricId::binary_calibration));
  }
}

TEST_CASE("per-path criterion agrees with the reduced query on random graphs", "[equivalence]") {
  std::mt19937_64 rng(1234);
  RandomGraphOptions o;
  o.min_observed = 3;
  o.max_observed = 6;
  o.edge_prob = 0.45;
  o.require_label = true;
  o.require_x_perp_a = true;
  o.bidirected_prob = 0.2;
  std::size_t disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    auto g = random_valid_graph(rng, o);
    REQUIRE(g.nodes().size() <= 8);
    for (const auto& t : {dp_equivalent(g), eo_equivalent(g), calibration_equivalent(g)})
      disagreements += t.diagnostics.size() -
                       static_cast<std::size_t>(std::count_if(
                           t.diagnostics.begin(), t.diagnostics.end(),
                           [](const std::string& d) { return d.rfind("error", 0) != 0; }));
  }
  CHECK(disagreements == 0);
}

TEST_CASE("report json layout", "[equivalence]") {
  auto j = report_to_json(metric_equivalence_report(canonical_graph(BiasContext::selection_on_label)));
  CHECK(j["equalized_odds"]["verdict"] == "equivalent");
  CHECK(j["demographic_parity"]["verdict"] == "not_equivalent");
  CHECK(j["demographic_parity"]["paths"].size() == 2);
  CHECK_FALSE(j["conditional_demographic_parity"].contains("verdict"));
  CHECK(j["resolution_consistent"] == true);
  CHECK(j["caveats"].size() == 3);
}
