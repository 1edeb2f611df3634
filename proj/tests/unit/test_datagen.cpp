#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "cfair/ci_oracle.hpp"
#include "cfair/datagen.hpp"

using namespace cfair;
using Catch::Approx;

namespace {

Dataset small_adult(std::size_t n, std::uint64_t seed) {
  return simulate_protected(generate_adult_like({n, seed}), ProtectedSpec{});
}

std::size_t count_if2(const Dataset& d, int a, int y) {
  auto av = d.binary("a");
  auto yv = d.binary("y");
  std::size_t c = 0;
  for (std::size_t i = 0; i < av.size(); ++i) c += av[i] == a && yv[i] == y;
  return c;
}

// Fig. 2c resolved with X_perp_A -> Y; Y listens to X_perp_A only.
ScmSpec predictor_selection_scm(std::size_t n, std::uint64_t seed) {
  ScmSpec s;
  s.graph.add_node("X", NodeKind::x_perp_a)
      .add_node("Y", NodeKind::label)
      .add_node("A", NodeKind::protected_attr)
      .add_node("W", NodeKind::x_perp_y)
      .add_node("S", NodeKind::selection)
      .add_edge("X", "Y")
      .add_edge("X", "S")
      .add_edge("A", "S")
      .add_edge("A", "W");
  s.cpts["A"] = {{}, {0.5}};
  s.cpts["X"] = {{}, {0.4}};
  s.cpts["Y"] = {{"X"}, {0.2, 0.75}};
  s.cpts["W"] = {{"A"}, {0.3, 0.8}};
  s.cpts["S"] = {{"X", "A"}, {1.0, 1.0, 0.2, 0.9}};  // rows: (X,A) = 00, 10, 01, 11
  s.n = n;
  s.seed = seed;
  return s;
}

JointTable<double> empirical_joint(const Dataset& d, const std::vector<std::string>& cols) {
  JointTable<double> j;
  j.vars = cols;
  j.p.assign(std::size_t{1} << cols.size(), 0.0);
  std::vector<std::vector<int>> v;
  for (const auto& c : cols) v.push_back(d.binary(c));
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::size_t cell = 0;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (v[k][i]) cell |= std::size_t{1} << k;
    j.p[cell] += 1.0 / static_cast<double>(d.rows());
  }
  return j;
}

}  // namespace

TEST_CASE("protected simulation with p = 0 leaves the column alone", "[datagen]") {
  auto base = generate_adult_like({2000, 3});
  ProtectedSpec spec;
  spec.p = 0;
  auto d = simulate_protected(base, spec);
  CHECK(d.categorical("race") == base.categorical("race"));
  CHECK(d.categorical("cf_race") == base.categorical("race"));
}

TEST_CASE("protected simulation with p = 1 moves every a=1 row", "[datagen]") {
  ProtectedSpec spec;
  spec.p = 1;
  auto d = simulate_protected(generate_adult_like({2000, 4}), spec);
  auto a = d.binary("a");
  const auto& race = d.categorical("race");
  const auto& cf = d.categorical("cf_race");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) CHECK(race[i] == "Other");
    else CHECK(cf[i] == "Other");
  }
}

TEST_CASE("protected attribute is a fair coin", "[datagen]") {
  auto d = small_adult(100000, 5);
  auto a = d.binary("a");
  double frac = static_cast<double>(std::count(a.begin(), a.end(), 1)) / static_cast<double>(a.size());
  CHECK(frac == Approx(0.5).margin(0.01));
}

TEST_CASE("protected simulation errors", "[datagen]") {
  auto base = generate_adult_like({50, 1});
  ProtectedSpec spec;
  spec.column = "ethnicity";
  CHECK_THROWS_AS(simulate_protected(base, spec), input_error);
  spec.column = "age";
  CHECK_THROWS_AS(simulate_protected(base, spec), input_error);
}

TEST_CASE("bias with p = 0 leaves source equal to target", "[datagen]") {
  auto d = small_adult(3000, 6);
  for (auto kind : kAllContexts) {
    BiasSpec b;
    b.kind = kind;
    b.p = 0;
    b.predicate = Predicate{"hours-per-week", "<", 45};
    auto r = inject_bias(d, b);
    if (kind == BiasKind::measurement_error) {
      CHECK(r.source.binary("y") == d.binary("y"));
      CHECK(r.source.binary("y_true") == d.binary("y"));
    } else {
      CHECK(r.source == d);
    }
    CHECK(r.target == d);
  }
}

TEST_CASE("selection on label with p = 1 empties the targeted cell", "[datagen]") {
  auto d = small_adult(5000, 7);
  BiasSpec b;
  b.kind = BiasKind::selection_on_label;
  b.p = 1;
  b.target_label = 1;
  auto r = inject_bias(d, b);
  CHECK(count_if2(r.source, 1, 1) == 0);
  CHECK(count_if2(r.source, 0, 1) == count_if2(d, 0, 1));
  REQUIRE(r.marked);
  auto sel = r.marked->binary("selected");
  CHECK(static_cast<std::size_t>(std::count(sel.begin(), sel.end(), 1)) == r.source.rows());
}

TEST_CASE("selection on label retains half the targeted cell at p = 0.5", "[datagen]") {
  auto d = small_adult(100000, 8);
  BiasSpec b;
  b.kind = BiasKind::selection_on_label;
  b.p = 0.5;
  b.seed = 11;
  auto r = inject_bias(d, b);
  const double kept = static_cast<double>(count_if2(r.source, 1, 0)) / static_cast<double>(count_if2(d, 1, 0));
  CHECK(kept == Approx(0.5).margin(0.01));
}

TEST_CASE("selection on predictors drops only matching a=1 rows", "[datagen]") {
  auto d = small_adult(5000, 9);
  BiasSpec b;
  b.kind = BiasKind::selection_on_predictors;
  b.p = 1;
  b.predicate = Predicate{"hours-per-week", "<", 45};
  auto r = inject_bias(d, b);
  auto a = r.source.binary("a");
  const auto& h = r.source.numeric("hours-per-week");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) CHECK(h[i] >= 45);
}

TEST_CASE("measurement error flips toward the configured direction", "[datagen]") {
  auto d = small_adult(20000, 10);
  const auto before = d.fingerprint();
  BiasSpec b;
  b.p = 0.8;
  auto r = inject_bias(d, b);
  CHECK(d.fingerprint() == before);
  CHECK(r.target.fingerprint() == before);
  auto a = r.source.binary("a");
  auto y = r.source.binary("y");
  auto yt = r.source.binary("y_true");
  CHECK(yt == d.binary("y"));
  std::size_t flipped = 0, eligible = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0 || yt[i] == 0) CHECK(y[i] == yt[i]);
    if (a[i] == 1 && yt[i] == 1) {
      ++eligible;
      flipped += y[i] == 0;
    }
  }
  CHECK(static_cast<double>(flipped) / static_cast<double>(eligible) == Approx(0.8).margin(0.03));
}

TEST_CASE("selection removing a whole group is an error", "[datagen]") {
  auto d = small_adult(2000, 12);
  BiasSpec b;
  b.kind = BiasKind::selection_on_predictors;
  b.p = 1;
  b.predicate = Predicate{"age", ">=", 0};
  CHECK_THROWS(inject_bias(d, b));
  b.predicate.reset();
  CHECK_THROWS_AS(inject_bias(d, b), input_error);
  b.kind = BiasKind::measurement_error;
  b.p = 1.5;
  CHECK_THROWS_AS(inject_bias(d, b), input_error);
}

TEST_CASE("generation is seed deterministic", "[datagen]") {
  auto x = small_adult(3000, 13);
  auto y = small_adult(3000, 13);
  CHECK(x == y);
  CHECK(x.fingerprint() == y.fingerprint());
  CHECK_FALSE(small_adult(3000, 14) == x);
  auto s1 = generate_scm(predictor_selection_scm(1000, 3));
  auto s2 = generate_scm(predictor_selection_scm(1000, 3));
  CHECK(s1 == s2);
}

TEST_CASE("train test split partitions the rows", "[datagen]") {
  auto s = train_test_split(1000, 0.3, 2);
  CHECK(s.test.size() == 300);
  CHECK(s.train.size() == 700);
  std::vector<std::size_t> all(s.train);
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("scm without edges out of A has identical counterfactuals", "[datagen]") {
  ScmSpec s;
  s.graph.add_node("A", NodeKind::protected_attr).add_node("X", NodeKind::x_perp_a).add_node("Y", NodeKind::label)
      .add_edge("X", "Y");
  s.cpts["A"] = {{}, {0.5}};
  s.cpts["X"] = {{}, {0.3}};
  s.cpts["Y"] = {{"X"}, {0.1, 0.9}};
  s.n = 2000;
  auto d = generate_scm(s);
  CHECK(d.binary("cf_X") == d.binary("X"));
  CHECK(d.binary("cf_y") == d.binary("y"));
  CHECK_FALSE(d.has("cf_a"));
}

TEST_CASE("counterfactual columns follow the flipped attribute", "[datagen]") {
  auto d = generate_scm(predictor_selection_scm(5000, 4));
  auto a = d.binary("a");
  auto w = d.binary("W"), cw = d.binary("cf_W");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += w[i] != cw[i];
  CHECK(differ > 0);
  CHECK(d.binary("cf_X") == d.binary("X"));
  CHECK(d.binary("cf_y") == d.binary("y"));
}

TEST_CASE("purely spurious scm recovers the label table", "[datagen]") {
  auto s = predictor_selection_scm(400000, 5);
  REQUIRE(purely_spurious(s.graph));
  auto d = generate_scm(s);
  auto a = d.binary("a"), x = d.binary("X"), y = d.binary("y");
  for (int xv = 0; xv < 2; ++xv)
    for (int av = 0; av < 2; ++av) {
      double num = 0, den = 0;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (x[i] == xv && a[i] == av) {
          ++den;
          num += y[i];
        }
      CHECK(num / den == Approx(s.cpts["Y"].p1[static_cast<std::size_t>(xv)]).margin(0.02));
    }
}

TEST_CASE("sampled scm data honour the separations of the graph", "[datagen]") {
  auto s = predictor_selection_scm(400000, 6);
  auto d = generate_scm(s);
  const std::vector<std::string> nodes = {"X", "Y", "A", "W"};
  std::vector<std::string> cols;
  for (const auto& n : nodes) cols.push_back(column_for(s.graph, n));
  auto j = empirical_joint(d, cols);
  std::size_t checked = 0;
  for (std::size_t u = 0; u < nodes.size(); ++u)
    for (std::size_t v = u + 1; v < nodes.size(); ++v) {
      std::vector<std::string> rest;
      for (std::size_t k = 0; k < nodes.size(); ++k)
        if (k != u && k != v) rest.push_back(nodes[k]);
      for (std::size_t m = 0; m < (std::size_t{1} << rest.size()); ++m) {
        NodeSet w;
        std::vector<std::string> wc;
        for (std::size_t k = 0; k < rest.size(); ++k)
          if (m & (std::size_t{1} << k)) {
            w.insert(rest[k]);
            wc.push_back(column_for(s.graph, rest[k]));
          }
        if (!d_separated(s.graph, nodes[u], nodes[v], w)) continue;
        ++checked;
        CHECK(ci_residual(j, cols[u], cols[v], wc) < 0.01);
      }
    }
  CHECK(checked >= 6);
}

TEST_CASE("scm json validation", "[datagen]") {
  auto s = predictor_selection_scm(10, 1);
  auto j = scm_to_json(s);
  auto back = scm_from_json(j);
  CHECK(back.graph == s.graph);
  CHECK(back.cpts.at("S").p1 == s.cpts.at("S").p1);

  auto bad = j;
  bad["cpts"]["Y"] = {{"parents", {"X"}}, {"rows", {{0.5, 0.5}, {0.3, 0.6}}}};
  CHECK_THROWS_AS(scm_from_json(bad), input_error);
  bad["cpts"]["Y"] = {{"parents", {"X"}}, {"p1", {0.5}}};
  CHECK_THROWS_AS(scm_from_json(bad), input_error);
  bad["cpts"]["Y"] = {{"parents", {"A"}}, {"p1", {0.5, 0.5}}};
  CHECK_THROWS_AS(scm_from_json(bad), input_error);
  bad["cpts"]["Y"] = {{"parents", {"X"}}, {"rows", {{0.8, 0.2}, {0.25, 0.75}}}};
  CHECK(scm_from_json(bad).cpts.at("Y").p1[1] == 0.75);
}

TEST_CASE("purely spurious flag", "[datagen]") {
  CHECK(purely_spurious(predictor_selection_scm(10, 1).graph));
  CHECK(purely_spurious(canonical_graph(BiasContext::selection_on_predictors)));
  CHECK(purely_spurious(canonical_graph(BiasContext::selection_on_label)));
  CausalGraph g = predictor_selection_scm(10, 1).graph;
  g.add_edge("W", "Y");
  CHECK_FALSE(purely_spurious(g));
}

TEST_CASE("csv round trip on a three-row table", "[datagen]") {
  Dataset d;
  d.set_numeric("x", ColumnType::numeric, {1.5, -2, 1e-7});
  d.set_categorical("c", {"plain", "with,comma", "with \"quote\""});
  d.set_binary("y", {0, 1, 1});
  std::stringstream ss;
  write_csv(ss, d);
  auto back = read_csv(ss, dataset_schema(d));
  CHECK(back == d);
}

TEST_CASE("csv schema mismatch names the column", "[datagen]") {
  std::stringstream ss("x,c\n1,a\n");
  Schema s{{{"x", ColumnType::numeric}, {"c", ColumnType::categorical}, {"z", ColumnType::numeric}}, std::nullopt};
  try {
    read_csv(ss, s);
    FAIL("expected an error");
  } catch (const input_error& e) {
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
  }
  std::stringstream bad("x,c,z\n1,a,notanumber\n");
  CHECK_THROWS_WITH(read_csv(bad, s), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("adult sample parses through the bundled schema", "[datagen]") {
  auto schema = read_schema_file(std::string(CFAIR_DATA_DIR) + "/adult_schema.json");
  CHECK(schema == adult_schema());
  auto d = read_csv_file(std::string(CFAIR_TEST_DATA) + "/adult_sample.csv", schema);
  CHECK(d.rows() == 10);
  CHECK(d.cols() == 15);
  CHECK(d.binary("y") == std::vector<int>{0, 0, 0, 0, 0, 0, 0, 1, 1, 1});
  CHECK(d.categorical("race")[9] == "Asian-Pac-Islander");
  CHECK(d.numeric("capital-gain")[8] == 14084);
}

TEST_CASE("adult-like generator has the census columns", "[datagen]") {
  auto d = generate_adult_like({20000, 21});
  for (const auto& c : adult_schema().columns) CHECK(d.has(c.name));
  auto y = d.binary("y");
  const double base = static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
  CHECK(base > 0.15);
  CHECK(base < 0.35);
}
