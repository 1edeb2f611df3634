#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cfair/cli.hpp"

using namespace cfair;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cfair");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string graphs(const std::string& name) { return std::string(CFAIR_DATA_DIR) + "/../configs/graphs/" + name; }
std::string configs(const std::string& name) { return std::string(CFAIR_DATA_DIR) + "/../configs/" + name; }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "cfair_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("graph-check on the canonical graphs", "[cli]") {
  auto me = cli({"graph-check", graphs("measurement_error.json")});
  CHECK(me.code == 0);
  CHECK_THAT(me.out, Catch::Matchers::ContainsSubstring("demographic_parity: EQUIVALENT"));
  CHECK_THAT(me.out, Catch::Matchers::ContainsSubstring("equalized_odds: NOT EQUIVALENT"));
  CHECK_THAT(me.out, Catch::Matchers::ContainsSubstring("binary_calibration: NOT EQUIVALENT"));

  auto sl = cli({"graph-check", graphs("selection_on_label.json")});
  CHECK(sl.code == 0);
  for (const char* m : {"equalized_odds", "fpr_balance", "fnr_balance", "balance_negative_class", "balance_positive_class"})
    CHECK_THAT(sl.out, Catch::Matchers::ContainsSubstring(std::string(m) + ": EQUIVALENT"));
  CHECK_THAT(sl.out, Catch::Matchers::ContainsSubstring("demographic_parity: NOT EQUIVALENT"));

  auto sp = cli({"graph-check", graphs("selection_on_predictors.json")});
  CHECK_THAT(sp.out, Catch::Matchers::ContainsSubstring("score_calibration: EQUIVALENT"));
}

TEST_CASE("graph-check writes the json report", "[cli]") {
  auto dir = scratch("graph");
  auto r = cli({"graph-check", graphs("selection_on_predictors.json"), "--out", dir.string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(slurp(dir / "equivalence.json"));
  CHECK(j["binary_calibration"]["verdict"] == "equivalent");
  CHECK(j["resolutions"].size() == 2);
}

TEST_CASE("graph-check input errors exit with 2", "[cli]") {
  auto bad = cli({"graph-check", std::string(CFAIR_TEST_DATA) + "/malformed_graph.json"});
  CHECK(bad.code == 2);
  CHECK_THAT(bad.err, Catch::Matchers::ContainsSubstring("line"));
  CHECK(cli({"graph-check", "/nonexistent/graph.json"}).code == 2);

  auto dir = scratch("invalid");
  std::ofstream(dir / "g.json") << R"({"nodes":[{"name":"A","kind":"protected"},{"name":"Y","kind":"label"}],
    "edges":[{"from":"Y","to":"A"}]})";
  auto inv = cli({"graph-check", (dir / "g.json").string()});
  CHECK(inv.code == 2);
  CHECK_THAT(inv.err, Catch::Matchers::ContainsSubstring("protected node has parent"));
  CHECK(cli({"graph-check", graphs("measurement_error.json"), "--strata", "X_perp_Y"}).code == 2);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"experiment", "--replicates", "zero"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("simulate, train and evaluate round trip", "[cli]") {
  auto dir = scratch("pipeline");
  auto sim = cli({"simulate", "--config", configs("simulate_selection_on_label.json"), "--out", dir.string()});
  REQUIRE(sim.code == 0);
  REQUIRE(fs::exists(dir / "source.csv"));
  REQUIRE(fs::exists(dir / "source.schema.json"));
  REQUIRE(fs::exists(dir / "marked.csv"));

  auto tr = cli({"train", "--data", (dir / "source.csv").string(), "--out", (dir / "naive.json").string()});
  REQUIRE(tr.code == 0);
  auto ftu = cli({"train", "--data", (dir / "source.csv").string(), "--predictor", "ftu", "--out",
                  (dir / "ftu.json").string()});
  REQUIRE(ftu.code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "ftu.json"))["uses_protected"] == false);

  auto ev = cli({"evaluate", "--model", (dir / "naive.json").string(), "--data", (dir / "target.csv").string(),
                 "--predictor", "counterfactual", "--weight", "0.5", "--out", (dir / "metrics.json").string()});
  REQUIRE(ev.code == 0);
  CHECK_THAT(ev.out, Catch::Matchers::ContainsSubstring("equalized_odds"));
  auto j = nlohmann::json::parse(slurp(dir / "metrics.json"));
  CHECK(j["cf_weight"] == 0.5);
  CHECK(j["accuracy"].get<double>() > 0.7);

  auto cf_on_ftu = cli({"evaluate", "--model", (dir / "ftu.json").string(), "--data", (dir / "target.csv").string(),
                        "--predictor", "counterfactual"});
  CHECK(cf_on_ftu.code == 2);
  CHECK(cli({"train", "--data", (dir / "source.csv").string(), "--predictor", "svm", "--out", "x.json"}).code == 2);
  CHECK(cli({"train", "--data", (dir / "missing.csv").string(), "--out", "x.json"}).code == 2);
}

TEST_CASE("simulate an scm", "[cli]") {
  auto dir = scratch("scm");
  auto r = cli({"simulate", "--config", configs("scm_selection_on_predictors.json"), "--out", dir.string()});
  REQUIRE(r.code == 0);
  auto d = read_csv_file((dir / "scm.csv").string(), read_schema_file((dir / "scm.schema.json").string()));
  CHECK(d.has("cf_W"));
  CHECK(d.rows() > 5000);
}

TEST_CASE("experiment output is byte identical across runs", "[cli]") {
  auto dir = scratch("experiment");
  std::ofstream(dir / "cfg.json") << R"({"seed": 5, "dataset": {"synthetic": {"n": 4000}}})";
  auto a = cli({"experiment", "--config", (dir / "cfg.json").string(), "--replicates", "1", "--out", (dir / "a").string()});
  REQUIRE(a.code == 0);
  std::map<std::string, std::string> first;
  for (const char* f : {"accuracy.csv", "fairness.csv", "report.json"}) {
    CHECK(fs::exists(dir / "a" / f));
    first[f] = slurp(dir / "a" / f);
  }
  auto b = cli({"experiment", "--config", (dir / "cfg.json").string(), "--replicates", "1", "--out", (dir / "a").string()});
  REQUIRE(b.code == 0);
  for (const auto& [f, text] : first) CHECK(slurp(dir / "a" / f) == text);
  CHECK(slurp(dir / "a" / "accuracy.csv").rfind("context,predictor,split,mean,sd", 0) == 0);
  auto fair = slurp(dir / "a" / "fairness.csv");
  CHECK_THAT(fair, Catch::Matchers::ContainsSubstring("measurement_error,demographic_parity,"));
  CHECK_THAT(fair, Catch::Matchers::ContainsSubstring(",true\r\n"));
  std::size_t marks = 0;
  for (std::size_t p = fair.find(",true"); p != std::string::npos; p = fair.find(",true", p + 1)) ++marks;
  CHECK(marks == 3);

  auto c = cli({"experiment", "--config", (dir / "cfg.json").string(), "--replicates", "1", "--seed", "6", "--out",
                (dir / "c").string()});
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "c" / "accuracy.csv") != first["accuracy.csv"]);
}

TEST_CASE("experiment config validation", "[cli]") {
  auto dir = scratch("badcfg");
  std::ofstream(dir / "p.json") << R"({"protected": {"p": 1.5}})";
  CHECK(cli({"experiment", "--config", (dir / "p.json").string()}).code == 2);
  std::ofstream(dir / "k.json") << R"({"contexts": {"time_travel": {}}})";
  CHECK(cli({"experiment", "--config", (dir / "k.json").string()}).code == 2);
  std::ofstream(dir / "r.json") << R"({"replicates": 0})";
  CHECK(cli({"experiment", "--config", (dir / "r.json").string()}).code == 2);
  std::ofstream(dir / "s.json") << R"({"contexts": {"selection_on_predictors": {"p": 0.8}}})";
  CHECK(cli({"experiment", "--config", (dir / "s.json").string()}).code == 2);
}

TEST_CASE("runtime failures exit with 1", "[cli]") {
  auto dir = scratch("runtime");
  std::ofstream(dir / "cfg.json") << R"({"dataset": {"synthetic": {"n": 3000}},
    "contexts": {"selection_on_predictors": {"p": 1.0, "predicate": {"column": "age", "op": ">=", "value": 0}}}})";
  auto r = cli({"experiment", "--config", (dir / "cfg.json").string(), "--replicates", "1", "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("entire protected group"));
}

TEST_CASE("installed binary honours the exit code contract", "[cli]") {
  const std::string bin = CFAIR_CLI_PATH;
  CHECK(std::system((bin + " graph-check " + graphs("measurement_error.json") + " > /dev/null").c_str()) == 0);
  const int bad = std::system((bin + " graph-check " + std::string(CFAIR_TEST_DATA) + "/malformed_graph.json 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 2);
}
