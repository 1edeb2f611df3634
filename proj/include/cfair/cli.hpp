#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfair/experiment.hpp"

namespace cfair {

namespace detail {

inline nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error(std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), what);
}

inline void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot write '" + path + "'");
  f << text;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Data written by `simulate` carries a sibling schema file: foo.csv -> foo.schema.json.
inline std::string default_schema_path(const std::string& csv) {
  auto p = std::filesystem::path(csv);
  return (p.parent_path() / (p.stem().string() + ".schema.json")).string();
}

inline Dataset load_table(const std::string& csv, std::string schema) {
  if (schema.empty()) schema = default_schema_path(csv);
  CsvOptions o;
  o.trim = true;
  return read_csv_file(csv, read_schema_file(schema), o);
}

inline void save_table(const std::string& csv, const Dataset& d) {
  std::ostringstream body;
  write_csv(body, d);
  write_text(csv, body.str());
  write_text(default_schema_path(csv), schema_to_json(dataset_schema(d)).dump(2) + "\n");
}

inline bool is_reserved_column(const std::string& c) {
  return c == "a" || c == "y" || c == "y_true" || c == "selected" || c.rfind(kCfPrefix, 0) == 0;
}

inline std::string equivalence_text(const MetricEquivalenceReport& rep) {
  std::ostringstream o;
  for (const auto& e : rep.metrics) {
    o << metric_name(e.id) << ": ";
    if (!e.verdict) o << "NOT EVALUATED (" << e.note << ")\n";
    else o << (*e.verdict == Verdict::equivalent ? "EQUIVALENT" : "NOT EQUIVALENT") << "\n";
    for (const auto& p : e.paths) o << "    " << p << "\n";
  }
  o << "resolution consistent: " << (rep.resolution_consistent ? "yes" : "no") << "\n";
  for (const auto& r : rep.resolutions)
    o << "  orientation " << (r.orientation.empty() ? "(as given)" : r.orientation) << ": dp "
      << (r.dp ? "pass" : "fail") << ", eo " << (r.eo ? "pass" : "fail") << ", cal " << (r.cal ? "pass" : "fail")
      << (r.cdp ? std::string(", cdp ") + (*r.cdp ? "pass" : "fail") : "") << "\n";
  for (const auto& d : rep.diagnostics) o << d << "\n";
  o << "caveats:\n";
  for (const auto& c : rep.caveats) o << "  - " << c << "\n";
  return o.str();
}

struct CliOptions {
  std::string graph, strata, out, config, data, schema, model, features, predictor;
  std::uint64_t seed = 0;
  int replicates = 0, threads = 0;
  double weight = -1;
};

inline int cmd_graph_check(const CliOptions& o, std::ostream& out) {
  const std::string text = [&] {
    std::ifstream in(o.graph, std::ios::binary);
    if (!in) throw input_error("cannot open graph file '" + o.graph + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }();
  const CausalGraph g = codec_read(text);
  const auto v = validate(g);
  if (!v.ok()) throw input_error("invalid graph:\n  " + join(v.issues, "\n  "));
  const auto strata = split_list(o.strata);
  const auto rep = metric_equivalence_report(g, NodeSet(strata.begin(), strata.end()));
  out << equivalence_text(rep);
  if (!o.out.empty()) {
    const auto path = (std::filesystem::path(o.out) / "equivalence.json").string();
    write_text(path, report_to_json(rep).dump(2) + "\n");
    out << "wrote " << path << "\n";
  }
  return 0;
}

// Config: {"scm": {...}} for a discrete SCM, or an Adult-like block:
// {"dataset": {...}, "protected": {...}, "bias": {"kind": ..., ...}}
inline int cmd_simulate(const CliOptions& o, std::ostream& out) {
  if (o.config.empty()) throw input_error("simulate needs --config");
  if (o.out.empty()) throw input_error("simulate needs --out (a directory)");
  auto j = read_json_file(o.config, "simulate config");
  if (j.contains("scm")) {
    ScmSpec s = scm_from_json(j["scm"]);
    if (o.seed) s.seed = o.seed;
    const Dataset d = generate_scm(s);
    const auto path = (std::filesystem::path(o.out) / "scm.csv").string();
    save_table(path, d);
    out << "wrote " << d.rows() << " rows to " << path << "\n";
    return 0;
  }
  const auto base_dir = std::filesystem::path(o.config).parent_path().string();
  ExperimentConfig c = experiment_config_from_json(j, base_dir);
  if (o.seed) c.seed = o.seed;
  const Dataset base = load_experiment_data(c);
  ProtectedSpec ps = c.protected_spec;
  ps.seed = detail::mix_seed(c.seed, 1);
  const Dataset data = simulate_protected(base, ps);
  save_table((std::filesystem::path(o.out) / "target.csv").string(), data);
  out << "wrote " << data.rows() << " target rows\n";
  if (j.contains("bias")) {
    const auto& b = j["bias"];
    if (!b.contains("kind")) throw input_error("bias: needs 'kind'");
    auto kind = parse_context(b["kind"].get<std::string>());
    if (!kind) throw input_error("bias.kind: unknown context '" + b["kind"].get<std::string>() + "'");
    BiasSpec spec = bias_from_json(b, *kind);
    if (!b.contains("seed")) spec.seed = detail::mix_seed(c.seed, 10);
    const auto r = inject_bias(data, spec);
    save_table((std::filesystem::path(o.out) / "source.csv").string(), r.source);
    if (r.marked) save_table((std::filesystem::path(o.out) / "marked.csv").string(), *r.marked);
    out << "wrote " << r.source.rows() << " source rows (" << context_name(*kind) << ")\n";
  }
  return 0;
}

inline int cmd_train(const CliOptions& o, std::ostream& out) {
  if (o.data.empty() || o.out.empty()) throw input_error("train needs --data and --out");
  const Dataset d = load_table(o.data, o.schema);
  const std::string pk = o.predictor.empty() ? "naive" : o.predictor;
  auto kind = parse_predictor(pk);
  if (!kind || *kind == PredictorKind::counterfactual || *kind == PredictorKind::oracle)
    throw input_error("train --predictor must be naive, ftu or target_trained (the counterfactual predictor "
                      "is evaluated from a naive model)");
  TrainConfig tc;
  tc.optimizer = Optimizer::newton;
  tc.epochs = 100;
  std::vector<std::string> exclude = {"race"};
  std::vector<std::string> features = split_list(o.features);
  if (!o.config.empty()) {
    auto j = read_json_file(o.config, "train config");
    tc = train_config_from_json(j.contains("train") ? j["train"] : j, tc);
    if (j.contains("interaction_exclude")) exclude = j["interaction_exclude"].get<std::vector<std::string>>();
    if (features.empty() && j.contains("features")) features = j["features"].get<std::vector<std::string>>();
  }
  if (o.seed) tc.seed = o.seed;
  if (features.empty())
    for (const auto& c : d.schema())
      if (!is_reserved_column(c.name)) features.push_back(c.name);
  const bool with_a = *kind != PredictorKind::ftu;
  const Model m = train(d, features, {with_a, with_a, exclude}, tc);
  write_text(o.out, model_to_json(m).dump(2) + "\n");
  out << "trained " << pk << " on " << d.rows() << " rows, " << m.weights.size() << " weights, final loss "
      << Dataset::format_number(m.loss_history.back()) << "\nwrote " << o.out << "\n";
  return 0;
}

inline int cmd_evaluate(const CliOptions& o, std::ostream& out) {
  if (o.model.empty() || o.data.empty()) throw input_error("evaluate needs --model and --data");
  const Model m = model_from_json(read_json_file(o.model, "model"));
  const Dataset d = load_table(o.data, o.schema);
  const bool cf = o.predictor == "counterfactual";
  if (!o.predictor.empty() && !cf && !parse_predictor(o.predictor))
    throw input_error("unknown predictor '" + o.predictor + "'");
  double w = o.weight;
  if (cf && w < 0) {
    const auto a = d.binary("a");
    w = static_cast<double>(std::count(a.begin(), a.end(), 1)) / static_cast<double>(a.size());
  }
  const auto s = cf ? cf_predict(m, d, w) : m.predict(d);
  LabeledPredictions lp;
  lp.a = d.binary("a");
  lp.y = d.binary("y");
  lp.s = s;
  for (double v : s) lp.d.push_back(decide(v));
  if (!o.strata.empty()) {
    if (d.type(o.strata) == ColumnType::categorical) lp.l = d.categorical(o.strata);
    else
      for (double v : d.numeric(o.strata)) lp.l.push_back(Dataset::format_number(v));
  }
  const auto rep = full_metric_report(lp);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ok += lp.d[i] == lp.y[i];
  const double acc = static_cast<double>(ok) / static_cast<double>(s.size());
  out << "rows " << d.rows() << ", accuracy " << detail::fixed(acc) << (cf ? ", counterfactual mixture w=" + Dataset::format_number(w) : "")
      << "\n" << metric_report_table(rep);
  if (!o.out.empty()) {
    nlohmann::json j = {{"rows", d.rows()}, {"accuracy", acc}, {"metrics", metric_report_to_json(rep)}};
    if (cf) j["cf_weight"] = w;
    write_text(o.out, j.dump(2) + "\n");
  }
  return 0;
}

inline int cmd_experiment(const CliOptions& o, std::ostream& out) {
  nlohmann::json j = nlohmann::json::object();
  std::string base_dir;
  if (!o.config.empty()) {
    j = read_json_file(o.config, "experiment config");
    base_dir = std::filesystem::path(o.config).parent_path().string();
  }
  ExperimentConfig c = experiment_config_from_json(j, base_dir);
  if (o.seed) c.seed = o.seed;
  if (o.replicates) c.replicates = o.replicates;
  if (o.threads) c.threads = o.threads;
  if (!o.out.empty()) c.out = o.out;
  if (!o.predictor.empty()) {
    c.predictors.clear();
    for (const auto& p : split_list(o.predictor)) {
      auto k = parse_predictor(p);
      if (!k || *k == PredictorKind::oracle) throw input_error("--predictor: unsupported kind '" + p + "'");
      c.predictors.push_back(*k);
    }
  }
  if (c.replicates < 1) throw input_error("--replicates must be at least 1");
  const auto r = run_experiment(c);
  out << experiment_text(r);
  write_experiment_outputs(r, c.out);
  out << "wrote " << c.out << "/accuracy.csv, fairness.csv, report.json\n";
  return 0;
}

}  // namespace detail

// Exit codes: 0 success, 1 runtime failure, 2 invalid input.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Causal-context fairness audits and experiments"};
  app.require_subcommand(1);
  detail::CliOptions o;

  auto* gc = app.add_subcommand("graph-check", "equivalence of counterfactual fairness and group metrics for a graph");
  gc->add_option("graph", o.graph, "graph JSON file")->required();
  gc->add_option("--strata", o.strata, "comma-separated context nodes for conditional demographic parity");
  gc->add_option("--out", o.out, "directory for equivalence.json");

  auto* sim = app.add_subcommand("simulate", "generate SCM or Adult-like data, optionally biased");
  sim->add_option("--config", o.config, "simulation config JSON")->required();
  sim->add_option("--out", o.out, "output directory")->required();
  sim->add_option("--seed", o.seed, "seed override");

  auto* tr = app.add_subcommand("train", "fit a logistic predictor");
  tr->add_option("--data", o.data, "CSV file")->required();
  tr->add_option("--schema", o.schema, "schema JSON (default: <data>.schema.json)");
  tr->add_option("--config", o.config, "train config JSON");
  tr->add_option("--features", o.features, "comma-separated feature columns");
  tr->add_option("--predictor", o.predictor, "naive, ftu or target_trained");
  tr->add_option("--seed", o.seed, "seed override");
  tr->add_option("--out", o.out, "model JSON path")->required();

  auto* ev = app.add_subcommand("evaluate", "group fairness metrics of a model on a table");
  ev->add_option("--model", o.model, "model JSON")->required();
  ev->add_option("--data", o.data, "CSV file")->required();
  ev->add_option("--schema", o.schema, "schema JSON (default: <data>.schema.json)");
  ev->add_option("--predictor", o.predictor, "counterfactual to evaluate the mixture of a naive model");
  ev->add_option("--weight", o.weight, "P(A=1) for the mixture (default: share of a=1 rows)");
  ev->add_option("--strata", o.strata, "column for conditional demographic parity");
  ev->add_option("--out", o.out, "metrics JSON path");

  auto* ex = app.add_subcommand("experiment", "robust prediction and group fairness under three biases");
  ex->add_option("--config", o.config, "experiment config JSON");
  ex->add_option("--seed", o.seed, "seed override");
  ex->add_option("--replicates", o.replicates, "replicate override");
  ex->add_option("--threads", o.threads, "replicates run in parallel");
  ex->add_option("--predictor", o.predictor, "comma-separated predictors to report");
  ex->add_option("--out", o.out, "output directory (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gc) return detail::cmd_graph_check(o, out);
    if (*sim) return detail::cmd_simulate(o, out);
    if (*tr) return detail::cmd_train(o, out);
    if (*ev) return detail::cmd_evaluate(o, out);
    if (*ex) return detail::cmd_experiment(o, out);
  } catch (const input_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cfair
