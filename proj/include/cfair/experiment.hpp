#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/datagen.hpp"
#include "cfair/equivalence.hpp"
#include "cfair/predictors.hpp"

namespace cfair {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int replicates = 10;
  int threads = 1;
  std::string out = "results";

  // dataset: synthetic Adult-like table unless a csv path is given
  std::size_t synthetic_n = 30000;
  std::string csv_path;
  std::string schema_path;  // defaults to the bundled Adult schema

  ProtectedSpec protected_spec;
  std::vector<std::string> features;  // empty: every schema column
  std::vector<std::string> interaction_exclude = {"race"};
  double test_fraction = 0.3;
  std::string cf_weight = "target";  // target, source, or a number in [0,1]
  TrainConfig train;
  std::vector<PredictorKind> predictors = {PredictorKind::naive, PredictorKind::ftu, PredictorKind::counterfactual,
                                           PredictorKind::target_trained};
  std::vector<BiasSpec> contexts;
};

inline std::vector<BiasSpec> default_contexts() {
  BiasSpec me;
  me.kind = BiasKind::measurement_error;
  BiasSpec sl;
  sl.kind = BiasKind::selection_on_label;
  sl.p = 0.5;
  BiasSpec sp;
  sp.kind = BiasKind::selection_on_predictors;
  sp.predicate = Predicate{"hours-per-week", "<", 45};
  return {me, sl, sp};
}

namespace detail {

inline std::string path_join(const std::string& base, const std::string& rel) {
  if (rel.empty() || std::filesystem::path(rel).is_absolute() || base.empty()) return rel;
  return (std::filesystem::path(base) / rel).lexically_normal().string();
}

}  // namespace detail

// Relative dataset paths resolve against `base_dir` (the config file's directory).
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& base_dir = "") {
  ExperimentConfig c;
  c.train.optimizer = Optimizer::newton;
  c.train.epochs = 100;
  c.train.l2 = 1e-4;
  c.contexts = default_contexts();
  if (!j.is_object()) throw input_error("experiment config: expected an object");
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      if (d.contains("csv")) {
        c.csv_path = detail::path_join(base_dir, d["csv"].get<std::string>());
        if (d.contains("schema")) c.schema_path = detail::path_join(base_dir, d["schema"].get<std::string>());
      } else if (d.contains("synthetic")) {
        c.synthetic_n = d["synthetic"].value("n", c.synthetic_n);
      } else {
        throw input_error("dataset: needs 'csv' or 'synthetic'");
      }
    }
    if (j.contains("protected")) {
      const auto& p = j["protected"];
      c.protected_spec.column = p.value("column", c.protected_spec.column);
      c.protected_spec.level = p.value("level", c.protected_spec.level);
      c.protected_spec.p = p.value("p", c.protected_spec.p);
      c.protected_spec.p_a1 = p.value("p_a1", c.protected_spec.p_a1);
    }
    if (j.contains("features")) c.features = j["features"].get<std::vector<std::string>>();
    if (j.contains("interaction_exclude"))
      c.interaction_exclude = j["interaction_exclude"].get<std::vector<std::string>>();
    if (j.contains("test_fraction")) c.test_fraction = j["test_fraction"].get<double>();
    if (j.contains("cf_weight")) {
      const auto& w = j["cf_weight"];
      c.cf_weight = w.is_number() ? Dataset::format_number(w.get<double>()) : w.get<std::string>();
    }
    if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
    if (j.contains("predictors")) {
      c.predictors.clear();
      for (const auto& s : j["predictors"]) {
        auto k = parse_predictor(s.get<std::string>());
        if (!k || *k == PredictorKind::oracle)
          throw input_error("predictors: unsupported kind '" + s.get<std::string>() + "'");
        c.predictors.push_back(*k);
      }
    }
    if (j.contains("contexts")) {
      c.contexts.clear();
      for (const auto& [name, block] : j["contexts"].items()) {
        auto k = parse_context(name);
        if (!k) throw input_error("contexts: unknown context '" + name + "'");
        c.contexts.push_back(bias_from_json(block, *k));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("experiment config: ") + e.what());
  }
  if (c.replicates < 1) throw input_error("experiment config: replicates must be at least 1");
  if (c.threads < 1) throw input_error("experiment config: threads must be at least 1");
  if (!(c.protected_spec.p >= 0 && c.protected_spec.p <= 1) ||
      !(c.protected_spec.p_a1 > 0 && c.protected_spec.p_a1 < 1))
    throw input_error("experiment config: protected probabilities out of range");
  if (!(c.test_fraction > 0 && c.test_fraction < 1)) throw input_error("experiment config: test_fraction in (0,1)");
  if (c.cf_weight != "target" && c.cf_weight != "source") {
    bool ok = false;
    const double w = detail::parse_number(c.cf_weight, ok);
    if (!ok || !(w >= 0 && w <= 1)) throw input_error("experiment config: cf_weight must be target, source or in [0,1]");
  }
  if (c.contexts.empty()) throw input_error("experiment config: no contexts");
  return c;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["threads"] = c.threads;
  j["out"] = c.out;
  if (c.csv_path.empty()) j["dataset"] = {{"synthetic", {{"n", c.synthetic_n}}}};
  else j["dataset"] = {{"csv", c.csv_path}, {"schema", c.schema_path}};
  j["protected"] = {{"column", c.protected_spec.column},
                    {"level", c.protected_spec.level},
                    {"p", c.protected_spec.p},
                    {"p_a1", c.protected_spec.p_a1}};
  j["features"] = c.features;
  j["interaction_exclude"] = c.interaction_exclude;
  j["test_fraction"] = c.test_fraction;
  j["cf_weight"] = c.cf_weight;
  j["train"] = train_config_to_json(c.train);
  for (auto k : c.predictors) j["predictors"].push_back(predictor_name(k));
  for (const auto& b : c.contexts) j["contexts"][context_name(b.kind)] = bias_to_json(b);
  return j;
}

// ---- results ---------------------------------------------------------------------

struct Summary {
  std::vector<double> values;  // one per replicate
  double mean() const {
    double s = 0;
    for (double v : values) s += v;
    return values.empty() ? 0 : s / static_cast<double>(values.size());
  }
  double sd() const {
    if (values.size() < 2) return 0;
    const double m = mean();
    double s = 0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
  }
};

inline const std::vector<std::string>& table_metrics() {
  static const std::vector<std::string> m = {"demographic_parity", "equalized_odds", "binary_calibration"};
  return m;
}

struct ContextResult {
  BiasKind kind;
  std::string predicted_to_vanish;                 // one of table_metrics()
  std::map<std::string, Summary> accuracy;          // "predictor/split"
  std::map<std::string, Summary> fairness;          // every metric of the CF predictor
  Summary cf_gap;                                   // mean |f(x) - f(x with counterfactual race)|
  Summary source_rows;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ContextResult> contexts;
  const ContextResult& at(BiasKind k) const {
    for (const auto& c : contexts)
      if (c.kind == k) return c;
    throw std::out_of_range(context_name(k));
  }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double accuracy(const std::vector<double>& s, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ok += decide(s[i]) == y[i];
  return static_cast<double>(ok) / static_cast<double>(s.size());
}

inline Dataset concat(const Dataset& x, const Dataset& y) {
  Dataset d;
  for (const auto& c : x.schema()) {
    if (c.type == ColumnType::categorical) {
      auto v = x.categorical(c.name);
      const auto& w = y.categorical(c.name);
      v.insert(v.end(), w.begin(), w.end());
      d.set_categorical(c.name, std::move(v));
    } else {
      auto v = x.numeric(c.name);
      const auto& w = y.numeric(c.name);
      v.insert(v.end(), w.begin(), w.end());
      d.set_numeric(c.name, c.type, std::move(v));
    }
  }
  return d;
}

inline double fraction_a1(const Dataset& d) {
  const auto a = d.binary("a");
  return static_cast<double>(std::count(a.begin(), a.end(), 1)) / static_cast<double>(a.size());
}

struct ReplicateOutput {
  std::vector<std::map<std::string, double>> accuracy, fairness;
  std::vector<double> cf_gap, source_rows;
};

inline ReplicateOutput run_replicate(const ExperimentConfig& c, const Dataset& base,
                                     const std::vector<std::string>& features, int r) {
  const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(r);
  ProtectedSpec ps = c.protected_spec;
  ps.seed = mix_seed(seed, 1);
  const Dataset data = simulate_protected(base, ps);
  const Split split = train_test_split(data.rows(), c.test_fraction, mix_seed(seed, 2));
  const Dataset target_train = data.take(split.train);
  const Dataset target_test = data.take(split.test);

  TrainConfig tc = c.train;
  tc.seed = mix_seed(seed, 3);
  const EncodingOptions with_a{true, true, c.interaction_exclude};
  const EncodingOptions without_a{false, false, {}};
  const Model target = train(target_train, features, with_a, tc);

  ReplicateOutput out;
  for (std::size_t ci = 0; ci < c.contexts.size(); ++ci) {
    BiasSpec b = c.contexts[ci];
    b.seed = mix_seed(seed, 10 + 2 * ci);
    const Dataset src_train = inject_bias(target_train, b).source;
    b.seed = mix_seed(seed, 11 + 2 * ci);
    const Dataset src_test = inject_bias(target_test, b).source;

    const Model naive = train(src_train, features, with_a, tc);
    const Model ftu = train(src_train, features, without_a, tc);
    double w = 0.5;
    if (c.cf_weight == "target") w = fraction_a1(target_train);
    else if (c.cf_weight == "source") w = fraction_a1(src_train);
    else {
      bool ok = false;
      w = parse_number(c.cf_weight, ok);
    }

    auto scores = [&](PredictorKind k, const Dataset& d) {
      switch (k) {
        case PredictorKind::naive: return naive.predict(d);
        case PredictorKind::ftu: return ftu.predict(d);
        case PredictorKind::counterfactual: return cf_predict(naive, d, w);
        case PredictorKind::target_trained: return target.predict(d);
        default: throw input_error("unsupported predictor in experiment");
      }
    };
    std::map<std::string, double> acc;
    for (auto k : c.predictors) {
      acc[std::string(predictor_name(k)) + "/source"] = accuracy(scores(k, src_test), src_test.binary("y"));
      acc[std::string(predictor_name(k)) + "/target"] = accuracy(scores(k, target_test), target_test.binary("y"));
    }
    out.accuracy.push_back(acc);

    const Dataset source = concat(src_train, src_test);
    const auto s = cf_predict(naive, source, w);
    LabeledPredictions lp;
    lp.a = source.binary("a");
    lp.y = source.binary("y");
    lp.s = s;
    for (double v : s) lp.d.push_back(decide(v));
    std::map<std::string, double> fair;
    for (const auto& m : full_metric_report(lp).metrics)
      if (m.aggregate) fair[m.name] = *m.aggregate;
    out.fairness.push_back(fair);

    const std::string cf_col = std::string(kCfPrefix) + c.protected_spec.column;
    Dataset flipped = source;
    flipped.set_categorical(c.protected_spec.column, source.categorical(cf_col));
    const auto s_cf = cf_predict(naive, flipped, w);
    double gap = 0;
    for (std::size_t i = 0; i < s.size(); ++i) gap += std::fabs(s[i] - s_cf[i]);
    out.cf_gap.push_back(gap / static_cast<double>(s.size()));
    out.source_rows.push_back(static_cast<double>(source.rows()));
  }
  return out;
}

}  // namespace detail

inline Dataset load_experiment_data(const ExperimentConfig& c) {
  if (c.csv_path.empty()) return generate_adult_like({c.synthetic_n, detail::mix_seed(c.seed, 0)});
  const Schema schema = c.schema_path.empty() ? adult_schema() : read_schema_file(c.schema_path);
  CsvOptions o;
  o.trim = true;
  return read_csv_file(c.csv_path, schema, o);
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  const Dataset base = load_experiment_data(c);
  std::vector<std::string> features = c.features;
  if (features.empty())
    for (const auto& col : base.schema())
      if (col.name != "y") features.push_back(col.name);

  std::vector<detail::ReplicateOutput> reps(static_cast<std::size_t>(c.replicates));
  if (c.threads <= 1) {
    for (int r = 0; r < c.replicates; ++r) reps[static_cast<std::size_t>(r)] = detail::run_replicate(c, base, features, r);
  } else {
    for (int start = 0; start < c.replicates; start += c.threads) {
      std::vector<std::future<detail::ReplicateOutput>> jobs;
      for (int r = start; r < std::min(c.replicates, start + c.threads); ++r)
        jobs.push_back(std::async(std::launch::async, [&, r] { return detail::run_replicate(c, base, features, r); }));
      for (std::size_t k = 0; k < jobs.size(); ++k) reps[static_cast<std::size_t>(start) + k] = jobs[k].get();
    }
  }

  ExperimentResult res;
  res.config = c;
  for (std::size_t ci = 0; ci < c.contexts.size(); ++ci) {
    ContextResult cr;
    cr.kind = c.contexts[ci].kind;
    const auto eq = metric_equivalence_report(canonical_graph(cr.kind));
    for (const auto& m : table_metrics())
      for (auto id : kAllMetrics)
        if (metric_name(id) == m && eq.equivalent(id)) cr.predicted_to_vanish = m;
    for (const auto& rep : reps) {
      for (const auto& [k, v] : rep.accuracy[ci]) cr.accuracy[k].values.push_back(v);
      for (const auto& [k, v] : rep.fairness[ci]) cr.fairness[k].values.push_back(v);
      cr.cf_gap.values.push_back(rep.cf_gap[ci]);
      cr.source_rows.values.push_back(rep.source_rows[ci]);
    }
    res.contexts.push_back(std::move(cr));
  }
  return res;
}

// ---- output -------------------------------------------------------------------------

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << (v == 0 ? 0.0 : v);
  return o.str();
}

}  // namespace detail

inline std::string accuracy_csv(const ExperimentResult& r) {
  std::string s = "context,predictor,split,mean,sd\r\n";
  for (const auto& c : r.contexts)
    for (auto k : r.config.predictors)
      for (const char* split : {"source", "target"}) {
        const auto& x = c.accuracy.at(std::string(predictor_name(k)) + "/" + split);
        s += std::string(context_name(c.kind)) + "," + predictor_name(k) + "," + split + "," +
             Dataset::format_number(x.mean()) + "," + Dataset::format_number(x.sd()) + "\r\n";
      }
  return s;
}

inline std::string fairness_csv(const ExperimentResult& r) {
  std::string s = "context,metric,mean,sd,predicted_to_vanish\r\n";
  for (const auto& c : r.contexts)
    for (const auto& m : table_metrics()) {
      auto it = c.fairness.find(m);
      const Summary x = it == c.fairness.end() ? Summary{} : it->second;
      s += std::string(context_name(c.kind)) + "," + m + "," + Dataset::format_number(x.mean()) + "," +
           Dataset::format_number(x.sd()) + "," + (m == c.predicted_to_vanish ? "true" : "false") + "\r\n";
    }
  return s;
}

inline nlohmann::json summary_json(const Summary& s) {
  return {{"mean", s.mean()}, {"sd", s.sd()}, {"values", s.values}};
}

inline nlohmann::json experiment_report_json(const ExperimentResult& r) {
  nlohmann::json j;
  j["config"] = experiment_config_to_json(r.config);
  for (const auto& c : r.contexts) {
    nlohmann::json x;
    x["predicted_to_vanish"] = c.predicted_to_vanish;
    for (const auto& [k, v] : c.accuracy) {
      const auto slash = k.find('/');
      x["accuracy"][k.substr(0, slash)][k.substr(slash + 1)] = summary_json(v);
    }
    for (const auto& [k, v] : c.fairness) x["cf_fairness"][k] = summary_json(v);
    x["cf_gap"] = summary_json(c.cf_gap);
    x["source_rows"] = summary_json(c.source_rows);
    j["contexts"][context_name(c.kind)] = x;
  }
  return j;
}

inline std::string experiment_text(const ExperimentResult& r) {
  std::ostringstream o;
  o << "accuracy (mean ± sd over " << r.config.replicates << " replicates)\n";
  o << "context                   predictor       source            target\n";
  for (const auto& c : r.contexts)
    for (auto k : r.config.predictors) {
      const auto& s = c.accuracy.at(std::string(predictor_name(k)) + "/source");
      const auto& t = c.accuracy.at(std::string(predictor_name(k)) + "/target");
      std::string ctx = context_name(c.kind), pk = predictor_name(k);
      ctx.resize(26, ' ');
      pk.resize(16, ' ');
      o << ctx << pk << detail::fixed(s.mean()) << " ± " << detail::fixed(s.sd()) << "   " << detail::fixed(t.mean())
        << " ± " << detail::fixed(t.sd()) << "\n";
    }
  o << "\ncounterfactual predictor, group differences on the source data (* = predicted to vanish)\n";
  o << "context                   demographic_parity   equalized_odds       binary_calibration\n";
  for (const auto& c : r.contexts) {
    std::string ctx = context_name(c.kind);
    ctx.resize(26, ' ');
    o << ctx;
    for (const auto& m : table_metrics()) {
      auto it = c.fairness.find(m);
      std::string cell = it == c.fairness.end() ? "undefined" : detail::fixed(it->second.mean()) + " ± " + detail::fixed(it->second.sd());
      if (m == c.predicted_to_vanish) cell += " *";
      cell.resize(21, ' ');
      o << cell;
    }
    o << "\n";
  }
  return o.str();
}

inline void write_experiment_outputs(const ExperimentResult& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw input_error("cannot create output directory '" + dir + "': " + ec.message());
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw input_error("cannot write '" + (std::filesystem::path(dir) / name).string() + "'");
    f << text;
  };
  put("accuracy.csv", accuracy_csv(r));
  put("fairness.csv", fairness_csv(r));
  put("report.json", experiment_report_json(r).dump(2) + "\n");
}

}  // namespace cfair
