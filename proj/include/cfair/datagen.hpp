#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/dataset.hpp"
#include "cfair/error.hpp"
#include "cfair/scm.hpp"

namespace cfair {

// ---- protected attribute ---------------------------------------------------

struct ProtectedSpec {
  std::string column = "race";
  std::string level = "Other";
  double p = 0.8;     // P(column := level | a = 1)
  double p_a1 = 0.5;  // P(a = 1)
  std::uint64_t seed = 1;
};

// Adds a ~ Bern(p_a1) and moves a=1 rows to `level` with probability p. The column
// cf_<column> holds the value under the flipped a, driven by the same uniform draw.
inline Dataset simulate_protected(const Dataset& data, const ProtectedSpec& spec) {
  if (!data.has(spec.column)) throw input_error("missing designated column '" + spec.column + "'");
  if (data.type(spec.column) != ColumnType::categorical)
    throw input_error("designated column '" + spec.column + "' must be categorical");
  if (!(spec.p >= 0 && spec.p <= 1) || !(spec.p_a1 >= 0 && spec.p_a1 <= 1))
    throw input_error("protected simulation probabilities must lie in [0,1]");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& orig = data.categorical(spec.column);
  std::vector<int> a(data.rows());
  std::vector<std::string> fact(orig), cf(orig);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    a[i] = unif(rng) < spec.p_a1 ? 1 : 0;
    const bool hit = unif(rng) < spec.p;
    if (hit) (a[i] ? fact[i] : cf[i]) = spec.level;
  }
  Dataset out = data;
  out.set_categorical(spec.column, std::move(fact));
  out.set_categorical(kCfPrefix + spec.column, std::move(cf));
  out.set_binary("a", a);
  return out;
}

// ---- bias injection --------------------------------------------------------

using BiasKind = BiasContext;

struct Predicate {
  std::string column;
  std::string op = "<";  // one of < <= > >= == !=
  double number = 0;
  std::string text;      // used for categorical columns
  bool textual = false;

  bool test(const Dataset& d, std::size_t row) const {
    if (d.type(column) == ColumnType::categorical) {
      const std::string& v = d.categorical(column)[row];
      if (op == "==") return v == text;
      if (op == "!=") return v != text;
      throw input_error("predicate on categorical column '" + column + "' must use == or !=");
    }
    const double v = d.numeric(column)[row];
    if (op == "<") return v < number;
    if (op == "<=") return v <= number;
    if (op == ">") return v > number;
    if (op == ">=") return v >= number;
    if (op == "==") return v == number;
    if (op == "!=") return v != number;
    throw input_error("unknown predicate operator '" + op + "'");
  }

  std::string to_string() const {
    return column + " " + op + " " + (textual ? text : Dataset::format_number(number));
  }
};

struct BiasSpec {
  BiasKind kind = BiasKind::measurement_error;
  double p = 0.8;
  int flip_from = 1;  // measurement error: observed y flips flip_from -> 1 - flip_from
  int target_label = 0;  // selection on label: a=1 rows with this y are dropped
  std::optional<Predicate> predicate;  // selection on predictors: a=1 rows matching are dropped
  std::uint64_t seed = 1;
};

struct BiasResult {
  Dataset source;
  Dataset target;               // untouched copy of the input
  std::optional<Dataset> marked;  // selection kinds: pre-drop copy with a `selected` column
};

namespace detail {

inline void check_group_and_labels(const Dataset& d, const char* what) {
  const auto a = d.binary("a");
  const auto y = d.binary("y");
  bool ga[2] = {false, false}, gy[2] = {false, false};
  for (std::size_t i = 0; i < a.size(); ++i) {
    ga[a[i]] = true;
    gy[y[i]] = true;
  }
  if (d.rows() == 0) throw std::runtime_error(std::string(what) + " removed every row");
  if (!ga[0] || !ga[1]) throw std::runtime_error(std::string(what) + " removed an entire protected group");
  if (!gy[0] || !gy[1]) throw std::runtime_error(std::string(what) + " removed an entire label class");
}

}  // namespace detail

inline BiasResult inject_bias(const Dataset& data, const BiasSpec& spec) {
  if (!(spec.p >= 0 && spec.p <= 1)) throw input_error("bias probability must lie in [0,1]");
  const auto a = data.binary("a");
  auto y = data.binary("y");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  BiasResult r{data, data, std::nullopt};
  if (spec.kind == BiasKind::measurement_error) {
    if (spec.flip_from != 0 && spec.flip_from != 1) throw input_error("flip_from must be 0 or 1");
    r.source.set_binary("y_true", y);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double u = unif(rng);
      if (a[i] == 1 && y[i] == spec.flip_from && u < spec.p) y[i] = 1 - spec.flip_from;
    }
    r.source.set_binary("y", y);
    return r;
  }

  if (spec.kind == BiasKind::selection_on_predictors) {
    if (!spec.predicate) throw input_error("selection_on_predictors needs a predicate");
    if (!data.has(spec.predicate->column))
      throw input_error("predicate column '" + spec.predicate->column + "' missing");
  }
  if (spec.kind == BiasKind::selection_on_label && spec.target_label != 0 && spec.target_label != 1)
    throw input_error("target_label must be 0 or 1");
  std::vector<int> selected(data.rows(), 1);
  std::vector<bool> keep(data.rows(), true);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double u = unif(rng);
    if (a[i] != 1 || u >= spec.p) continue;
    const bool hit = spec.kind == BiasKind::selection_on_label ? y[i] == spec.target_label
                                                                : spec.predicate->test(data, i);
    if (hit) {
      selected[i] = 0;
      keep[i] = false;
    }
  }
  r.marked = data;
  r.marked->set_binary("selected", selected);
  r.source = data.filter(keep);
  detail::check_group_and_labels(r.source, "selection");
  return r;
}

// ---- splitting -------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train, test;
};

inline Split train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw input_error("test fraction must lie in (0,1)");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  Split s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

// ---- synthetic Adult-like census table ------------------------------------

struct AdultLikeSpec {
  std::size_t n = 30000;
  std::uint64_t seed = 1;
};

// Marginals loosely follow the census extract; the income logit is linear in the
// encoded columns and race carries no label signal.
inline Dataset generate_adult_like(const AdultLikeSpec& spec) {
  static const std::vector<std::string> kEducation = {
      "Preschool", "1st-4th",    "5th-6th",   "7th-8th",   "9th",     "10th",
      "11th",      "12th",       "HS-grad",   "Some-college", "Assoc-voc", "Assoc-acdm",
      "Bachelors", "Masters",    "Prof-school", "Doctorate"};
  static const std::vector<double> kEduWeights = {.002, .005, .01, .02, .016, .028, .036, .013,
                                                  .323, .223, .042, .033, .164, .053, .018, .014};
  static const std::vector<std::string> kWorkclass = {"Private",     "Self-emp-not-inc", "Local-gov",
                                                      "State-gov",   "Self-emp-inc",     "Federal-gov",
                                                      "Without-pay"};
  static const std::vector<double> kWorkWeights = {.74, .08, .065, .04, .035, .03, .01};
  static const std::vector<std::string> kProfOcc = {"Prof-specialty", "Exec-managerial"};
  static const std::vector<std::string> kOtherOcc = {
      "Craft-repair",      "Adm-clerical",     "Sales",           "Other-service", "Machine-op-inspct",
      "Transport-moving",  "Handlers-cleaners", "Farming-fishing", "Tech-support",  "Protective-serv"};
  static const std::vector<std::string> kRace = {"White", "Black", "Asian-Pac-Islander",
                                                 "Amer-Indian-Eskimo", "Other"};
  static const std::vector<double> kRaceWeights = {.855, .096, .031, .01, .008};
  static const std::vector<std::string> kUnmarried = {"Never-married", "Divorced", "Separated", "Widowed"};
  static const std::vector<double> kUnmarriedWeights = {.55, .3, .07, .08};
  static const std::vector<std::string> kRelation = {"Not-in-family", "Unmarried", "Other-relative"};
  static const std::vector<double> kRelationWeights = {.6, .3, .1};
  static const std::vector<std::string> kCountry = {"United-States", "Mexico", "Philippines",
                                                    "Germany",       "Canada", "India"};
  static const std::vector<double> kCountryWeights = {.92, .025, .015, .015, .015, .01};

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto pick = [&](const std::vector<double>& w) {
    std::discrete_distribution<std::size_t> d(w.begin(), w.end());
    return d(rng);
  };
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

  const std::size_t n = spec.n;
  std::vector<double> age(n), fnlwgt(n), edu(n), gain(n), loss(n), hours(n);
  std::vector<std::string> workclass(n), education(n), marital(n), occupation(n), relationship(n),
      race(n), sex(n), country(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    age[i] = std::clamp(std::round(38.5 + 13.6 * normal(rng)), 17.0, 90.0);
    const bool male = unif(rng) < 0.67;
    const std::size_t e = pick(kEduWeights);
    edu[i] = static_cast<double>(e + 1);
    education[i] = kEducation[e];
    const bool married = unif(rng) < 0.75 * sigmoid(-0.8 + 0.08 * (age[i] - 30));
    hours[i] = std::clamp(std::round(40.4 + 12.3 * normal(rng)), 1.0, 99.0);
    const bool prof = unif(rng) < sigmoid(-2.2 + 0.45 * (edu[i] - 10));
    occupation[i] = prof ? kProfOcc[static_cast<std::size_t>(unif(rng) * 2) % 2]
                         : kOtherOcc[static_cast<std::size_t>(unif(rng) * 10) % 10];
    race[i] = kRace[pick(kRaceWeights)];
    gain[i] = unif(rng) < 0.08 ? std::min(99999.0, std::round(std::exp(8.5 + normal(rng)))) : 0.0;
    loss[i] = unif(rng) < 0.047 ? std::max(0.0, std::round(1870 + 360 * normal(rng))) : 0.0;
    if (married) {
      marital[i] = "Married-civ-spouse";
      relationship[i] = male ? "Husband" : "Wife";
    } else {
      marital[i] = kUnmarried[pick(kUnmarriedWeights)];
      relationship[i] = (age[i] < 25 && unif(rng) < 0.6) ? "Own-child" : kRelation[pick(kRelationWeights)];
    }
    sex[i] = male ? "Male" : "Female";
    workclass[i] = kWorkclass[pick(kWorkWeights)];
    fnlwgt[i] = std::round(std::exp(12.0 + 0.5 * normal(rng)));
    country[i] = kCountry[pick(kCountryWeights)];
    const double z = -3.4 + 0.022 * (age[i] - 38) + 0.506 * (edu[i] - 10) + 3.241 * married +
                     1.025 * prof + 0.033 * (hours[i] - 40) + 0.098 * male + 0.0007 * gain[i] +
                     0.0002 * loss[i];
    y[i] = unif(rng) < sigmoid(z) ? 1 : 0;
  }

  Dataset d;
  d.set_numeric("age", ColumnType::numeric, age);
  d.set_categorical("workclass", workclass);
  d.set_numeric("fnlwgt", ColumnType::numeric, fnlwgt);
  d.set_categorical("education", education);
  d.set_numeric("education-num", ColumnType::numeric, edu);
  d.set_categorical("marital-status", marital);
  d.set_categorical("occupation", occupation);
  d.set_categorical("relationship", relationship);
  d.set_categorical("race", race);
  d.set_categorical("sex", sex);
  d.set_numeric("capital-gain", ColumnType::numeric, gain);
  d.set_numeric("capital-loss", ColumnType::numeric, loss);
  d.set_numeric("hours-per-week", ColumnType::numeric, hours);
  d.set_categorical("native-country", country);
  d.set_binary("y", y);
  return d;
}

// ---- JSON config blocks ----------------------------------------------------

inline Predicate predicate_from_json(const nlohmann::json& j) {
  Predicate p;
  try {
    p.column = j.at("column").get<std::string>();
    if (j.contains("op")) p.op = j["op"].get<std::string>();
    const auto& v = j.at("value");
    if (v.is_string()) {
      p.textual = true;
      p.text = v.get<std::string>();
    } else {
      p.number = v.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("predicate: ") + e.what());
  }
  static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
  if (std::none_of(std::begin(ops), std::end(ops), [&](const char* o) { return p.op == o; }))
    throw input_error("predicate: unknown operator '" + p.op + "'");
  return p;
}

inline nlohmann::json predicate_to_json(const Predicate& p) {
  nlohmann::json j = {{"column", p.column}, {"op", p.op}};
  if (p.textual) j["value"] = p.text;
  else j["value"] = p.number;
  return j;
}

inline BiasSpec bias_from_json(const nlohmann::json& j, BiasKind kind) {
  BiasSpec b;
  b.kind = kind;
  try {
    if (j.contains("p")) b.p = j["p"].get<double>();
    if (j.contains("flip_from")) b.flip_from = j["flip_from"].get<int>();
    if (j.contains("target_label")) b.target_label = j["target_label"].get<int>();
    if (j.contains("predicate")) b.predicate = predicate_from_json(j["predicate"]);
    if (j.contains("seed")) b.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("bias spec: ") + e.what());
  }
  if (!(b.p >= 0 && b.p <= 1)) throw input_error("bias spec: p must lie in [0,1]");
  if (kind == BiasKind::selection_on_predictors && !b.predicate)
    throw input_error("bias spec: selection_on_predictors needs a predicate");
  return b;
}

inline nlohmann::json bias_to_json(const BiasSpec& b) {
  nlohmann::json j = {{"p", b.p}, {"seed", b.seed}};
  if (b.kind == BiasKind::measurement_error) j["flip_from"] = b.flip_from;
  if (b.kind == BiasKind::selection_on_label) j["target_label"] = b.target_label;
  if (b.predicate) j["predicate"] = predicate_to_json(*b.predicate);
  return j;
}

}  // namespace cfair
