#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/error.hpp"

namespace cfair {

// Column-oriented predictions. `l` is empty when there is no strata column.
struct LabeledPredictions {
  std::vector<int> a, y, d;
  std::vector<double> s;
  std::vector<std::string> l;

  std::size_t size() const { return a.size(); }
  bool has_strata() const { return !l.empty(); }

  void push(int a_, int y_, int d_, double s_) {
    a.push_back(a_);
    y.push_back(y_);
    d.push_back(d_);
    s.push_back(s_);
  }
};

struct Component {
  std::string condition;
  std::optional<double> value;  // group 1 minus group 0; empty when undefined
  double group0 = 0, group1 = 0;
  std::size_t n0 = 0, n1 = 0;
};

struct MetricResult {
  std::string name;
  std::optional<double> aggregate;
  std::vector<Component> components;
  std::vector<std::string> flags;
};

struct MetricReport {
  std::vector<MetricResult> metrics;

  const MetricResult& at(const std::string& name) const {
    for (const auto& m : metrics)
      if (m.name == name) return m;
    throw std::out_of_range("no metric '" + name + "'");
  }
  void append(const MetricReport& other) {
    metrics.insert(metrics.end(), other.metrics.begin(), other.metrics.end());
  }
};

namespace detail {

inline void check_predictions(const LabeledPredictions& p) {
  const std::size_t n = p.a.size();
  if (n == 0) throw input_error("predictions are empty");
  if (p.y.size() != n || p.d.size() != n || p.s.size() != n || (p.has_strata() && p.l.size() != n))
    throw input_error("prediction columns have different lengths");
  bool g0 = false, g1 = false;
  for (std::size_t i = 0; i < n; ++i) {
    if ((p.a[i] != 0 && p.a[i] != 1) || (p.y[i] != 0 && p.y[i] != 1) ||
        (p.d[i] != 0 && p.d[i] != 1))
      throw input_error("row " + std::to_string(i) + ": a, y and d must be 0 or 1");
    if (!(p.s[i] >= 0.0 && p.s[i] <= 1.0))
      throw input_error("row " + std::to_string(i) + ": score outside [0,1]");
    (p.a[i] ? g1 : g0) = true;
  }
  if (!g0 || !g1) throw input_error("predictions contain only one protected group");
}

// Mean of value(i) over rows with keep(i), per group.
template <class Keep, class Value>
Component group_gap(const LabeledPredictions& p, std::string condition, Keep keep, Value value) {
  double sum[2] = {0, 0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!keep(i)) continue;
    sum[p.a[i]] += value(i);
    ++cnt[p.a[i]];
  }
  Component c;
  c.condition = std::move(condition);
  c.n0 = cnt[0];
  c.n1 = cnt[1];
  if (cnt[0] && cnt[1]) {
    c.group0 = sum[0] / static_cast<double>(cnt[0]);
    c.group1 = sum[1] / static_cast<double>(cnt[1]);
    c.value = c.group1 - c.group0;
  }
  return c;
}

inline MetricResult finish(std::string name, std::vector<Component> comps) {
  MetricResult m;
  m.name = std::move(name);
  for (const auto& c : comps) {
    if (!c.value) {
      m.flags.push_back(c.condition + " undefined (n0=" + std::to_string(c.n0) +
                        ", n1=" + std::to_string(c.n1) + ")");
      continue;
    }
    if (!m.aggregate || std::fabs(*c.value) > std::fabs(*m.aggregate)) m.aggregate = c.value;
  }
  m.components = std::move(comps);
  return m;
}

}  // namespace detail

inline int decide(double score, double threshold = 0.5) { return score >= threshold ? 1 : 0; }

inline MetricReport binary_metric_report(const LabeledPredictions& p) {
  detail::check_predictions(p);
  auto all = [](std::size_t) { return true; };
  auto dec = [&](std::size_t i) { return static_cast<double>(p.d[i]); };
  auto neg_dec = [&](std::size_t i) { return 1.0 - p.d[i]; };
  auto lab = [&](std::size_t i) { return static_cast<double>(p.y[i]); };
  auto y_is = [&](int v) { return [&p, v](std::size_t i) { return p.y[i] == v; }; };
  auto d_is = [&](int v) { return [&p, v](std::size_t i) { return p.d[i] == v; }; };

  MetricReport r;
  r.metrics.push_back(detail::finish("demographic_parity", {detail::group_gap(p, "all", all, dec)}));
  if (p.has_strata()) {
    std::map<std::string, int> levels;
    for (const auto& v : p.l) levels[v] = 1;
    std::vector<Component> cs;
    for (const auto& [lv, _] : levels)
      cs.push_back(detail::group_gap(p, "l=" + lv, [&p, lv = lv](std::size_t i) { return p.l[i] == lv; },
                                     dec));
    r.metrics.push_back(detail::finish("conditional_demographic_parity", std::move(cs)));
  }
  r.metrics.push_back(detail::finish(
      "equalized_odds", {detail::group_gap(p, "y=0", y_is(0), dec), detail::group_gap(p, "y=1", y_is(1), dec)}));
  r.metrics.push_back(detail::finish("fpr_balance", {detail::group_gap(p, "y=0", y_is(0), dec)}));
  r.metrics.push_back(detail::finish("fnr_balance", {detail::group_gap(p, "y=1", y_is(1), neg_dec)}));
  r.metrics.push_back(detail::finish(
      "binary_calibration", {detail::group_gap(p, "d=0", d_is(0), lab), detail::group_gap(p, "d=1", d_is(1), lab)}));
  r.metrics.push_back(detail::finish("predictive_parity", {detail::group_gap(p, "d=1", d_is(1), lab)}));
  return r;
}

inline MetricReport score_metric_report(const LabeledPredictions& p, int bins = 10) {
  detail::check_predictions(p);
  if (bins < 1) throw input_error("score bin count must be positive");
  auto score = [&](std::size_t i) { return p.s[i]; };
  auto lab = [&](std::size_t i) { return static_cast<double>(p.y[i]); };
  MetricReport r;
  r.metrics.push_back(detail::finish(
      "balance_negative_class", {detail::group_gap(p, "y=0", [&](std::size_t i) { return p.y[i] == 0; }, score)}));
  r.metrics.push_back(detail::finish(
      "balance_positive_class", {detail::group_gap(p, "y=1", [&](std::size_t i) { return p.y[i] == 1; }, score)}));

  std::vector<Component> cs;
  for (int b = 0; b < bins; ++b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bin [%.3g,%.3g%c", static_cast<double>(b) / bins,
                  static_cast<double>(b + 1) / bins, b + 1 == bins ? ']' : ')');
    cs.push_back(detail::group_gap(
        p, buf,
        [&, b](std::size_t i) {
          int k = static_cast<int>(std::floor(p.s[i] * bins));
          return std::min(k, bins - 1) == b;
        },
        lab));
  }
  r.metrics.push_back(detail::finish("score_calibration", std::move(cs)));
  return r;
}

inline MetricReport full_metric_report(const LabeledPredictions& p, int bins = 10) {
  MetricReport r = binary_metric_report(p);
  r.append(score_metric_report(p, bins));
  return r;
}

inline double conditional_dp(const LabeledPredictions& p, const std::string& level) {
  detail::check_predictions(p);
  if (!p.has_strata()) throw input_error("predictions have no strata column");
  auto c = detail::group_gap(p, "l=" + level, [&](std::size_t i) { return p.l[i] == level; },
                             [&](std::size_t i) { return static_cast<double>(p.d[i]); });
  if (c.n0 + c.n1 == 0) throw input_error("stratum '" + level + "' is empty");
  if (!c.value) throw input_error("stratum '" + level + "' lacks one protected group");
  return *c.value;
}

inline nlohmann::json metric_report_to_json(const MetricReport& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& m : r.metrics) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m.components) {
      nlohmann::json x = {{"condition", c.condition}, {"n0", c.n0}, {"n1", c.n1}};
      x["value"] = c.value ? nlohmann::json(*c.value) : nlohmann::json(nullptr);
      if (c.value) {
        x["group0"] = c.group0;
        x["group1"] = c.group1;
      }
      comps.push_back(x);
    }
    j[m.name] = {{"aggregate", m.aggregate ? nlohmann::json(*m.aggregate) : nlohmann::json(nullptr)},
                 {"components", comps},
                 {"flags", m.flags}};
  }
  return j;
}

inline std::string format_value(const std::optional<double>& v, int precision = 4) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

inline std::string metric_report_table(const MetricReport& r) {
  std::size_t w = 6;
  for (const auto& m : r.metrics) w = std::max(w, m.name.size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %10s  %s\n", static_cast<int>(w), "metric", "difference",
                "components");
  os << line;
  for (const auto& m : r.metrics) {
    std::string comps;
    for (const auto& c : m.components) {
      if (!comps.empty()) comps += "  ";
      comps += c.condition + ": " + format_value(c.value);
    }
    std::snprintf(line, sizeof line, "%-*s  %10s  ", static_cast<int>(w), m.name.c_str(),
                  format_value(m.aggregate).c_str());
    os << line << comps << "\n";
  }
  return os.str();
}

}  // namespace cfair
