#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cfair/dataset.hpp"
#include "cfair/error.hpp"

namespace cfair {

enum class Loss { cross_entropy, squared_error };
enum class Optimizer { gradient_descent, newton };

struct TrainConfig {
  double learning_rate = 1.0;  // initial step; backtracking halves it as needed
  int epochs = 2000;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
  Loss loss = Loss::cross_entropy;
  Optimizer optimizer = Optimizer::gradient_descent;
  double tolerance = 1e-10;  // stop once the decrease per epoch falls below this
};

struct FeatureSpec {
  std::string column;
  ColumnType type;
  double mean = 0, sd = 1;           // numeric
  std::vector<std::string> levels;   // categorical, one indicator per level
  bool interacted = false;           // also multiplied by a
};

struct FeatureEncoding {
  std::vector<FeatureSpec> features;
  bool uses_protected = false;

  std::size_t base_width() const {
    std::size_t w = 0;
    for (const auto& f : features) w += f.type == ColumnType::categorical ? f.levels.size() : 1;
    return w;
  }
  std::size_t width() const {
    std::size_t w = base_width();
    if (!uses_protected) return w;
    w += 1;
    for (const auto& f : features)
      if (f.interacted) w += f.type == ColumnType::categorical ? f.levels.size() : 1;
    return w;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> base, inter;
    for (const auto& f : features) {
      std::vector<std::string> v;
      if (f.type == ColumnType::categorical)
        for (const auto& l : f.levels) v.push_back(f.column + "=" + l);
      else
        v.push_back(f.column);
      base.insert(base.end(), v.begin(), v.end());
      if (f.interacted)
        for (const auto& x : v) inter.push_back("a*" + x);
    }
    if (uses_protected) {
      base.push_back("a");
      base.insert(base.end(), inter.begin(), inter.end());
    }
    return base;
  }

  // Row-major design matrix without intercept. `a_override` replaces the a column.
  Eigen::MatrixXd encode(const Dataset& d, std::optional<int> a_override = std::nullopt) const {
    const std::size_t n = d.rows();
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width()));
    std::vector<double> a(n, 0.0);
    if (uses_protected) {
      if (a_override) std::fill(a.begin(), a.end(), static_cast<double>(*a_override));
      else a = d.numeric("a");
    }
    const Eigen::Index a_col = static_cast<Eigen::Index>(base_width());
    Eigen::Index col = 0, icol = a_col + 1;
    for (const auto& f : features) {
      if (!d.has(f.column)) throw input_error("missing feature column '" + f.column + "'");
      if (d.type(f.column) != f.type)
        throw input_error("feature column '" + f.column + "' has type " + type_name(d.type(f.column)) +
                          ", model expects " + type_name(f.type));
      if (f.type == ColumnType::categorical) {
        const auto& v = d.categorical(f.column);
        std::map<std::string, Eigen::Index> pos;
        for (std::size_t k = 0; k < f.levels.size(); ++k) pos[f.levels[k]] = static_cast<Eigen::Index>(k);
        for (std::size_t i = 0; i < n; ++i) {
          auto it = pos.find(v[i]);
          if (it == pos.end()) continue;  // unseen level: all indicators zero
          const auto r = static_cast<Eigen::Index>(i);
          x(r, col + it->second) = 1.0;
          if (f.interacted && uses_protected) x(r, icol + it->second) = a[i];
        }
        col += static_cast<Eigen::Index>(f.levels.size());
        if (f.interacted && uses_protected) icol += static_cast<Eigen::Index>(f.levels.size());
      } else {
        const auto& v = d.numeric(f.column);
        for (std::size_t i = 0; i < n; ++i) {
          if (!std::isfinite(v[i]))
            throw input_error("feature '" + f.column + "' has a non-finite value at row " + std::to_string(i));
          const double z = f.type == ColumnType::numeric ? (v[i] - f.mean) / f.sd : v[i];
          const auto r = static_cast<Eigen::Index>(i);
          x(r, col) = z;
          if (f.interacted && uses_protected) x(r, icol) = a[i] * z;
        }
        col += 1;
        if (f.interacted && uses_protected) icol += 1;
      }
    }
    if (uses_protected)
      for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), a_col) = a[i];
    return x;
  }
};

struct EncodingOptions {
  bool include_protected = false;
  bool interact_protected = false;           // a times every feature except those excluded
  std::vector<std::string> interaction_exclude;
};

inline FeatureEncoding fit_encoding(const Dataset& d, const std::vector<std::string>& features,
                                    const EncodingOptions& o) {
  if (features.empty()) throw input_error("no features given");
  FeatureEncoding enc;
  enc.uses_protected = o.include_protected;
  std::set<std::string> seen;
  for (const auto& c : features) {
    if (c == "a" || c == "y" || c == "y_true" || c == "selected")
      throw input_error("reserved column '" + c + "' cannot be a feature");
    if (!seen.insert(c).second) throw input_error("feature '" + c + "' listed twice");
    FeatureSpec f;
    f.column = c;
    f.type = d.type(c);
    f.interacted = o.include_protected && o.interact_protected &&
                   std::find(o.interaction_exclude.begin(), o.interaction_exclude.end(), c) ==
                       o.interaction_exclude.end();
    if (f.type == ColumnType::categorical) {
      std::set<std::string> lv(d.categorical(c).begin(), d.categorical(c).end());
      f.levels.assign(lv.begin(), lv.end());
    } else if (f.type == ColumnType::numeric) {
      const auto& v = d.numeric(c);
      double m = 0, s = 0;
      for (double x : v) {
        if (!std::isfinite(x)) throw input_error("feature '" + c + "' has a non-finite value");
        m += x;
      }
      m /= static_cast<double>(v.size());
      for (double x : v) s += (x - m) * (x - m);
      s = std::sqrt(s / static_cast<double>(v.size()));
      f.mean = m;
      f.sd = s > 0 ? s : 1.0;
    }
    enc.features.push_back(std::move(f));
  }
  return enc;
}

class Model {
 public:
  FeatureEncoding encoding;
  Eigen::VectorXd weights;
  double intercept = 0;
  TrainConfig config;
  std::vector<double> loss_history;

  bool uses_protected() const { return encoding.uses_protected; }

  std::vector<double> predict(const Dataset& d, std::optional<int> a_override = std::nullopt) const {
    if (a_override && !uses_protected()) throw input_error("model does not use the protected attribute");
    Eigen::VectorXd z = encoding.encode(d, a_override) * weights;
    std::vector<double> out(d.rows());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = 1.0 / (1.0 + std::exp(-(z(static_cast<Eigen::Index>(i)) + intercept)));
    return out;
  }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
  const Eigen::MatrixXd& x;  // with trailing column of ones
  const Eigen::VectorXd& y;
  Loss loss;
  double l2;
  Eigen::Index p;  // number of penalized coefficients (all but the last)

  double value(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd z = x * w;
    const double n = static_cast<double>(y.size());
    double s = 0;
    if (loss == Loss::cross_entropy) {
      for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y(i) * z(i);
    } else {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double e = sigmoid(z(i)) - y(i);
        s += e * e;
      }
    }
    return s / n + 0.5 * l2 * w.head(p).squaredNorm();
  }

  // gradient, and the curvature weights used by Newton (Gauss-Newton for squared error)
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, Eigen::VectorXd* curvature = nullptr) const {
    const Eigen::VectorXd z = x * w;
    const double n = static_cast<double>(y.size());
    Eigen::VectorXd r(z.size());
    if (curvature) curvature->resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s = sigmoid(z(i));
      const double ds = s * (1 - s);
      if (loss == Loss::cross_entropy) {
        r(i) = s - y(i);
        if (curvature) (*curvature)(i) = ds;
      } else {
        r(i) = 2 * (s - y(i)) * ds;
        if (curvature) (*curvature)(i) = 2 * ds * ds;
      }
    }
    Eigen::VectorXd g = x.transpose() * r / n;
    g.head(p) += l2 * w.head(p);
    return g;
  }
};

}  // namespace detail

inline Model train(const Dataset& data, const std::vector<std::string>& features, const EncodingOptions& enc_opt,
                   const TrainConfig& cfg) {
  if (!(cfg.l2 >= 0) || cfg.epochs < 1 || !(cfg.learning_rate > 0))
    throw input_error("train config: need l2 >= 0, epochs >= 1, learning_rate > 0");
  const auto yv = data.binary("y");
  if (yv.empty()) throw input_error("training data is empty");
  const auto pos = std::count(yv.begin(), yv.end(), 1);
  if (pos == 0 || pos == static_cast<long>(yv.size()))
    throw input_error("training labels are all " + std::to_string(yv.front()) + "; nothing to learn");

  Model m;
  m.config = cfg;
  m.encoding = fit_encoding(data, features, enc_opt);
  const Eigen::MatrixXd base = m.encoding.encode(data);
  const Eigen::Index n = base.rows(), p = base.cols();
  Eigen::MatrixXd x(n, p + 1);
  x.leftCols(p) = base;
  x.col(p).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = yv[static_cast<std::size_t>(i)];

  detail::Objective obj{x, y, cfg.loss, cfg.l2, p};
  Eigen::VectorXd w(p + 1);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 1e-3);
  for (Eigen::Index k = 0; k < p + 1; ++k) w(k) = init(rng);

  double f = obj.value(w);
  m.loss_history.push_back(f);
  double step = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::VectorXd curv;
    const Eigen::VectorXd g = obj.gradient(w, cfg.optimizer == Optimizer::newton ? &curv : nullptr);
    Eigen::VectorXd dir;
    if (cfg.optimizer == Optimizer::newton) {
      Eigen::MatrixXd h = x.transpose() * (x.array().colwise() * curv.array()).matrix() / static_cast<double>(n);
      for (Eigen::Index k = 0; k < p; ++k) h(k, k) += cfg.l2;
      h(p, p) += 1e-12;
      dir = -h.ldlt().solve(g);
      if (!dir.allFinite() || dir.dot(g) >= 0) dir = -g;
      step = 1.0;
    } else {
      dir = -g;
      step = std::min(cfg.learning_rate, step * 2);
    }
    const double slope = g.dot(dir);
    if (-slope < 1e-300) break;
    double f_new = f;
    Eigen::VectorXd w_new;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      w_new = w + step * dir;
      f_new = obj.value(w_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double decrease = f - f_new;
    w = w_new;
    f = f_new;
    m.loss_history.push_back(f);
    if (decrease < cfg.tolerance) break;
  }
  m.weights = w.head(p);
  m.intercept = w(p);
  return m;
}

// ---- JSON -------------------------------------------------------------------

inline const char* loss_name(Loss l) { return l == Loss::cross_entropy ? "cross_entropy" : "squared_error"; }
inline const char* optimizer_name(Optimizer o) { return o == Optimizer::newton ? "newton" : "gradient_descent"; }

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},       {"l2", c.l2},
          {"seed", c.seed},                   {"loss", loss_name(c.loss)}, {"optimizer", optimizer_name(c.optimizer)},
          {"tolerance", c.tolerance}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  try {
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("l2")) c.l2 = j["l2"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tolerance")) c.tolerance = j["tolerance"].get<double>();
    if (j.contains("loss")) {
      auto s = j["loss"].get<std::string>();
      if (s == "cross_entropy") c.loss = Loss::cross_entropy;
      else if (s == "squared_error") c.loss = Loss::squared_error;
      else throw input_error("train.loss: unknown loss '" + s + "' (cross_entropy or squared_error)");
    }
    if (j.contains("optimizer")) {
      auto s = j["optimizer"].get<std::string>();
      if (s == "gradient_descent") c.optimizer = Optimizer::gradient_descent;
      else if (s == "newton") c.optimizer = Optimizer::newton;
      else throw input_error("train.optimizer: unknown optimizer '" + s + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("train config: ") + e.what());
  }
  return c;
}

inline nlohmann::json model_to_json(const Model& m) {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : m.encoding.features) {
    nlohmann::json x = {{"column", f.column}, {"type", type_name(f.type)}, {"interacted", f.interacted}};
    if (f.type == ColumnType::numeric) {
      x["mean"] = f.mean;
      x["sd"] = f.sd;
    }
    if (f.type == ColumnType::categorical) x["levels"] = f.levels;
    feats.push_back(x);
  }
  std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
  return {{"encoding", {{"features", feats}, {"names", m.encoding.names()}}},
          {"weights", w},
          {"intercept", m.intercept},
          {"config", train_config_to_json(m.config)},
          {"uses_protected", m.encoding.uses_protected}};
}

inline Model model_from_json(const nlohmann::json& j) {
  Model m;
  try {
    m.encoding.uses_protected = j.at("uses_protected").get<bool>();
    for (const auto& x : j.at("encoding").at("features")) {
      FeatureSpec f;
      f.column = x.at("column").get<std::string>();
      auto t = parse_type(x.at("type").get<std::string>());
      if (!t) throw input_error("model: unknown feature type for '" + f.column + "'");
      f.type = *t;
      f.interacted = x.value("interacted", false);
      if (f.type == ColumnType::numeric) {
        f.mean = x.at("mean").get<double>();
        f.sd = x.at("sd").get<double>();
      }
      if (f.type == ColumnType::categorical) f.levels = x.at("levels").get<std::vector<std::string>>();
      m.encoding.features.push_back(std::move(f));
    }
    auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.intercept = j.at("intercept").get<double>();
    m.config = train_config_from_json(j.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("model: ") + e.what());
  }
  if (static_cast<std::size_t>(m.weights.size()) != m.encoding.width())
    throw input_error("model: weight count does not match the encoding");
  return m;
}

}  // namespace cfair
