#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/error.hpp"

namespace cfair {

enum class ColumnType { categorical, numeric, binary };

inline const char* type_name(ColumnType t) {
  switch (t) {
    case ColumnType::categorical: return "categorical";
    case ColumnType::numeric: return "numeric";
    case ColumnType::binary: return "binary";
  }
  return "?";
}

inline std::optional<ColumnType> parse_type(const std::string& s) {
  if (s == "categorical") return ColumnType::categorical;
  if (s == "numeric") return ColumnType::numeric;
  if (s == "binary") return ColumnType::binary;
  return std::nullopt;
}

struct ColumnSpec {
  std::string name;
  ColumnType type;
  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Text label column mapped to the binary column y.
struct LabelRule {
  std::string column;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  friend bool operator==(const LabelRule&, const LabelRule&) = default;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::optional<LabelRule> label;
  friend bool operator==(const Schema&, const Schema&) = default;
};

class Dataset {
 public:
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_.size(); }

  std::vector<ColumnSpec> schema() const {
    std::vector<ColumnSpec> s;
    for (const auto& c : cols_) s.push_back(c.spec);
    return s;
  }

  bool has(const std::string& name) const { return index(name) >= 0; }

  ColumnType type(const std::string& name) const { return col(name).spec.type; }

  const std::vector<double>& numeric(const std::string& name) const {
    const auto& c = col(name);
    if (c.spec.type == ColumnType::categorical)
      throw input_error("column '" + name + "' is categorical");
    return c.num;
  }

  const std::vector<std::string>& categorical(const std::string& name) const {
    const auto& c = col(name);
    if (c.spec.type != ColumnType::categorical)
      throw input_error("column '" + name + "' is not categorical");
    return c.cat;
  }

  std::vector<int> binary(const std::string& name) const {
    const auto& c = col(name);
    if (c.spec.type != ColumnType::binary) throw input_error("column '" + name + "' is not binary");
    std::vector<int> out(c.num.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(c.num[i]);
    return out;
  }

  // Adds or replaces a numeric/binary column.
  void set_numeric(const std::string& name, ColumnType t, std::vector<double> values) {
    if (t == ColumnType::categorical) throw std::logic_error("set_numeric with categorical type");
    check_length(name, values.size());
    if (t == ColumnType::binary)
      for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] != 0.0 && values[i] != 1.0)
          throw input_error("column '" + name + "', row " + std::to_string(i) + ": binary value must be 0 or 1");
    Column c{{name, t}, std::move(values), {}};
    put(std::move(c));
  }

  void set_binary(const std::string& name, const std::vector<int>& values) {
    set_numeric(name, ColumnType::binary, std::vector<double>(values.begin(), values.end()));
  }

  void set_categorical(const std::string& name, std::vector<std::string> values) {
    check_length(name, values.size());
    Column c{{name, ColumnType::categorical}, {}, std::move(values)};
    put(std::move(c));
  }

  void drop(const std::string& name) {
    int i = index(name);
    if (i < 0) throw input_error("missing column '" + name + "'");
    cols_.erase(cols_.begin() + i);
    if (cols_.empty()) rows_ = 0;
  }

  Dataset take(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.rows_ = idx.size();
    for (const auto& c : cols_) {
      Column n{c.spec, {}, {}};
      if (c.spec.type == ColumnType::categorical) {
        n.cat.reserve(idx.size());
        for (auto i : idx) n.cat.push_back(c.cat.at(i));
      } else {
        n.num.reserve(idx.size());
        for (auto i : idx) n.num.push_back(c.num.at(i));
      }
      out.cols_.push_back(std::move(n));
    }
    return out;
  }

  Dataset filter(const std::vector<bool>& keep) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) idx.push_back(i);
    return take(idx);
  }

  std::string cell_text(std::size_t col_index, std::size_t row) const {
    const auto& c = cols_.at(col_index);
    if (c.spec.type == ColumnType::categorical) return c.cat[row];
    return format_number(c.num[row]);
  }

  // FNV-1a over schema and cells.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
      for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
      }
      h ^= 0xff;
      h *= 1099511628211ull;
    };
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      mix(cols_[j].spec.name);
      mix(type_name(cols_[j].spec.type));
      for (std::size_t i = 0; i < rows_; ++i) mix(cell_text(j, i));
    }
    return h;
  }

  static std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  friend bool operator==(const Dataset& x, const Dataset& y) {
    if (x.rows_ != y.rows_ || x.cols_.size() != y.cols_.size()) return false;
    for (std::size_t j = 0; j < x.cols_.size(); ++j) {
      const auto& a = x.cols_[j];
      const auto& b = y.cols_[j];
      if (!(a.spec == b.spec) || a.num != b.num || a.cat != b.cat) return false;
    }
    return true;
  }

 private:
  struct Column {
    ColumnSpec spec;
    std::vector<double> num;
    std::vector<std::string> cat;
  };

  int index(const std::string& name) const {
    for (std::size_t i = 0; i < cols_.size(); ++i)
      if (cols_[i].spec.name == name) return static_cast<int>(i);
    return -1;
  }
  const Column& col(const std::string& name) const {
    int i = index(name);
    if (i < 0) throw input_error("missing column '" + name + "'");
    return cols_[static_cast<std::size_t>(i)];
  }
  void check_length(const std::string& name, std::size_t n) const {
    if (!cols_.empty() && n != rows_)
      throw input_error("column '" + name + "' has " + std::to_string(n) + " rows, expected " +
                        std::to_string(rows_));
  }
  void put(Column c) {
    rows_ = c.spec.type == ColumnType::categorical ? c.cat.size() : c.num.size();
    int i = index(c.spec.name);
    if (i >= 0) cols_[static_cast<std::size_t>(i)] = std::move(c);
    else cols_.push_back(std::move(c));
  }

  std::vector<Column> cols_;
  std::size_t rows_ = 0;
};

// ---- schema files ---------------------------------------------------------

inline Schema schema_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw input_error("schema: expected an object of column: type");
  Schema s;
  for (const auto& [name, v] : j.items()) {
    if (v.is_string()) {
      auto t = parse_type(v.get<std::string>());
      if (!t) throw input_error("schema." + name + ": unknown type '" + v.get<std::string>() + "'");
      s.columns.push_back({name, *t});
    } else if (v.is_object() && v.contains("label")) {
      const auto& l = v["label"];
      LabelRule r{name, {}, {}};
      try {
        r.positive = l.at("positive").get<std::vector<std::string>>();
        r.negative = l.at("negative").get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception&) {
        throw input_error("schema." + name + ".label: needs string lists 'positive' and 'negative'");
      }
      if (s.label) throw input_error("schema: more than one label column");
      s.label = r;
    } else {
      throw input_error("schema." + name + ": expected a type string or a label object");
    }
  }
  return s;
}

inline nlohmann::ordered_json schema_to_json(const Schema& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& c : s.columns) j[c.name] = type_name(c.type);
  if (s.label)
    j[s.label->column] = {{"label", {{"positive", s.label->positive}, {"negative", s.label->negative}}}};
  return j;
}

inline Schema read_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open schema file '" + path + "'");
  try {
    return schema_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw input_error("schema file '" + path + "': " + e.what());
  }
}

// 14 attributes plus income, binarized at >50K (the test split spells it ">50K.").
inline Schema adult_schema() {
  Schema s;
  s.columns = {{"age", ColumnType::numeric},
               {"workclass", ColumnType::categorical},
               {"fnlwgt", ColumnType::numeric},
               {"education", ColumnType::categorical},
               {"education-num", ColumnType::numeric},
               {"marital-status", ColumnType::categorical},
               {"occupation", ColumnType::categorical},
               {"relationship", ColumnType::categorical},
               {"race", ColumnType::categorical},
               {"sex", ColumnType::categorical},
               {"capital-gain", ColumnType::numeric},
               {"capital-loss", ColumnType::numeric},
               {"hours-per-week", ColumnType::numeric},
               {"native-country", ColumnType::categorical}};
  s.label = LabelRule{"income", {">50K", ">50K."}, {"<=50K", "<=50K."}};
  return s;
}

// ---- CSV ------------------------------------------------------------------

struct CsvOptions {
  bool trim = false;             // strip spaces around unquoted fields
  bool allow_extra_columns = false;
};

namespace detail {

// RFC 4180 records; returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                            bool trim) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string cur;
  bool quoted = false, was_quoted = false;
  const std::size_t start = line;
  auto finish_field = [&]() {
    if (trim && !was_quoted) {
      auto b = cur.find_first_not_of(" \t");
      auto e = cur.find_last_not_of(" \t");
      cur = b == std::string::npos ? "" : cur.substr(b, e - b + 1);
    }
    fields.push_back(std::move(cur));
    cur.clear();
    was_quoted = false;
  };
  for (;;) {
    int ch = in.get();
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) throw input_error("csv line " + std::to_string(start) + ": unterminated quoted field");
      finish_field();
      ++line;
      return true;
    }
    char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cur += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      bool blank = cur.find_first_not_of(" \t") == std::string::npos;
      if (!blank || (!trim && !cur.empty()))
        throw input_error("csv line " + std::to_string(line) + ": quote inside unquoted field");
      cur.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      finish_field();
    } else if (c == '\r' && in.peek() == '\n') {
      continue;
    } else if (c == '\n') {
      finish_field();
      ++line;
      return true;
    } else {
      cur += c;
    }
  }
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos && (s.empty() || (s.front() != ' ' && s.back() != ' ')))
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline double parse_number(const std::string& s, bool& ok) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  ok = res.ec == std::errc() && res.ptr == e && s.size() > 0;
  return v;
}

}  // namespace detail

inline Dataset read_csv(std::istream& in, const Schema& schema, const CsvOptions& opt = {}) {
  std::vector<std::string> header, rec;
  std::size_t line = 1;
  if (!detail::read_csv_record(in, header, line, opt.trim)) throw input_error("csv: missing header row");

  auto find_col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  std::vector<std::string> missing;
  std::vector<int> pos;
  for (const auto& c : schema.columns) {
    pos.push_back(find_col(c.name));
    if (pos.back() < 0) missing.push_back(c.name);
  }
  int label_pos = -1;
  if (schema.label) {
    label_pos = find_col(schema.label->column);
    if (label_pos < 0) missing.push_back(schema.label->column);
  }
  if (!missing.empty()) {
    std::string m;
    for (const auto& x : missing) m += (m.empty() ? "'" : ", '") + x + "'";
    throw input_error("csv: missing column" + std::string(missing.size() > 1 ? "s " : " ") + m);
  }
  if (!opt.allow_extra_columns) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      bool known = static_cast<int>(i) == label_pos;
      for (int p : pos) known = known || p == static_cast<int>(i);
      if (!known) throw input_error("csv: unexpected column '" + header[i] + "'");
    }
  }

  std::vector<std::vector<double>> nums(schema.columns.size());
  std::vector<std::vector<std::string>> cats(schema.columns.size());
  std::vector<int> labels;
  std::size_t row = 0;
  while (true) {
    const std::size_t rec_line = line;
    if (!detail::read_csv_record(in, rec, line, opt.trim)) break;
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != header.size())
      throw input_error("csv line " + std::to_string(rec_line) + ": expected " +
                        std::to_string(header.size()) + " fields, found " + std::to_string(rec.size()));
    for (std::size_t j = 0; j < schema.columns.size(); ++j) {
      const auto& spec = schema.columns[j];
      const std::string& cell = rec[static_cast<std::size_t>(pos[j])];
      if (spec.type == ColumnType::categorical) {
        cats[j].push_back(cell);
        continue;
      }
      bool ok = false;
      double v = detail::parse_number(cell, ok);
      if (!ok || !std::isfinite(v))
        throw input_error("csv line " + std::to_string(rec_line) + ", column '" + spec.name +
                          "': not a finite number: '" + cell + "'");
      if (spec.type == ColumnType::binary && v != 0.0 && v != 1.0)
        throw input_error("csv line " + std::to_string(rec_line) + ", column '" + spec.name +
                          "': binary value must be 0 or 1");
      nums[j].push_back(v);
    }
    if (schema.label) {
      const std::string& cell = rec[static_cast<std::size_t>(label_pos)];
      const auto& r = *schema.label;
      if (std::find(r.positive.begin(), r.positive.end(), cell) != r.positive.end()) labels.push_back(1);
      else if (std::find(r.negative.begin(), r.negative.end(), cell) != r.negative.end()) labels.push_back(0);
      else
        throw input_error("csv line " + std::to_string(rec_line) + ", column '" + r.column +
                          "': unrecognised label '" + cell + "'");
    }
    ++row;
  }

  Dataset d;
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    const auto& spec = schema.columns[j];
    if (spec.type == ColumnType::categorical) d.set_categorical(spec.name, std::move(cats[j]));
    else d.set_numeric(spec.name, spec.type, std::move(nums[j]));
  }
  if (schema.label) d.set_binary("y", labels);
  return d;
}

inline Dataset read_csv_file(const std::string& path, const Schema& schema, const CsvOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  return read_csv(in, schema, opt);
}

inline Schema dataset_schema(const Dataset& d) { return Schema{d.schema(), std::nullopt}; }

inline void write_csv(std::ostream& out, const Dataset& d) {
  const auto cols = d.schema();
  for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << detail::csv_quote(cols[j].name);
  out << "\r\n";
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << detail::csv_quote(d.cell_text(j, i));
    out << "\r\n";
  }
}

inline void write_csv_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, d);
}

}  // namespace cfair
