#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psbounds/data.hpp"
#include "psbounds/error.hpp"

namespace psbounds {

/// Maps the logical fields onto CSV header names. An unset weight column
/// means unit weights.
struct Schema {
  std::string y = "y";
  std::string d = "d";
  std::string z = "z";
  std::string s = "s";
  std::optional<std::string> w = std::string("w");
  std::vector<std::string> x;
};

namespace csv_detail {

// RFC 4180 style: comma separated, double quotes escape, "" inside quotes.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA";
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<int> parse_binary(std::string_view s) {
  auto v = parse_double(s);
  if (!v || (*v != 0.0 && *v != 1.0)) return std::nullopt;
  return static_cast<int>(*v);
}

}  // namespace csv_detail

/// Parses CSV text (header row required). Missing outcomes are empty or "NA".
inline Dataset parse_csv(std::istream& in, const Schema& schema) {
  using namespace csv_detail;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyDataset, "input has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::unordered_map<std::string, std::size_t> col;
  {
    auto header = split_record(line);
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(trim(header[i])), i);
  }
  auto index_of = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw Error(Errc::MissingColumn, "column '" + name + "' not in header", -1, name);
    return it->second;
  };
  const std::size_t iy = index_of(schema.y), id = index_of(schema.d), iz = index_of(schema.z),
                    is = index_of(schema.s);
  std::optional<std::size_t> iw;
  if (schema.w) iw = index_of(*schema.w);
  std::vector<std::size_t> ix;
  for (const auto& name : schema.x) ix.push_back(index_of(name));

  std::vector<Observation> rows;
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto f = split_record(line);
    auto field = [&](std::size_t i, const std::string& name) -> std::string_view {
      if (i >= f.size()) throw Error(Errc::BadValue, "row is too short", row, name);
      return f[i];
    };
    auto binary = [&](std::size_t i, const std::string& name) {
      auto v = parse_binary(field(i, name));
      if (!v) throw Error(Errc::BadValue, "expected 0 or 1", row, name);
      return *v;
    };

    Observation o;
    o.d = binary(id, schema.d);
    o.z = binary(iz, schema.z);
    o.s = binary(is, schema.s);
    if (iw) {
      auto w = parse_double(field(*iw, *schema.w));
      if (!w || !std::isfinite(*w)) throw Error(Errc::BadValue, "weight is not a number", row, *schema.w);
      if (!(*w > 0.0)) throw Error(Errc::NonpositiveWeight, "weight must be positive", row, *schema.w);
      o.w = *w;
    }
    const std::string_view yf = field(iy, schema.y);
    if (o.s == 0) {
      if (!is_missing(yf))
        throw Error(Errc::OutcomePresentWhenUnselected, "outcome present with s = 0", row, schema.y);
    } else {
      auto y = parse_double(yf);
      if (!y || !std::isfinite(*y)) throw Error(Errc::BadValue, "selected row needs a numeric outcome", row, schema.y);
      o.y = *y;
    }
    o.x.reserve(ix.size());
    for (std::size_t k = 0; k < ix.size(); ++k) {
      auto v = parse_double(field(ix[k], schema.x[k]));
      if (!v || !std::isfinite(*v)) throw Error(Errc::BadValue, "covariate is not a number", row, schema.x[k]);
      o.x.push_back(*v);
    }
    rows.push_back(std::move(o));
  }
  return Dataset(std::move(rows), schema.x);
}

inline Dataset load_csv(const std::string& path, const Schema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

/// Writes a dataset with columns y,d,z,s,w followed by the covariates.
inline void write_csv(std::ostream& out, const Dataset& ds) {
  out << "y,d,z,s,w";
  for (const auto& name : ds.covariate_names()) out << ',' << name;
  out << '\n';
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& o : ds) {
    if (o.y) buf << *o.y;
    buf << ',' << o.d << ',' << o.z << ',' << o.s << ',' << o.w;
    for (double v : o.x) buf << ',' << v;
    buf << '\n';
  }
  out << buf.str();
}

}  // namespace psbounds
