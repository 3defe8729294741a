#pragma once

// Model file: UTF-8 JSON with a fixed key order.
//
//   {
//     "format_version": 1,
//     "input_width": <n>,
//     "levels": [
//       { "width": <m>, "activation": "tanh", "has_clique": true,
//         "inter":  { "rows": r, "cols": c, "values": ["<17 sig. digits>", ...] },
//         "clique": { ... } }                      <- present iff has_clique
//     ]
//   }
//
// Values are decimal strings with 17 significant digits, row-major, which
// round-trips every finite double exactly.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "ynn/error.hpp"
#include "ynn/model.hpp"

namespace ynn {

inline constexpr int kModelFormatVersion = 1;

inline std::string format_double(double v, int significant = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("not a decimal number: '" + s + "'");
  }
  return v;
}

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto values = nlohmann::ordered_json::array();
  for (double v : m.values()) values.push_back(format_double(v));
  j["values"] = std::move(values);
  return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto& values = j.at("values");
  if (!values.is_array() || values.size() != rows * cols) {
    throw ShapeError(where + ": expected " + std::to_string(rows * cols) + " values, found " +
                     std::to_string(values.is_array() ? values.size() : 0));
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = parse_double(values[i].get<std::string>());
    if (!std::isfinite(v)) {
      throw NonFiniteError(where + ": non-finite weight at index " + std::to_string(i));
    }
    m[i] = v;
  }
  return m;
}

}  // namespace detail

inline std::string serialize(const Network& net) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["input_width"] = net.input_width;
  auto levels = nlohmann::ordered_json::array();
  for (const Level& lv : net.levels) {
    nlohmann::ordered_json l;
    l["width"] = lv.spec.width;
    l["activation"] = std::string(to_string(lv.spec.activation));
    l["has_clique"] = lv.spec.has_clique;
    l["inter"] = detail::matrix_to_json(lv.inter.matrix);
    if (lv.clique) l["clique"] = detail::matrix_to_json(lv.clique->matrix);
    levels.push_back(std::move(l));
  }
  doc["levels"] = std::move(levels);
  return doc.dump(1) + "\n";
}

inline Network deserialize(const std::string& payload) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("model file: unsupported format_version " + std::to_string(version));
    }
    Network net;
    net.input_width = doc.at("input_width").get<std::size_t>();
    for (const auto& l : doc.at("levels")) {
      const std::string where = "level " + std::to_string(net.levels.size());
      Level lv;
      lv.spec.width = l.at("width").get<std::size_t>();
      lv.spec.activation = parse_activation(l.at("activation").get<std::string>());
      lv.spec.has_clique = l.at("has_clique").get<bool>();
      lv.inter = InterLayerWeights(detail::matrix_from_json(l.at("inter"), where + " inter"));
      if (l.contains("clique")) {
        lv.clique = CliqueWeights(detail::matrix_from_json(l.at("clique"), where + " clique"));
      }
      net.levels.push_back(std::move(lv));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void save_network(const Network& net, const std::string& path) {
  write_text_file(path, serialize(net));
}

inline Network load_network(const std::string& path) { return deserialize(read_text_file(path)); }

}  // namespace ynn
