#pragma once

// Tabular datasets: CSV ingestion, z-score normalization, seeded splits and a
// synthetic blob generator for harness runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/numerics.hpp"
#include "ynn/rng.hpp"
#include "ynn/serialize.hpp"

namespace ynn {

struct Dataset {
  Matrix features;  // n x d
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // index -> original label text

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols(); }

  Matrix sample(std::size_t i) const {
    const auto row = features.row_view(i);
    return Matrix(1, row.size(), std::vector<double>(row.begin(), row.end()));
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.features = Matrix(rows.size(), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = features.row_view(rows[r]);
      std::copy(src.begin(), src.end(), out.features.values().begin() + r * features.cols());
      out.labels.push_back(labels[rows[r]]);
    }
    out.class_count = class_count;
    out.feature_names = feature_names;
    out.class_names = class_names;
    return out;
  }
};

struct CsvOptions {
  std::vector<std::size_t> feature_columns;  // empty: every column except the label
  std::size_t label_column = 0;
  bool has_header = false;
  // Categorical cell text -> numeric value, applied before numeric parsing.
  std::map<std::string, double> encoding;
};

// Connect-4 board cells.
inline std::map<std::string, double> connect4_encoding() {
  return {{"x", 1.0}, {"o", -1.0}, {"b", 0.0}};
}

// Splits one RFC-4180 record. Quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_cell(const std::string& raw,
                                        const std::map<std::string, double>& encoding) {
  const std::string cell = trim(raw);
  if (auto it = encoding.find(cell); it != encoding.end()) return it->second;
  if (cell.empty()) return std::nullopt;
  try {
    const double v = parse_double(cell);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");

  Dataset ds;
  std::vector<double> values;
  std::unordered_map<std::string, std::size_t> label_index;
  std::vector<std::size_t> feature_cols = opts.feature_columns;
  std::vector<std::size_t> bad_rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_record(line);
    if (width == 0) {
      width = cells.size();
      if (opts.label_column >= width) {
        throw ValidationError("label column " + std::to_string(opts.label_column) +
                              " out of range (file has " + std::to_string(width) + " columns)");
      }
      if (feature_cols.empty()) {
        for (std::size_t c = 0; c < width; ++c) {
          if (c != opts.label_column) feature_cols.push_back(c);
        }
      }
      for (std::size_t c : feature_cols) {
        if (c >= width) {
          throw ValidationError("feature column " + std::to_string(c) + " out of range (file has " +
                                std::to_string(width) + " columns)");
        }
      }
      if (opts.has_header) {
        for (std::size_t c : feature_cols) ds.feature_names.push_back(detail::trim(cells[c]));
        continue;
      }
    }
    if (cells.size() != width) {
      bad_rows.push_back(line_no);
      continue;
    }
    std::vector<double> row;
    row.reserve(feature_cols.size());
    bool ok = true;
    for (std::size_t c : feature_cols) {
      auto v = detail::parse_cell(cells[c], opts.encoding);
      if (!v) {
        ok = false;
        break;
      }
      row.push_back(*v);
    }
    if (!ok) {
      bad_rows.push_back(line_no);
      continue;
    }
    const std::string label = detail::trim(cells[opts.label_column]);
    auto [it, inserted] = label_index.try_emplace(label, ds.class_names.size());
    if (inserted) ds.class_names.push_back(label);
    ds.labels.push_back(it->second);
    values.insert(values.end(), row.begin(), row.end());
  }

  if (!bad_rows.empty()) {
    std::ostringstream msg;
    msg << "'" << path << "': non-numeric or malformed feature cells on line(s)";
    for (std::size_t i = 0; i < bad_rows.size() && i < 10; ++i) msg << ' ' << bad_rows[i];
    if (bad_rows.size() > 10) msg << " ... (" << bad_rows.size() << " rows)";
    throw ParseError(msg.str());
  }
  if (ds.labels.empty()) throw ParseError("'" + path + "': no data rows");

  ds.features = Matrix(ds.labels.size(), feature_cols.size(), std::move(values));
  ds.class_count = ds.class_names.size();
  return ds;
}

// Writes features with 17 significant digits and the original label text last.
inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features.row_view(i)) out << format_double(v) << ',';
    out << (ds.class_names.empty() ? std::to_string(ds.labels[i]) : ds.class_names[ds.labels[i]])
        << '\n';
  }
  write_text_file(path, out.str());
}

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

// Constant features map to zero.
inline Dataset apply_normalization(Dataset ds, const FeatureStats& stats) {
  const std::size_t d = ds.feature_count();
  if (stats.mean.size() != d) throw ShapeError("normalization stats width mismatch");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double& v = ds.features(i, c);
      v = stats.std[c] > 0.0 ? (v - stats.mean[c]) / stats.std[c] : 0.0;
    }
  }
  return ds;
}

inline FeatureStats feature_stats(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.feature_count();
  FeatureStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += ds.features(i, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = ds.features(i, c) - s.mean[c];
      s.std[c] += dv * dv;
    }
  }
  for (double& v : s.std) v = std::sqrt(v / static_cast<double>(n));
  return s;
}

struct Normalized {
  Dataset data;
  FeatureStats stats;
};

inline Normalized normalize(const Dataset& ds) {
  if (ds.size() < 2) throw ValidationError("normalize: need at least 2 samples");
  FeatureStats stats = feature_stats(ds);
  return {apply_normalization(ds, stats), std::move(stats)};
}

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split {
  Dataset train;
  Dataset test;
};

inline Split split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ValidationError("split: train_fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  if (n < 2) throw ValidationError("split: need at least 2 samples");
  SeededRng rng(spec.seed);
  std::vector<std::size_t> train_rows, test_rows;
  auto take = [&](std::vector<std::size_t> rows) {
    rng.shuffle(std::span<std::size_t>(rows));
    const auto count = rows.size();
    auto k = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(count)));
    k = std::clamp<std::size_t>(k, 1, count - 1);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  };
  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> by_class(ds.class_count);
    for (std::size_t i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].empty()) continue;
      if (by_class[c].size() < 2) {
        throw ValidationError("split: class " + std::to_string(c) +
                              " has fewer than 2 samples; cannot stratify");
      }
      take(std::move(by_class[c]));
    }
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    take(std::move(all));
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {ds.subset(train_rows), ds.subset(test_rows)};
}

struct BlobSpec {
  std::size_t samples = 200;
  std::size_t features = 4;
  std::size_t classes = 2;
  double center_spread = 3.0;  // centers uniform in [-spread, spread]^d
  double noise = 1.0;          // per-coordinate uniform noise in [-noise, noise]
  std::uint64_t seed = 0;
};

// Balanced classes: sample i has label i % classes.
inline Dataset make_blobs(const BlobSpec& spec) {
  if (spec.samples < 1 || spec.features < 1 || spec.classes < 2) {
    throw ValidationError("make_blobs: need samples >= 1, features >= 1, classes >= 2");
  }
  SeededRng center_rng = SeededRng(spec.seed).split(0);
  SeededRng noise_rng = SeededRng(spec.seed).split(1);
  const Matrix centers =
      uniform_matrix(center_rng, spec.classes, spec.features, -spec.center_spread, spec.center_spread);
  Dataset ds;
  ds.features = Matrix(spec.samples, spec.features);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::size_t c = i % spec.classes;
    for (std::size_t f = 0; f < spec.features; ++f) {
      ds.features(i, f) = centers(c, f) + noise_rng.uniform(-spec.noise, spec.noise);
    }
    ds.labels.push_back(c);
  }
  ds.class_count = spec.classes;
  for (std::size_t c = 0; c < spec.classes; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

}  // namespace ynn
