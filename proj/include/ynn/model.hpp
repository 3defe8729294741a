#pragma once

// Network structure: levels, inter-layer weights and per-level clique weights.
//
// Node indices are 0-based throughout. A level of m nodes fed by a level of
// p nodes owns
//   InterLayerWeights  (p+1) x m   row 0 = bias, row k+1 = weights from node k
//   CliqueWeights      (m+1) x m   row 0 = clique bias, row k+1 = node k -> *,
//                                  entry (j+1, j) = self meta-weight of node j

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/numerics.hpp"
#include "ynn/rng.hpp"

namespace ynn {

struct InterLayerWeights {
  Matrix matrix;

  InterLayerWeights() = default;
  explicit InterLayerWeights(Matrix m) : matrix(std::move(m)) {}
  InterLayerWeights(std::size_t inputs, std::size_t outputs) : matrix(inputs + 1, outputs) {}

  std::size_t inputs() const { return matrix.rows() - 1; }
  std::size_t outputs() const { return matrix.cols(); }
  double& bias(std::size_t j) { return matrix(0, j); }
  double bias(std::size_t j) const { return matrix(0, j); }
  double& weight(std::size_t from, std::size_t to) { return matrix(from + 1, to); }
  double weight(std::size_t from, std::size_t to) const { return matrix(from + 1, to); }

  friend bool operator==(const InterLayerWeights&, const InterLayerWeights&) = default;
};

struct CliqueWeights {
  Matrix matrix;

  CliqueWeights() = default;
  explicit CliqueWeights(Matrix m) : matrix(std::move(m)) {
    if (matrix.rows() != matrix.cols() + 1) {
      throw ShapeError("clique weights must be (m+1) x m, got " + matrix.shape_string());
    }
  }
  explicit CliqueWeights(std::size_t nodes) : matrix(nodes + 1, nodes) {}

  std::size_t nodes() const { return matrix.cols(); }
  double& bias(std::size_t j) { return matrix(0, j); }
  double bias(std::size_t j) const { return matrix(0, j); }
  // Weight of the edge node `from` -> node `to`; from == to is the self meta-weight.
  double& edge(std::size_t from, std::size_t to) { return matrix(from + 1, to); }
  double edge(std::size_t from, std::size_t to) const { return matrix(from + 1, to); }

  // The m x m node block.
  Matrix node_block() const {
    const std::size_t m = nodes();
    Matrix b(m, m);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < m; ++j) b(k, j) = edge(k, j);
    }
    return b;
  }

  static CliqueWeights from_parts(const std::vector<double>& bias_row, const Matrix& block) {
    const std::size_t m = block.rows();
    if (block.cols() != m || bias_row.size() != m) {
      throw ShapeError("clique parts: bias/block size mismatch");
    }
    CliqueWeights cw(m);
    for (std::size_t j = 0; j < m; ++j) {
      cw.bias(j) = bias_row[j];
      for (std::size_t k = 0; k < m; ++k) cw.edge(k, j) = block(k, j);
    }
    return cw;
  }

  friend bool operator==(const CliqueWeights&, const CliqueWeights&) = default;
};

struct LevelSpec {
  std::size_t width = 1;
  ActivationKind activation = ActivationKind::Tanh;
  bool has_clique = true;

  friend bool operator==(const LevelSpec&, const LevelSpec&) = default;
};

// Hidden levels of the given widths with cliques, followed by an output level
// without one.
inline std::vector<LevelSpec> classifier_levels(const std::vector<std::size_t>& hidden,
                                                std::size_t outputs,
                                                ActivationKind activation = ActivationKind::Tanh,
                                                bool hidden_cliques = true,
                                                bool output_clique = false) {
  std::vector<LevelSpec> levels;
  for (std::size_t w : hidden) levels.push_back({w, activation, hidden_cliques});
  levels.push_back({outputs, activation, output_clique});
  return levels;
}

struct Level {
  LevelSpec spec;
  InterLayerWeights inter;
  std::optional<CliqueWeights> clique;

  friend bool operator==(const Level&, const Level&) = default;
};

struct Network {
  std::size_t input_width = 0;
  std::vector<Level> levels;

  std::size_t output_width() const { return levels.empty() ? 0 : levels.back().spec.width; }

  // Throws ShapeError on any broken chain or clique/flag disagreement.
  void validate() const {
    if (input_width < 1) throw ShapeError("network input width must be >= 1");
    if (levels.empty()) throw ShapeError("network has no levels");
    std::size_t prev = input_width;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const Level& lv = levels[i];
      const std::string where = "level " + std::to_string(i);
      if (lv.spec.width < 1) throw ShapeError(where + ": width must be >= 1");
      if (lv.inter.matrix.rows() != prev + 1 || lv.inter.matrix.cols() != lv.spec.width) {
        throw ShapeError(where + ": inter-layer weights are " + lv.inter.matrix.shape_string() +
                         ", expected " + std::to_string(prev + 1) + "x" +
                         std::to_string(lv.spec.width));
      }
      if (lv.spec.has_clique != lv.clique.has_value()) {
        throw ShapeError(where + ": has_clique flag disagrees with stored clique weights");
      }
      if (lv.clique && (lv.clique->matrix.rows() != lv.spec.width + 1 ||
                        lv.clique->matrix.cols() != lv.spec.width)) {
        throw ShapeError(where + ": clique weights are " + lv.clique->matrix.shape_string());
      }
      prev = lv.spec.width;
    }
  }

  friend bool operator==(const Network&, const Network&) = default;
};

inline Network init_network(const std::vector<LevelSpec>& spec, std::size_t input_width,
                            const SeededRng& rng, double init_scale) {
  if (spec.empty()) throw ValidationError("init_network: empty level list");
  if (input_width < 1) throw ValidationError("init_network: input width must be >= 1");
  if (!(init_scale >= 0.0)) throw ValidationError("init_network: init_scale must be >= 0");

  Network net;
  net.input_width = input_width;
  std::size_t fan_in = input_width;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const LevelSpec& ls = spec[i];
    if (ls.width < 1) throw ValidationError("init_network: level width must be >= 1");
    Level lv;
    lv.spec = ls;
    SeededRng inter_rng = rng.split(2 * i);
    const double s1 = init_scale / std::sqrt(static_cast<double>(fan_in));
    lv.inter = InterLayerWeights(uniform_matrix(inter_rng, fan_in + 1, ls.width, -s1, s1));
    if (ls.has_clique) {
      const std::size_t m = ls.width;
      SeededRng clique_rng = rng.split(2 * i + 1);
      // Off-diagonal column sums stay below 0.5.
      const double s2 = m > 1 ? 0.5 / static_cast<double>(m - 1) : 0.0;
      CliqueWeights cw(m);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
          const double u = clique_rng.uniform(-s2, s2);
          cw.edge(k, j) = (k == j) ? 1.0 : u;
        }
      }
      lv.clique = std::move(cw);
    }
    net.levels.push_back(std::move(lv));
    fan_in = ls.width;
  }
  return net;
}

// Zero clique biases and off-diagonals, unit diagonal. With Identity clique
// activation such a network computes the plain feedforward function.
inline Network tree_equivalent_config(Network net) {
  for (Level& lv : net.levels) {
    if (!lv.clique) continue;
    CliqueWeights& cw = *lv.clique;
    const std::size_t m = cw.nodes();
    for (std::size_t j = 0; j < m; ++j) {
      cw.bias(j) = 0.0;
      for (std::size_t k = 0; k < m; ++k) cw.edge(k, j) = (k == j) ? 1.0 : 0.0;
    }
  }
  return net;
}

// rho = max_j sum_{k != j} |w_kj|
inline double clique_contraction(const CliqueWeights& cw) {
  const std::size_t m = cw.nodes();
  double rho = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) s += std::abs(cw.edge(k, j));
    }
    rho = std::max(rho, s);
  }
  return rho;
}

struct LevelContraction {
  std::size_t level = 0;
  double rho = 0.0;
};

struct ContractionReport {
  std::vector<LevelContraction> levels;  // clique-bearing levels only

  double max_rho() const {
    double r = 0.0;
    for (const auto& l : levels) r = std::max(r, l.rho);
    return r;
  }
};

inline ContractionReport contraction_report(const Network& net) {
  ContractionReport report;
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    if (net.levels[i].clique) {
      report.levels.push_back({i, clique_contraction(*net.levels[i].clique)});
    }
  }
  return report;
}

}  // namespace ynn
