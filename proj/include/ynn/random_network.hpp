#pragma once

// Random small networks for gradient checks and property runs.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ynn/model.hpp"
#include "ynn/rng.hpp"

namespace ynn {

struct RandomNetSpec {
  std::size_t max_input = 6;
  std::size_t max_width = 6;
  std::size_t min_clique_levels = 1;
  std::size_t max_clique_levels = 2;
  std::size_t min_outputs = 2;
  std::size_t max_outputs = 4;
  double weight_scale = 1.0;  // inter-layer weights uniform in [-scale, scale)
  double rho_max = 0.8;       // off-diagonal column sums are rescaled to at most this
  bool zero_off_diagonal = false;
  bool random_activation = true;
  ActivationKind activation = ActivationKind::Tanh;
};

inline constexpr std::array<ActivationKind, 3> kAllActivations = {
    ActivationKind::Identity, ActivationKind::Tanh, ActivationKind::Sigmoid};

inline std::size_t uniform_count(SeededRng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

// Random clique of m nodes: biases and diagonal uniform in [-1, 1), the
// off-diagonal block uniform in [-1, 1) and then scaled by one common factor
// so that its contraction bound (largest off-diagonal column sum) equals
// rho_target.
inline CliqueWeights random_clique(SeededRng& rng, std::size_t m, double rho_target,
                                   bool zero_off_diagonal = false) {
  CliqueWeights cw(m);
  for (std::size_t j = 0; j < m; ++j) cw.bias(j) = rng.uniform(-1.0, 1.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) cw.edge(k, j) = rng.uniform(-1.0, 1.0);
  }
  const double rho = clique_contraction(cw);
  const double factor = (zero_off_diagonal || rho == 0.0) ? 0.0 : rho_target / rho;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      if (k != j) cw.edge(k, j) *= factor;
    }
  }
  return cw;
}

inline Network random_network(SeededRng& rng, const RandomNetSpec& spec) {
  Network net;
  net.input_width = uniform_count(rng, 1, spec.max_input);
  const std::size_t clique_levels = uniform_count(rng, spec.min_clique_levels, spec.max_clique_levels);
  std::size_t prev = net.input_width;
  for (std::size_t i = 0; i <= clique_levels; ++i) {
    const bool output = (i == clique_levels);
    Level lv;
    lv.spec.width = output ? uniform_count(rng, spec.min_outputs, spec.max_outputs)
                           : uniform_count(rng, 1, spec.max_width);
    lv.spec.activation = spec.random_activation ? kAllActivations[rng.below(3)] : spec.activation;
    lv.spec.has_clique = !output;
    lv.inter = InterLayerWeights(
        uniform_matrix(rng, prev + 1, lv.spec.width, -spec.weight_scale, spec.weight_scale));
    if (!output) {
      const double rho = rng.uniform(0.0, spec.rho_max);
      lv.clique = random_clique(rng, lv.spec.width, rho, spec.zero_off_diagonal);
    }
    prev = lv.spec.width;
    net.levels.push_back(std::move(lv));
  }
  return net;
}

}  // namespace ynn
