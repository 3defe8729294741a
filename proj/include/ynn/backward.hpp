#pragma once

// Gradients of a scalar loss with respect to every weight.
//
// Two ways to move a gradient across a clique are provided:
//
//   GradMode::PaperEq6      d_meta = d_real * C * diag(f'(real)) * diag(w_jj) * diag(f'(meta))
//                           with C the node block whose diagonal is replaced by ones.
//                           Clique weight gradients use d_real as the sensitivity.
//
//   GradMode::ExactAdjoint  Implicit differentiation of the clique system. With
//                           A[k][j] = w_kj f'(real_k) (k != j, zero diagonal) the
//                           adjoint lambda solves (I - A) lambda^T = d_real^T,
//                           d_meta_j = lambda_j w_jj f'(meta_j), and lambda is the
//                           sensitivity for the clique weight gradients.
//
// The two coincide when all off-diagonal clique weights are zero and the
// activation is Identity.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/forward.hpp"
#include "ynn/model.hpp"
#include "ynn/numerics.hpp"

namespace ynn {

enum class GradMode { PaperEq6, ExactAdjoint };

inline std::string_view to_string(GradMode m) {
  return m == GradMode::PaperEq6 ? "paper" : "exact";
}

inline GradMode parse_grad_mode(std::string_view s) {
  if (s == "paper") return GradMode::PaperEq6;
  if (s == "exact") return GradMode::ExactAdjoint;
  throw ValidationError("unknown gradient mode '" + std::string(s) + "'");
}

struct GradientSet {
  std::vector<Matrix> d_inter;
  std::vector<std::optional<Matrix>> d_clique;

  static GradientSet zeros_like(const Network& net) {
    GradientSet g;
    for (const Level& lv : net.levels) {
      g.d_inter.emplace_back(lv.inter.matrix.rows(), lv.inter.matrix.cols());
      if (lv.clique) {
        g.d_clique.emplace_back(Matrix(lv.clique->matrix.rows(), lv.clique->matrix.cols()));
      } else {
        g.d_clique.emplace_back(std::nullopt);
      }
    }
    return g;
  }

  // this += s * other
  void add_scaled(const GradientSet& other, double s) {
    for (std::size_t i = 0; i < d_inter.size(); ++i) {
      axpy(d_inter[i], s, other.d_inter[i]);
      if (d_clique[i]) axpy(*d_clique[i], s, *other.d_clique[i]);
    }
  }

  // Level order, inter-layer before clique.
  template <typename Fn>
  void for_each_matrix(Fn&& fn) const {
    for (std::size_t i = 0; i < d_inter.size(); ++i) {
      fn(d_inter[i]);
      if (d_clique[i]) fn(*d_clique[i]);
    }
  }
};

struct BackwardOptions {
  GradMode mode = GradMode::ExactAdjoint;
  // Negative-control hook: builds the clique gradient from a design vector
  // whose j-th entry uses f(real_j) instead of f(meta_j).
  bool corrupt_clique_gradient = false;
};

// C = node block with unit diagonal.
inline Matrix coupling_operator(const CliqueWeights& cw) {
  Matrix c = cw.node_block();
  for (std::size_t j = 0; j < c.rows(); ++j) c(j, j) = 1.0;
  return c;
}

// d_real_i = (d_meta_{i+1} * node_rows(W)^T) .* f'(real_i)
inline Matrix layer_input_gradient(const Matrix& d_meta_next, const InterLayerWeights& w_next,
                                   const Matrix& real, ActivationKind f) {
  const std::size_t m = w_next.inputs();
  if (d_meta_next.size() != w_next.outputs() || real.size() != m) {
    throw ShapeError("layer_input_gradient: d_meta " + d_meta_next.shape_string() +
                     " / real " + real.shape_string() + " do not chain with weights " +
                     w_next.matrix.shape_string());
  }
  Matrix d(1, m);
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < w_next.outputs(); ++j) s += d_meta_next[j] * w_next.weight(k, j);
    d[k] = s * activate_deriv(real[k], f);
  }
  return d;
}

inline Matrix paper_meta_gradient(const Matrix& d_real, const LevelCache& cache,
                                  const CliqueWeights& cw, ActivationKind f) {
  const std::size_t m = cw.nodes();
  const Matrix transfer = matmul(d_real, coupling_operator(cw));
  Matrix d_meta(1, m);
  for (std::size_t j = 0; j < m; ++j) {
    d_meta[j] = transfer[j] * activate_deriv(cache.real[j], f) * cw.edge(j, j) *
                activate_deriv(cache.meta[j], f);
  }
  return d_meta;
}

struct AdjointResult {
  Matrix lambda;
  Matrix d_meta;
};

inline AdjointResult exact_meta_gradient(const Matrix& d_real, const LevelCache& cache,
                                         const CliqueWeights& cw, ActivationKind f) {
  const std::size_t m = cw.nodes();
  if (d_real.size() != m) throw ShapeError("exact_meta_gradient: d_real width mismatch");
  Matrix system(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    const double fk = activate_deriv(cache.real[k], f);
    for (std::size_t j = 0; j < m; ++j) {
      system(k, j) = (k == j) ? 1.0 : -cw.edge(k, j) * fk;
    }
  }
  std::vector<double> lambda;
  try {
    lambda = solve_linear(system, d_real.values());
  } catch (const SingularError& e) {
    throw SingularError(std::string("adjoint system I - A is singular (") + e.what() +
                        "); enable the contraction projection to keep cliques well-posed");
  }
  AdjointResult r{Matrix(1, m, lambda), Matrix(1, m)};
  for (std::size_t j = 0; j < m; ++j) {
    r.d_meta[j] = lambda[j] * cw.edge(j, j) * activate_deriv(cache.meta[j], f);
  }
  return r;
}

// Outer product prev_aug^T * d_meta.
inline Matrix interlayer_weight_gradient(const Matrix& d_meta, const Matrix& prev_activated_aug) {
  if (d_meta.rows() != 1 || prev_activated_aug.rows() != 1) {
    throw ShapeError("interlayer_weight_gradient: expects row vectors");
  }
  Matrix g(prev_activated_aug.cols(), d_meta.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) = prev_activated_aug[r] * d_meta[c];
  }
  return g;
}

// (1, f(real_0), ..., f(meta_j), ..., f(real_{m-1}))
inline Matrix design_vector(const LevelCache& cache, std::size_t j, ActivationKind f) {
  const std::size_t m = cache.real.size();
  if (j >= m) {
    throw ShapeError("design_vector: node " + std::to_string(j) + " out of range for width " +
                     std::to_string(m));
  }
  Matrix d(1, m + 1);
  d[0] = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    d[k + 1] = (k == j) ? activate(cache.meta[k], f) : cache.activated_real[k];
  }
  return d;
}

// Column j = sensitivity_j * design_vector(j)^T
inline Matrix clique_weight_gradient(const Matrix& sensitivity, const LevelCache& cache,
                                     ActivationKind f, bool corrupt = false) {
  const std::size_t m = cache.real.size();
  Matrix g(m + 1, m);
  for (std::size_t j = 0; j < m; ++j) {
    const double s = sensitivity[j];
    g(0, j) = s;
    for (std::size_t k = 0; k < m; ++k) {
      const double dv = (k == j && !corrupt) ? activate(cache.meta[k], f) : cache.activated_real[k];
      g(k + 1, j) = s * dv;
    }
  }
  return g;
}

inline GradientSet backward_network(const Network& net, const std::vector<LevelCache>& caches,
                                    const Matrix& x, const Matrix& d_output,
                                    const BackwardOptions& opts = {}) {
  if (caches.size() != net.levels.size()) {
    throw ShapeError("backward: cache count does not match level count");
  }
  if (d_output.size() != net.output_width()) {
    throw ShapeError("backward: d_output width mismatch");
  }
  GradientSet grads = GradientSet::zeros_like(net);
  Matrix d_real = d_output;
  for (std::size_t i = net.levels.size(); i-- > 0;) {
    const Level& lv = net.levels[i];
    const LevelCache& cache = caches[i];
    const ActivationKind f = lv.spec.activation;
    Matrix d_meta;
    if (lv.clique) {
      Matrix sensitivity;
      if (opts.mode == GradMode::ExactAdjoint) {
        AdjointResult adj = exact_meta_gradient(d_real, cache, *lv.clique, f);
        d_meta = std::move(adj.d_meta);
        sensitivity = std::move(adj.lambda);
      } else {
        d_meta = paper_meta_gradient(d_real, cache, *lv.clique, f);
        sensitivity = d_real;
      }
      grads.d_clique[i] = clique_weight_gradient(sensitivity, cache, f, opts.corrupt_clique_gradient);
    } else {
      d_meta = d_real;
    }
    const Matrix prev_aug = (i == 0) ? augment_with_one(x) : augment_with_one(caches[i - 1].activated_real);
    grads.d_inter[i] = interlayer_weight_gradient(d_meta, prev_aug);
    if (i > 0) {
      d_real = layer_input_gradient(d_meta, lv.inter, caches[i - 1].real,
                                    net.levels[i - 1].spec.activation);
    }
  }
  return grads;
}

// Central differences, re-solving the whole network for every probe.
inline GradientSet finite_difference_gradient(const Network& net, const Matrix& x,
                                              const std::function<double(const Matrix&)>& loss_fn,
                                              double h, const SolverOptions& solver = {1e-12, 200}) {
  if (!(h > 0.0)) throw ValidationError("finite_difference_gradient: h must be > 0");
  GradientSet grads = GradientSet::zeros_like(net);
  Network probe = net;
  auto loss_at = [&]() { return loss_fn(forward_network(probe, x, solver).output); };
  auto differentiate = [&](Matrix& weights, Matrix& out) {
    for (std::size_t idx = 0; idx < weights.size(); ++idx) {
      const double saved = weights[idx];
      weights[idx] = saved + h;
      const double up = loss_at();
      weights[idx] = saved - h;
      const double down = loss_at();
      weights[idx] = saved;
      out[idx] = (up - down) / (2.0 * h);
    }
  };
  for (std::size_t i = 0; i < probe.levels.size(); ++i) {
    differentiate(probe.levels[i].inter.matrix, grads.d_inter[i]);
    if (probe.levels[i].clique) differentiate(probe.levels[i].clique->matrix, *grads.d_clique[i]);
  }
  return grads;
}

}  // namespace ynn
