#pragma once

// Forward pass. Each level computes a meta value from the previous level's
// activated real values and, when it carries a clique, solves
//
//   n_j = w_0j + sum_{k != j} f(n_k) w_kj + f(meta_j) w_jj      (all j at once)
//
// for its real values n. Jacobi iteration is tried first; if it stalls the
// solver switches to damped Newton on g(n) = n - rhs(n).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/model.hpp"
#include "ynn/numerics.hpp"

namespace ynn {

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100;
};

struct LevelCache {
  Matrix meta;            // 1 x m
  Matrix real;            // 1 x m
  Matrix activated_real;  // 1 x m, f(real)
  std::size_t solver_iterations = 0;
  bool used_newton = false;
  double residual = 0.0;
};

struct ForwardResult {
  Matrix output;
  std::vector<LevelCache> caches;
};

inline Matrix compute_meta(const Matrix& prev_activated_aug, const InterLayerWeights& w) {
  if (prev_activated_aug.rows() != 1 || prev_activated_aug.cols() != w.matrix.rows()) {
    throw ShapeError("compute_meta: input " + prev_activated_aug.shape_string() +
                     " does not chain with weights " + w.matrix.shape_string());
  }
  return matmul(prev_activated_aug, w.matrix);
}

namespace detail {

// rhs for pre-activated values; summation runs over k in ascending order with
// the self term at position k == j.
inline void clique_rhs_activated(std::span<const double> f_real, std::span<const double> f_meta,
                                 const CliqueWeights& cw, std::span<double> out) {
  const std::size_t m = cw.nodes();
  const Matrix& w = cw.matrix;
  for (std::size_t j = 0; j < m; ++j) out[j] = w(0, j);
  for (std::size_t k = 0; k < m; ++k) {
    const double fk = f_real[k];
    const double* wrow = w.row_view(k + 1).data();
    for (std::size_t j = 0; j < k; ++j) out[j] += fk * wrow[j];
    out[k] += f_meta[k] * wrow[k];
    for (std::size_t j = k + 1; j < m; ++j) out[j] += fk * wrow[j];
  }
}

inline void apply_activation(std::span<const double> x, ActivationKind f, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(x[i], f);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detail

inline Matrix clique_rhs(const Matrix& real, const Matrix& meta, const CliqueWeights& cw,
                         ActivationKind f) {
  const std::size_t m = cw.nodes();
  if (real.size() != m || meta.size() != m) {
    throw ShapeError("clique_rhs: expected rows of width " + std::to_string(m));
  }
  Matrix fr = activate(real, f);
  Matrix fm = activate(meta, f);
  Matrix out(1, m);
  detail::clique_rhs_activated(fr.values(), fm.values(), cw, out.values());
  return out;
}

// Residual max_j |rhs_j(real) - real_j|, recomputed from scratch.
inline double clique_residual(const Matrix& real, const Matrix& meta, const CliqueWeights& cw,
                              ActivationKind f) {
  return max_abs_diff(clique_rhs(real, meta, cw, f), real);
}

inline LevelCache solve_clique(const Matrix& meta, const CliqueWeights& cw, ActivationKind f,
                               const SolverOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw ValidationError("solve_clique: tol must be > 0");
  if (opts.max_iter < 1) throw ValidationError("solve_clique: max_iter must be >= 1");
  const std::size_t m = cw.nodes();
  if (meta.rows() != 1 || meta.cols() != m) {
    throw ShapeError("solve_clique: meta is " + meta.shape_string() + ", clique has " +
                     std::to_string(m) + " nodes");
  }

  std::vector<double> f_meta(m), f_x(m, activate(0.0, f)), x(m), next(m);
  detail::apply_activation(meta.values(), f, f_meta);
  detail::clique_rhs_activated(f_x, f_meta, cw, x);

  LevelCache cache;
  cache.meta = meta;
  double residual = 0.0;
  bool converged = false;

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    if (!detail::all_finite(x)) throw DivergenceError("clique solve: non-finite Jacobi iterate");
    detail::apply_activation(x, f, f_x);
    detail::clique_rhs_activated(f_x, f_meta, cw, next);
    residual = detail::max_abs_diff(next, x);
    cache.solver_iterations = it;
    if (residual <= opts.tol) {
      converged = true;
      break;
    }
    x.swap(next);
  }

  if (!converged) {
    // Damped Newton on g(n) = n - rhs(n), Jacobian J_jk = delta_jk - w_kj f'(n_k).
    cache.used_newton = true;
    std::vector<double> g(m), trial(m), g_trial(m);
    auto eval_g = [&](std::span<const double> at, std::span<double> out) {
      detail::apply_activation(at, f, f_x);
      detail::clique_rhs_activated(f_x, f_meta, cw, out);
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        out[j] = at[j] - out[j];
        r = std::max(r, std::abs(out[j]));
      }
      return r;
    };
    residual = eval_g(x, g);
    for (std::size_t it = 1; it <= opts.max_iter && residual > opts.tol; ++it) {
      Matrix jac(m, m);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
          jac(j, k) = (j == k) ? 1.0 : -cw.edge(k, j) * activate_deriv(x[k], f);
        }
      }
      std::vector<double> neg_g(m);
      for (std::size_t j = 0; j < m; ++j) neg_g[j] = -g[j];
      std::vector<double> step;
      try {
        step = solve_linear(jac, neg_g);
      } catch (const SingularError&) {
        throw SolverError("clique solve: singular Newton Jacobian", residual);
      }
      double t = 1.0;
      double r_trial = 0.0;
      for (;;) {
        for (std::size_t j = 0; j < m; ++j) trial[j] = x[j] + t * step[j];
        r_trial = eval_g(trial, g_trial);
        if ((std::isfinite(r_trial) && r_trial < residual) || t < 1.0 / 1024.0) break;
        t *= 0.5;
      }
      if (!detail::all_finite(trial)) {
        throw DivergenceError("clique solve: non-finite Newton iterate");
      }
      x.swap(trial);
      g.swap(g_trial);
      residual = r_trial;
      cache.solver_iterations += 1;
    }
    if (!(residual <= opts.tol)) {
      throw SolverError("clique solve did not converge (residual " + std::to_string(residual) +
                            ")",
                        residual);
    }
  }

  cache.real = Matrix(1, m, x);
  cache.residual = residual;
  cache.activated_real = activate(cache.real, f);
  return cache;
}

inline ForwardResult forward_network(const Network& net, const Matrix& x,
                                     const SolverOptions& opts = {}) {
  if (x.rows() != 1 || x.cols() != net.input_width) {
    throw ShapeError("forward: input is " + x.shape_string() + ", network expects 1x" +
                     std::to_string(net.input_width));
  }
  ForwardResult result;
  result.caches.reserve(net.levels.size());
  Matrix prev_aug = augment_with_one(x);
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    const Level& lv = net.levels[i];
    Matrix meta = compute_meta(prev_aug, lv.inter);
    LevelCache cache;
    if (lv.clique) {
      try {
        cache = solve_clique(meta, *lv.clique, lv.spec.activation, opts);
      } catch (const SolverError& e) {
        throw SolverError("level " + std::to_string(i) + ": " + e.what(), e.residual);
      } catch (const DivergenceError& e) {
        throw DivergenceError("level " + std::to_string(i) + ": " + e.what());
      }
    } else {
      cache.meta = meta;
      cache.real = std::move(meta);
      cache.activated_real = activate(cache.real, lv.spec.activation);
    }
    prev_aug = augment_with_one(cache.activated_real);
    result.caches.push_back(std::move(cache));
  }
  result.output = result.caches.back().real;
  return result;
}

}  // namespace ynn
