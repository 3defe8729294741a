#pragma once

// Neural-module construction: prune weak clique edges, cut the remaining
// graph into modules no larger than a size bound, and solve each module's
// equation system on its own.
//
// Cutting uses the Stoer-Wagner global minimum cut, applied recursively to
// any connected component that is still too large.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ynn/error.hpp"
#include "ynn/forward.hpp"
#include "ynn/model.hpp"
#include "ynn/numerics.hpp"

namespace ynn {

struct WeightedGraph {
  Matrix weights;  // symmetric, non-negative, zero diagonal

  WeightedGraph() = default;
  explicit WeightedGraph(std::size_t n) : weights(n, n) {}
  explicit WeightedGraph(Matrix w) : weights(std::move(w)) {
    if (weights.rows() != weights.cols()) throw ShapeError("graph weights must be square");
  }

  std::size_t size() const { return weights.rows(); }
  double weight(std::size_t a, std::size_t b) const { return weights(a, b); }
  void set_edge(std::size_t a, std::size_t b, double w) {
    weights(a, b) = w;
    weights(b, a) = w;
  }

  WeightedGraph induced(const std::vector<std::size_t>& nodes) const {
    WeightedGraph g(nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = 0; b < nodes.size(); ++b) g.weights(a, b) = weights(nodes[a], nodes[b]);
    }
    return g;
  }
};

// Off-diagonal node-block entries with |w| < tau become zero.
inline CliqueWeights sparsify_clique(CliqueWeights cw, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("sparsify_clique: tau must be >= 0");
  const std::size_t m = cw.nodes();
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      if (k != j && std::abs(cw.edge(k, j)) < tau) cw.edge(k, j) = 0.0;
    }
  }
  return cw;
}

// s_kj = |w_kj| + |w_jk|
inline WeightedGraph symmetrize(const CliqueWeights& cw) {
  const std::size_t m = cw.nodes();
  WeightedGraph g(m);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = k + 1; j < m; ++j) {
      g.set_edge(k, j, std::abs(cw.edge(k, j)) + std::abs(cw.edge(j, k)));
    }
  }
  return g;
}

struct Cut {
  std::vector<std::size_t> side;  // sorted; always contains node 0
  double weight = 0.0;
};

inline double cut_weight(const WeightedGraph& g, const std::vector<bool>& in_side) {
  double w = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      if (in_side[a] != in_side[b]) w += g.weight(a, b);
    }
  }
  return w;
}

// Stoer-Wagner. Ties in the maximum-adjacency order go to the lowest index and
// the first minimum found is kept.
inline Cut min_cut(const WeightedGraph& g) {
  const std::size_t n = g.size();
  if (n < 2) throw ValidationError("min_cut: graph needs at least 2 nodes");

  Matrix w = g.weights;
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> alive(n, true);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_side;

  for (std::size_t phase = 0; phase + 1 < n; ++phase) {
    std::vector<double> attach(n, 0.0);
    std::vector<bool> added(n, false);
    std::size_t prev = n, last = n;
    const std::size_t remaining = n - phase;
    for (std::size_t step = 0; step < remaining; ++step) {
      std::size_t pick = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (alive[v] && !added[v] && (pick == n || attach[v] > attach[pick])) pick = v;
      }
      added[pick] = true;
      prev = last;
      last = pick;
      for (std::size_t v = 0; v < n; ++v) {
        if (alive[v] && !added[v]) attach[v] += w(pick, v);
      }
    }
    // Cut of the phase separates `last` from everything else.
    if (attach[last] < best) {
      best = attach[last];
      best_side = members[last];
    }
    for (std::size_t v = 0; v < n; ++v) {
      w(prev, v) += w(last, v);
      w(v, prev) = w(prev, v);
    }
    w(prev, prev) = 0.0;
    members[prev].insert(members[prev].end(), members[last].begin(), members[last].end());
    alive[last] = false;
  }

  std::vector<bool> in_side(n, false);
  for (std::size_t v : best_side) in_side[v] = true;
  if (!in_side[0]) in_side.flip();
  Cut cut;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_side[v]) cut.side.push_back(v);
  }
  cut.weight = cut_weight(g, in_side);
  return cut;
}

// Connected components over edges with positive weight, each sorted, ordered
// by smallest member.
inline std::vector<std::vector<std::size_t>> connected_components(const WeightedGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp{s}, stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < n; ++u) {
        if (!seen[u] && g.weight(v, u) > 0.0) {
          seen[u] = true;
          comp.push_back(u);
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

struct ModulePartition {
  std::vector<std::vector<std::size_t>> modules;  // sorted members, ordered by first member
  std::size_t max_size = 0;

  // Disjoint, nonempty, covers 0..m-1, every module within max_size.
  bool is_valid_for(std::size_t m) const {
    std::vector<int> hits(m, 0);
    for (const auto& mod : modules) {
      if (mod.empty() || mod.size() > max_size) return false;
      for (std::size_t v : mod) {
        if (v >= m || hits[v]++ > 0) return false;
      }
    }
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
  }
};

inline ModulePartition build_modules(const CliqueWeights& cw, double tau, std::size_t ns_max) {
  if (ns_max < 1) throw ValidationError("build_modules: ns_max must be >= 1");
  const WeightedGraph graph = symmetrize(sparsify_clique(cw, tau));

  ModulePartition part;
  part.max_size = ns_max;
  std::vector<std::vector<std::size_t>> pending = connected_components(graph);
  std::reverse(pending.begin(), pending.end());
  while (!pending.empty()) {
    std::vector<std::size_t> nodes = std::move(pending.back());
    pending.pop_back();
    if (nodes.size() <= ns_max) {
      part.modules.push_back(std::move(nodes));
      continue;
    }
    const WeightedGraph sub = graph.induced(nodes);
    const Cut cut = min_cut(sub);
    std::vector<bool> in_side(nodes.size(), false);
    for (std::size_t v : cut.side) in_side[v] = true;
    std::vector<std::size_t> a, b;
    for (std::size_t v = 0; v < nodes.size(); ++v) (in_side[v] ? a : b).push_back(nodes[v]);
    if (a.size() < b.size()) std::swap(a, b);
    // Larger side first; each side may have fallen apart into components.
    for (const auto* side : {&b, &a}) {
      auto comps = connected_components(graph.induced(*side));
      for (auto it = comps.rbegin(); it != comps.rend(); ++it) {
        std::vector<std::size_t> mapped;
        for (std::size_t v : *it) mapped.push_back((*side)[v]);
        pending.push_back(std::move(mapped));
      }
    }
  }
  std::sort(part.modules.begin(), part.modules.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return part;
}

// The clique restricted to `nodes` (cross-module couplings dropped).
inline CliqueWeights restrict_clique(const CliqueWeights& cw, const std::vector<std::size_t>& nodes) {
  CliqueWeights sub(nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    sub.bias(a) = cw.bias(nodes[a]);
    for (std::size_t b = 0; b < nodes.size(); ++b) sub.edge(b, a) = cw.edge(nodes[b], nodes[a]);
  }
  return sub;
}

inline LevelCache block_solve(const Matrix& meta, const CliqueWeights& cw,
                              const ModulePartition& partition, ActivationKind f,
                              const SolverOptions& opts = {}) {
  const std::size_t m = cw.nodes();
  if (meta.size() != m) throw ShapeError("block_solve: meta width mismatch");
  if (!partition.is_valid_for(m)) throw ValidationError("block_solve: partition does not cover the clique");
  LevelCache cache;
  cache.meta = meta;
  cache.real = Matrix(1, m);
  for (std::size_t idx = 0; idx < partition.modules.size(); ++idx) {
    const auto& nodes = partition.modules[idx];
    Matrix sub_meta(1, nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) sub_meta[a] = meta[nodes[a]];
    LevelCache sub;
    try {
      sub = solve_clique(sub_meta, restrict_clique(cw, nodes), f, opts);
    } catch (const SolverError& e) {
      throw SolverError("module " + std::to_string(idx) + ": " + e.what(), e.residual);
    } catch (const DivergenceError& e) {
      throw DivergenceError("module " + std::to_string(idx) + ": " + e.what());
    }
    for (std::size_t a = 0; a < nodes.size(); ++a) cache.real[nodes[a]] = sub.real[a];
    cache.solver_iterations = std::max(cache.solver_iterations, sub.solver_iterations);
    cache.residual = std::max(cache.residual, sub.residual);
    cache.used_newton = cache.used_newton || sub.used_newton;
  }
  cache.activated_real = activate(cache.real, f);
  return cache;
}

// Forward pass where every clique level listed in `partitions` is pruned at
// `tau` and solved module by module. Other levels behave as in forward_network.
inline Matrix forward_partitioned(const Network& net, const Matrix& x,
                                  const std::vector<std::optional<ModulePartition>>& partitions,
                                  double tau, const SolverOptions& opts = {}) {
  if (partitions.size() != net.levels.size()) {
    throw ShapeError("forward_partitioned: one partition slot per level required");
  }
  if (x.rows() != 1 || x.cols() != net.input_width) throw ShapeError("forward_partitioned: input width mismatch");
  Matrix prev_aug = augment_with_one(x);
  Matrix real;
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    const Level& lv = net.levels[i];
    const Matrix meta = compute_meta(prev_aug, lv.inter);
    if (lv.clique && partitions[i]) {
      real = block_solve(meta, sparsify_clique(*lv.clique, tau), *partitions[i], lv.spec.activation, opts).real;
    } else if (lv.clique) {
      real = solve_clique(meta, *lv.clique, lv.spec.activation, opts).real;
    } else {
      real = meta;
    }
    prev_aug = augment_with_one(activate(real, lv.spec.activation));
  }
  return real;
}

// One module per line as space-separated 0-based node indices; '#' lines are comments.
inline std::string format_partition(const ModulePartition& p, std::size_t level, std::size_t width) {
  std::ostringstream out;
  out << "# level " << level << " nodes " << width << " modules " << p.modules.size()
      << " max_size " << p.max_size << '\n';
  for (const auto& mod : p.modules) {
    for (std::size_t i = 0; i < mod.size(); ++i) out << (i ? " " : "") << mod[i];
    out << '\n';
  }
  return out.str();
}

inline ModulePartition parse_partition(const std::string& text, std::size_t max_size) {
  ModulePartition p;
  p.max_size = max_size;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::size_t> mod;
    std::size_t v = 0;
    while (ls >> v) mod.push_back(v);
    if (!ls.eof()) throw ParseError("partition: bad module line '" + line + "'");
    p.modules.push_back(std::move(mod));
  }
  return p;
}

}  // namespace ynn
