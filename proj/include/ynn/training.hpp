#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ynn/backward.hpp"
#include "ynn/data.hpp"
#include "ynn/error.hpp"
#include "ynn/forward.hpp"
#include "ynn/model.hpp"
#include "ynn/rng.hpp"
#include "ynn/serialize.hpp"

namespace ynn {

enum class LossKind { SoftmaxCrossEntropy, MeanSquaredError };

inline std::string_view to_string(LossKind k) {
  return k == LossKind::SoftmaxCrossEntropy ? "softmax_cross_entropy" : "mean_squared_error";
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "softmax_cross_entropy") return LossKind::SoftmaxCrossEntropy;
  if (s == "mean_squared_error") return LossKind::MeanSquaredError;
  throw ValidationError("unknown loss '" + std::string(s) + "'");
}

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double l1 = 0.0;
  double l2 = 0.0;
  GradMode grad_mode = GradMode::ExactAdjoint;
  std::uint64_t seed = 0;
  SolverOptions solver{};
  std::optional<double> projection_rho_max = 0.9;  // nullopt disables the projection
  LossKind loss_kind = LossKind::SoftmaxCrossEntropy;
  bool train_cliques = true;
  bool freeze_input_bias = false;  // holds the input level's bias row at zero
  double active_threshold = 1e-3;  // |w| above this counts as an active clique edge

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ValidationError("learning_rate must be finite and >= 0");
    }
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw ValidationError("l1 and l2 must be >= 0");
    if (!(solver.tol > 0.0)) throw ValidationError("solver tolerance must be > 0");
    if (solver.max_iter < 1) throw ValidationError("solver max_iter must be >= 1");
    if (projection_rho_max && !(*projection_rho_max > 0.0 && *projection_rho_max <= 1.0)) {
      throw ValidationError("projection_rho_max must lie in (0, 1]");
    }
    if (!(active_threshold >= 0.0)) throw ValidationError("active_threshold must be >= 0");
  }
};

struct LossResult {
  double loss = 0.0;
  Matrix d_output;
};

// SoftmaxCrossEntropy: -log softmax(o)[label], gradient softmax(o) - onehot.
// MeanSquaredError:    mean_c (o_c - y_c)^2 against onehot, gradient 2 (o - y) / C.
inline LossResult loss_and_output_grad(const Matrix& output, std::size_t label, LossKind kind) {
  const std::size_t classes = output.size();
  if (label >= classes) {
    throw ValidationError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(classes) + " outputs");
  }
  LossResult r{0.0, Matrix(1, classes)};
  if (kind == LossKind::SoftmaxCrossEntropy) {
    if (classes < 2) throw ValidationError("softmax cross-entropy needs at least 2 classes");
    double peak = output[0];
    for (double v : output.values()) peak = std::max(peak, v);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(output[c] - peak);
    const double log_total = std::log(total);
    r.loss = -(output[label] - peak - log_total);
    for (std::size_t c = 0; c < classes; ++c) {
      r.d_output[c] = std::exp(output[c] - peak - log_total) - (c == label ? 1.0 : 0.0);
    }
  } else {
    const double n = static_cast<double>(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      const double diff = output[c] - (c == label ? 1.0 : 0.0);
      r.loss += diff * diff / n;
      r.d_output[c] = 2.0 * diff / n;
    }
  }
  return r;
}

struct Regularization {
  double penalty = 0.0;
  GradientSet grad;  // only clique entries are nonzero
};

// l1 * sum|w| + l2 * sum w^2 over every clique weight (bias row included).
// The L1 subgradient uses sign(0) = 0.
inline Regularization regularization_penalty(const Network& net, double l1, double l2) {
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw ValidationError("regularization: l1, l2 must be >= 0");
  Regularization reg{0.0, GradientSet::zeros_like(net)};
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    if (!net.levels[i].clique) continue;
    const Matrix& w = net.levels[i].clique->matrix;
    Matrix& g = *reg.grad.d_clique[i];
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      const double v = w[idx];
      reg.penalty += l1 * std::abs(v) + l2 * v * v;
      const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      g[idx] = l1 * sign + 2.0 * l2 * v;
    }
  }
  return reg;
}

// Rescales each clique column whose off-diagonal absolute sum exceeds rho_max.
inline Network contraction_projection(Network net, double rho_max) {
  if (!(rho_max > 0.0 && rho_max <= 1.0)) {
    throw ValidationError("contraction_projection: rho_max must lie in (0, 1]");
  }
  for (Level& lv : net.levels) {
    if (!lv.clique) continue;
    CliqueWeights& cw = *lv.clique;
    const std::size_t m = cw.nodes();
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (k != j) s += std::abs(cw.edge(k, j));
      }
      if (s > rho_max) {
        const double factor = rho_max / s;
        for (std::size_t k = 0; k < m; ++k) {
          if (k != j) cw.edge(k, j) *= factor;
        }
      }
    }
  }
  return net;
}

inline std::size_t count_active_edges(const Network& net, double threshold) {
  std::size_t count = 0;
  for (const Level& lv : net.levels) {
    if (!lv.clique) continue;
    const std::size_t m = lv.clique->nodes();
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < m; ++j) {
        if (k != j && std::abs(lv.clique->edge(k, j)) > threshold) ++count;
      }
    }
  }
  return count;
}

struct StepResult {
  Network net;
  double data_loss = 0.0;  // mean over the batch
  double penalty = 0.0;
};

namespace detail {

// Loss and gradient of one labelled sample.
inline std::pair<double, GradientSet> sample_gradient(const Network& net, const Matrix& x,
                                                      std::size_t label, const TrainConfig& cfg) {
  const ForwardResult fwd = forward_network(net, x, cfg.solver);
  LossResult lr = loss_and_output_grad(fwd.output, label, cfg.loss_kind);
  BackwardOptions opts;
  opts.mode = cfg.grad_mode;
  return {lr.loss, backward_network(net, fwd.caches, x, lr.d_output, opts)};
}

inline void apply_update(Network& net, const GradientSet& g, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    Level& lv = net.levels[i];
    axpy(lv.inter.matrix, -cfg.learning_rate, g.d_inter[i]);
    if (lv.clique && cfg.train_cliques) axpy(lv.clique->matrix, -cfg.learning_rate, *g.d_clique[i]);
  }
  if (cfg.freeze_input_bias) {
    Matrix& w0 = net.levels.front().inter.matrix;
    for (std::size_t j = 0; j < w0.cols(); ++j) w0(0, j) = 0.0;
  }
  if (cfg.projection_rho_max && cfg.train_cliques) {
    net = contraction_projection(std::move(net), *cfg.projection_rho_max);
  }
}

}  // namespace detail

// One descent step on the mean batch loss plus the clique penalty. Per-sample
// gradients are accumulated in ascending batch order.
inline StepResult sgd_step(Network net, const Dataset& data, const std::vector<std::size_t>& batch,
                           const TrainConfig& cfg) {
  if (batch.empty()) throw ValidationError("sgd_step: empty batch");
  GradientSet total = GradientSet::zeros_like(net);
  double loss_sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    try {
      auto [loss, g] = detail::sample_gradient(net, data.sample(batch[s]), data.labels[batch[s]], cfg);
      loss_sum += loss;
      total.add_scaled(g, 1.0);
    } catch (const Error& e) {
      throw Error("sample " + std::to_string(batch[s]) + ": " + e.what());
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  GradientSet step = GradientSet::zeros_like(net);
  step.add_scaled(total, inv_b);
  double penalty = 0.0;
  if (cfg.l1 > 0.0 || cfg.l2 > 0.0) {
    Regularization reg = regularization_penalty(net, cfg.l1, cfg.l2);
    penalty = reg.penalty;
    step.add_scaled(reg.grad, 1.0);
  }
  detail::apply_update(net, step, cfg);
  return {std::move(net), loss_sum * inv_b, penalty};
}

// Index of the largest output; ties go to the lowest index.
inline std::size_t predict(const Network& net, const Matrix& x, const SolverOptions& solver = {}) {
  const Matrix out = forward_network(net, x, solver).output;
  std::size_t best = 0;
  for (std::size_t c = 1; c < out.size(); ++c) {
    if (out[c] > out[best]) best = c;
  }
  return best;
}

inline double evaluate(const Network& net, const Dataset& data, const SolverOptions& solver = {}) {
  if (data.size() == 0) throw ValidationError("evaluate: empty dataset");
  if (net.output_width() != data.class_count) {
    throw ShapeError("evaluate: network has " + std::to_string(net.output_width()) +
                     " outputs but the dataset has " + std::to_string(data.class_count) + " classes");
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(net, data.sample(i), solver) != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  std::size_t active_edges = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainResult {
  Network best;  // snapshot with the lowest test error (earliest on ties)
  Network last;
  std::size_t best_epoch = 0;
  double best_test_error = 1.0;
  std::vector<EpochMetrics> history;
};

inline TrainResult train(Network net, const Dataset& train_set, const Dataset& test_set,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0 || test_set.size() == 0) {
    throw ValidationError("train: train and test splits must be nonempty");
  }
  if (cfg.freeze_input_bias) {
    Matrix& w0 = net.levels.front().inter.matrix;
    for (std::size_t j = 0; j < w0.cols(); ++j) w0(0, j) = 0.0;
  }
  SeededRng order_rng = SeededRng(cfg.seed).split(0x5EED);
  TrainResult result;
  result.best = net;
  result.best_test_error = std::numeric_limits<double>::infinity();
  const std::size_t n = train_set.size();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = order_rng.permutation(n);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      StepResult step = sgd_step(std::move(net), train_set, batch, cfg);
      net = std::move(step.net);
      loss_sum += step.data_loss * static_cast<double>(batch.size());
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_error = evaluate(net, train_set, cfg.solver);
    m.test_error = evaluate(net, test_set, cfg.solver);
    m.active_edges = count_active_edges(net, cfg.active_threshold);
    result.history.push_back(m);
    if (m.test_error < result.best_test_error) {
      result.best_test_error = m.test_error;
      result.best_epoch = epoch;
      result.best = net;
    }
  }
  result.last = std::move(net);
  return result;
}

inline std::string metrics_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,train_err,test_err,active_edges\n";
  for (const EpochMetrics& m : history) {
    out << m.epoch << ',' << format_double(m.train_loss, 9) << ',' << format_double(m.train_error, 9)
        << ',' << format_double(m.test_error, 9) << ',' << m.active_edges << '\n';
  }
  return out.str();
}

}  // namespace ynn
