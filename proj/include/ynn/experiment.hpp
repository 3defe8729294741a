#pragma once

// Experiment commands behind the CLI: train, eval, gradcheck, partition,
// sweep. Each command writes its files under the configured output
// directory and returns a report; identical configs give identical files.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ynn/backward.hpp"
#include "ynn/config.hpp"
#include "ynn/data.hpp"
#include "ynn/forward.hpp"
#include "ynn/model.hpp"
#include "ynn/partition.hpp"
#include "ynn/pixmap.hpp"
#include "ynn/random_network.hpp"
#include "ynn/serialize.hpp"
#include "ynn/training.hpp"

namespace ynn {

// ---------------------------------------------------------------------------
// Shared helpers

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Table cell such as "0.1835±0.0027".
inline std::string format_cell(double mean_value, double std_value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << mean_value << "±" << std_value;
  return out.str();
}

// Runs fn(0..count-1) on up to `jobs` threads. Results must be written to
// per-index slots; the first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, count); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

struct PreparedData {
  Split split;
  std::optional<FeatureStats> stats;
};

// Loads the manifest's dataset, splits it and normalizes both sides with
// training-set statistics.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.dataset.source == "synthetic") {
    ds = make_blobs(cfg.dataset.synthetic);
  } else {
    CsvOptions opts;
    opts.has_header = cfg.dataset.has_header;
    opts.feature_columns = cfg.dataset.feature_columns;
    opts.encoding = cfg.dataset.encoding;
    if (cfg.dataset.label_column) {
      opts.label_column = *cfg.dataset.label_column;
    } else {
      // Default label column: the last one.
      std::ifstream probe(cfg.dataset_path());
      std::string first;
      if (!probe || !std::getline(probe, first)) throw IoError("cannot read dataset '" + cfg.dataset_path() + "'");
      opts.label_column = split_csv_record(first).size() - 1;
    }
    ds = load_csv(cfg.dataset_path(), opts);
  }
  PreparedData out{split(ds, cfg.dataset.split), std::nullopt};
  if (cfg.dataset.normalize && out.split.train.size() >= 2) {
    Normalized norm = normalize(out.split.train);
    out.split.test = apply_normalization(std::move(out.split.test), norm.stats);
    out.split.train = std::move(norm.data);
    out.stats = std::move(norm.stats);
  }
  return out;
}

inline std::vector<LevelSpec> experiment_levels(const ExperimentConfig& cfg, std::size_t width,
                                                std::size_t classes, bool cliques) {
  std::vector<std::size_t> hidden(cfg.network.hidden_levels, width);
  return classifier_levels(hidden, classes, cfg.network.activation, cliques, cliques && cfg.network.output_clique);
}

inline TrainConfig variant_train_config(const ExperimentConfig& cfg, Variant v, std::uint64_t seed) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.l1 = v == Variant::YNN_L1 ? cfg.train.l1 : 0.0;
  tc.l2 = v == Variant::YNN_L2 ? cfg.train.l2 : 0.0;
  return tc;
}

struct RunSpec {
  Variant variant = Variant::YNN;
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  TrainConfig train;
};

struct RunOutcome {
  RunSpec spec;
  double best_test_error = 0.0;
  std::size_t best_epoch = 0;
  double final_test_error = 0.0;
  std::size_t active_edges = 0;  // of the returned (best) network
  std::string metrics_file;
  std::string model_file;
  Network best;
};

inline std::string run_tag(const RunSpec& r) {
  return variant_key(r.variant) + "_n" + std::to_string(r.nodes) + "_s" + std::to_string(r.seed);
}

inline RunOutcome execute_run(const ExperimentConfig& cfg, const PreparedData& data, const RunSpec& run,
                              const std::string& tag) {
  const std::size_t classes = data.split.train.class_count;
  const bool cliques = run.variant != Variant::NN;
  Network net = init_network(experiment_levels(cfg, run.nodes, classes, cliques), data.split.train.feature_count(),
                             SeededRng(run.seed), cfg.network.init_scale);
  TrainResult tr = train(std::move(net), data.split.train, data.split.test, run.train);
  const std::filesystem::path dir(cfg.output_dir);
  RunOutcome out;
  out.spec = run;
  out.best_test_error = tr.best_test_error;
  out.best_epoch = tr.best_epoch;
  out.final_test_error = tr.history.back().test_error;
  out.active_edges = count_active_edges(tr.best, run.train.active_threshold);
  out.metrics_file = (dir / (cfg.outputs.metrics + "_" + tag + ".csv")).string();
  out.model_file = (dir / (cfg.outputs.model + "_" + tag + ".json")).string();
  write_text_file(out.metrics_file, metrics_csv(tr.history));
  save_network(tr.best, out.model_file);
  out.best = std::move(tr.best);
  return out;
}

inline std::string runs_csv(const std::vector<RunOutcome>& runs) {
  std::ostringstream out;
  out << "variant,nodes,seed,l1,l2,best_epoch,best_test_err,final_test_err,active_edges\n";
  for (const auto& r : runs) {
    out << variant_key(r.spec.variant) << ',' << r.spec.nodes << ',' << r.spec.seed << ','
        << format_double(r.spec.train.l1, 9) << ',' << format_double(r.spec.train.l2, 9) << ',' << r.best_epoch
        << ',' << format_double(r.best_test_error, 9) << ',' << format_double(r.final_test_error, 9) << ','
        << r.active_edges << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// train

struct SummaryCell {
  Variant variant;
  std::size_t nodes;
  std::vector<double> test_errors;  // one per seed, in seed order
};

struct TrainReport {
  std::vector<RunOutcome> runs;
  std::vector<SummaryCell> cells;
  std::string summary_csv_file;
  std::string summary_text_file;

  const SummaryCell& cell(Variant v, std::size_t nodes) const {
    for (const auto& c : cells) {
      if (c.variant == v && c.nodes == nodes) return c;
    }
    throw ValidationError("no summary cell for " + variant_key(v) + " at " + std::to_string(nodes) + " nodes");
  }
};

inline std::string summary_csv(const ExperimentConfig& cfg, const std::vector<SummaryCell>& cells) {
  std::ostringstream out;
  out << "model";
  for (std::size_t n : cfg.node_counts) out << ',' << n << " Nodes";
  out << '\n';
  for (Variant v : cfg.variants) {
    out << variant_label(v);
    for (std::size_t n : cfg.node_counts) {
      for (const auto& c : cells) {
        if (c.variant == v && c.nodes == n) out << ',' << format_cell(mean(c.test_errors), sample_std(c.test_errors));
      }
    }
    out << '\n';
  }
  return out.str();
}

inline std::string summary_text(const ExperimentConfig& cfg, const std::vector<SummaryCell>& cells) {
  std::ostringstream out;
  out << "Test error (mean" << "±" << "std over " << cfg.seeds.size() << " seed(s))\n";
  out << std::left << std::setw(10) << "Models";
  for (std::size_t n : cfg.node_counts) out << std::setw(18) << (std::to_string(n) + " Nodes");
  out << '\n';
  for (Variant v : cfg.variants) {
    out << std::setw(10) << variant_label(v);
    for (std::size_t n : cfg.node_counts) {
      for (const auto& c : cells) {
        // setw counts bytes; the plus-minus sign is two bytes in UTF-8.
        if (c.variant == v && c.nodes == n) out << std::setw(19) << format_cell(mean(c.test_errors), sample_std(c.test_errors));
      }
    }
    out << '\n';
  }
  return out.str();
}

inline TrainReport cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  const PreparedData data = prepare_data(cfg);

  std::vector<RunSpec> specs;
  for (std::size_t nodes : cfg.node_counts) {
    for (Variant v : cfg.variants) {
      for (std::uint64_t seed : cfg.seeds) specs.push_back({v, nodes, seed, variant_train_config(cfg, v, seed)});
    }
  }
  TrainReport report;
  report.runs.resize(specs.size());
  parallel_for(specs.size(), cfg.jobs,
               [&](std::size_t i) { report.runs[i] = execute_run(cfg, data, specs[i], run_tag(specs[i])); });

  for (std::size_t nodes : cfg.node_counts) {
    for (Variant v : cfg.variants) {
      SummaryCell cell{v, nodes, {}};
      for (const auto& r : report.runs) {
        if (r.spec.variant == v && r.spec.nodes == nodes) cell.test_errors.push_back(r.best_test_error);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  const std::filesystem::path dir(cfg.output_dir);
  report.summary_csv_file = (dir / (cfg.outputs.summary + ".csv")).string();
  report.summary_text_file = (dir / (cfg.outputs.summary + ".txt")).string();
  write_text_file(report.summary_csv_file, summary_csv(cfg, report.cells));
  write_text_file(report.summary_text_file, summary_text(cfg, report.cells));
  write_text_file((dir / (cfg.outputs.runs + ".csv")).string(), runs_csv(report.runs));
  return report;
}

// ---------------------------------------------------------------------------
// eval

struct EvalReport {
  double train_error = 0.0;
  double test_error = 0.0;
};

inline EvalReport cmd_eval(const ExperimentConfig& cfg, const std::string& model_path) {
  const Network net = load_network(model_path);
  const PreparedData data = prepare_data(cfg);
  if (net.input_width != data.split.train.feature_count()) {
    throw ValidationError("model expects " + std::to_string(net.input_width) + " features, dataset has " +
                          std::to_string(data.split.train.feature_count()));
  }
  return {evaluate(net, data.split.train, cfg.train.solver), evaluate(net, data.split.test, cfg.train.solver)};
}

// ---------------------------------------------------------------------------
// gradcheck

inline bool gradients_close(double a, double b, double rel_tol, double abs_tol) {
  const double diff = std::abs(a - b);
  return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

struct GradientComparison {
  std::size_t coordinates = 0;
  std::size_t failures = 0;
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;  // over coordinates whose magnitude exceeds abs_tol
};

inline GradientComparison compare_gradients(const GradientSet& a, const GradientSet& b, double rel_tol,
                                            double abs_tol) {
  GradientComparison cmp;
  auto visit = [&](const Matrix& x, const Matrix& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      ++cmp.coordinates;
      const double diff = std::abs(x[i] - y[i]);
      const double scale = std::max(std::abs(x[i]), std::abs(y[i]));
      cmp.max_abs_diff = std::max(cmp.max_abs_diff, diff);
      if (scale > abs_tol) cmp.max_rel_diff = std::max(cmp.max_rel_diff, diff / scale);
      if (!gradients_close(x[i], y[i], rel_tol, abs_tol)) ++cmp.failures;
    }
  };
  for (std::size_t i = 0; i < a.d_inter.size(); ++i) {
    visit(a.d_inter[i], b.d_inter[i]);
    if (a.d_clique[i]) visit(*a.d_clique[i], *b.d_clique[i]);
  }
  return cmp;
}

// ||a - b|| / ||b|| over all coordinates.
inline double relative_divergence(const GradientSet& a, const GradientSet& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.d_inter.size(); ++i) {
    for (std::size_t k = 0; k < a.d_inter[i].size(); ++k) {
      num += std::pow(a.d_inter[i][k] - b.d_inter[i][k], 2);
      den += std::pow(b.d_inter[i][k], 2);
    }
    if (!a.d_clique[i]) continue;
    for (std::size_t k = 0; k < a.d_clique[i]->size(); ++k) {
      num += std::pow((*a.d_clique[i])[k] - (*b.d_clique[i])[k], 2);
      den += std::pow((*b.d_clique[i])[k], 2);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct GradcheckInstance {
  Network net;
  Matrix x;
  std::size_t label = 0;
};

inline GradcheckInstance random_gradcheck_instance(SeededRng& rng, const RandomNetSpec& spec) {
  GradcheckInstance inst;
  inst.net = random_network(rng, spec);
  inst.x = uniform_matrix(rng, 1, inst.net.input_width, -1.0, 1.0);
  inst.label = static_cast<std::size_t>(rng.below(inst.net.output_width()));
  return inst;
}

struct GradcheckReport {
  std::size_t networks = 0;
  std::size_t failed_networks = 0;
  GradientComparison exact_vs_fd;  // aggregated
  std::size_t regime_instances = 0;
  double regime_max_abs_diff = 0.0;
  bool regime_ok = true;
  std::vector<double> paper_divergence;  // per network, relative norm vs ExactAdjoint
  bool passed() const { return failed_networks == 0 && regime_ok; }

  std::string text() const {
    std::ostringstream out;
    out << "gradcheck: " << networks << " networks, " << exact_vs_fd.coordinates << " coordinates\n";
    out << "  exact vs finite differences: " << (failed_networks == 0 ? "PASS" : "FAIL") << " (" << failed_networks
        << " failing networks, " << exact_vs_fd.failures << " failing coordinates, max abs diff "
        << format_double(exact_vs_fd.max_abs_diff, 3) << ", max rel diff " << format_double(exact_vs_fd.max_rel_diff, 3)
        << ")\n";
    out << "  paper mode vs exact, decoupled identity regime (" << regime_instances
        << " instances): " << (regime_ok ? "PASS" : "FAIL") << " (max abs diff "
        << format_double(regime_max_abs_diff, 3) << ")\n";
    if (!paper_divergence.empty()) {
      std::vector<double> sorted = paper_divergence;
      std::sort(sorted.begin(), sorted.end());
      out << "  paper mode vs exact, general networks (reported only): relative divergence median "
          << format_double(median(sorted), 4) << ", max " << format_double(sorted.back(), 4) << '\n';
    }
    return out.str();
  }
};

inline GradcheckReport cmd_gradcheck(const ExperimentConfig& cfg) {
  const auto& gc = cfg.gradcheck;
  GradcheckReport report;
  SeededRng rng = SeededRng(gc.seed).split(0x6C);
  RandomNetSpec spec;
  spec.max_input = gc.max_width;
  spec.max_width = gc.max_width;
  spec.rho_max = gc.rho_max;
  const SolverOptions tight{1e-12, 200};
  BackwardOptions exact_opts;
  exact_opts.corrupt_clique_gradient = gc.inject_fault;
  BackwardOptions paper_opts;
  paper_opts.mode = GradMode::PaperEq6;

  for (std::size_t n = 0; n < gc.networks; ++n) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, spec);
    auto loss = [&](const Matrix& out) { return loss_and_output_grad(out, inst.label, LossKind::SoftmaxCrossEntropy).loss; };
    const ForwardResult fwd = forward_network(inst.net, inst.x, tight);
    const Matrix d_out = loss_and_output_grad(fwd.output, inst.label, LossKind::SoftmaxCrossEntropy).d_output;
    const GradientSet exact = backward_network(inst.net, fwd.caches, inst.x, d_out, exact_opts);
    const GradientSet fd = finite_difference_gradient(inst.net, inst.x, loss, gc.h, tight);
    const GradientComparison cmp = compare_gradients(exact, fd, gc.rel_tol, gc.abs_tol);
    report.exact_vs_fd.coordinates += cmp.coordinates;
    report.exact_vs_fd.failures += cmp.failures;
    report.exact_vs_fd.max_abs_diff = std::max(report.exact_vs_fd.max_abs_diff, cmp.max_abs_diff);
    report.exact_vs_fd.max_rel_diff = std::max(report.exact_vs_fd.max_rel_diff, cmp.max_rel_diff);
    if (cmp.failures > 0) ++report.failed_networks;
    const GradientSet paper = backward_network(inst.net, fwd.caches, inst.x, d_out, paper_opts);
    report.paper_divergence.push_back(relative_divergence(paper, exact));
    ++report.networks;
  }

  RandomNetSpec regime = spec;
  regime.zero_off_diagonal = true;
  regime.random_activation = false;
  regime.activation = ActivationKind::Identity;
  for (std::size_t n = 0; n < gc.regime_instances; ++n) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, regime);
    const ForwardResult fwd = forward_network(inst.net, inst.x, tight);
    const Matrix d_out = loss_and_output_grad(fwd.output, inst.label, LossKind::SoftmaxCrossEntropy).d_output;
    const GradientSet exact = backward_network(inst.net, fwd.caches, inst.x, d_out, exact_opts);
    const GradientSet paper = backward_network(inst.net, fwd.caches, inst.x, d_out, paper_opts);
    const GradientComparison cmp = compare_gradients(paper, exact, 0.0, gc.regime_tol);
    report.regime_max_abs_diff = std::max(report.regime_max_abs_diff, cmp.max_abs_diff);
    if (cmp.failures > 0) report.regime_ok = false;
    ++report.regime_instances;
  }
  return report;
}

// ---------------------------------------------------------------------------
// partition

struct LevelPartitionReport {
  std::size_t level = 0;
  ModulePartition partition;
  std::string file;
};

struct PartitionReport {
  std::vector<LevelPartitionReport> levels;
  double max_deviation = 0.0;  // block-wise vs full forward, max abs over outputs
  std::size_t batch = 0;

  std::string text() const {
    std::ostringstream out;
    for (const auto& l : levels) {
      out << "level " << l.level << ": " << l.partition.modules.size() << " module(s), largest "
          << std::max_element(l.partition.modules.begin(), l.partition.modules.end(),
                              [](const auto& a, const auto& b) { return a.size() < b.size(); })
                 ->size()
          << " -> " << l.file << '\n';
    }
    out << "block vs full forward deviation over " << batch << " inputs: " << format_double(max_deviation, 6)
        << '\n';
    return out.str();
  }
};

// Held-out batch: the test split when `data` is given, otherwise seeded
// uniform inputs in [-1, 1).
inline PartitionReport cmd_partition(const Network& net, double tau, std::size_t ns_max, const std::string& out_dir,
                                     const std::string& stem, std::size_t batch, std::uint64_t seed,
                                     const Dataset* data = nullptr, const SolverOptions& solver = {}) {
  if (!(tau >= 0.0)) throw ValidationError("tau must be >= 0");
  if (ns_max < 1) throw ValidationError("ns_max must be >= 1");
  std::filesystem::create_directories(out_dir);
  PartitionReport report;
  std::vector<std::optional<ModulePartition>> parts(net.levels.size());
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    if (!net.levels[i].clique) continue;
    LevelPartitionReport lr;
    lr.level = i;
    lr.partition = build_modules(*net.levels[i].clique, tau, ns_max);
    lr.file = (std::filesystem::path(out_dir) / (stem + "_level" + std::to_string(i) + ".txt")).string();
    write_text_file(lr.file, format_partition(lr.partition, i, net.levels[i].spec.width));
    parts[i] = lr.partition;
    report.levels.push_back(std::move(lr));
  }
  std::vector<Matrix> inputs;
  if (data != nullptr) {
    for (std::size_t i = 0; i < std::min(batch, data->size()); ++i) inputs.push_back(data->sample(i));
  } else {
    SeededRng rng = SeededRng(seed).split(0xBA7C);
    for (std::size_t i = 0; i < batch; ++i) inputs.push_back(uniform_matrix(rng, 1, net.input_width, -1.0, 1.0));
  }
  for (const Matrix& x : inputs) {
    const Matrix full = forward_network(net, x, solver).output;
    const Matrix blocks = forward_partitioned(net, x, parts, tau, solver);
    report.max_deviation = std::max(report.max_deviation, max_abs_diff(full, blocks));
  }
  report.batch = inputs.size();
  return report;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepPoint {
  std::string parameter;  // "l1" or "l2"
  double value = 0.0;
  std::vector<RunOutcome> runs;
  double median_test_error = 0.0;
  double median_active_edges = 0.0;
  std::vector<std::string> pixmaps;
};

struct SweepReport {
  std::vector<SweepPoint> points;
};

inline SweepReport cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  const PreparedData data = prepare_data(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  SweepReport report;

  for (const std::string param : {"l1", "l2"}) {
    const auto& values = param == "l1" ? cfg.sweep_l1 : cfg.sweep_l2;
    if (values.empty()) continue;
    std::vector<RunSpec> specs;
    for (double value : values) {
      for (std::size_t nodes : cfg.node_counts) {
        for (std::uint64_t seed : cfg.seeds) {
          TrainConfig tc = variant_train_config(cfg, Variant::YNN, seed);
          (param == "l1" ? tc.l1 : tc.l2) = value;
          specs.push_back({Variant::YNN, nodes, seed, tc});
        }
      }
    }
    std::vector<RunOutcome> outcomes(specs.size());
    parallel_for(specs.size(), cfg.jobs, [&](std::size_t i) {
      const double value = param == "l1" ? specs[i].train.l1 : specs[i].train.l2;
      const std::string tag = cfg.outputs.sweep + "_" + param + "_" + format_double(value, 9) + "_" + run_tag(specs[i]);
      outcomes[i] = execute_run(cfg, data, specs[i], tag);
    });

    std::ostringstream runs, summary;
    runs << "parameter,value,nodes,seed,best_epoch,best_test_err,final_test_err,active_edges\n";
    summary << "parameter,value,median_test_err,median_active_edges\n";
    const std::size_t per_value = cfg.node_counts.size() * cfg.seeds.size();
    for (std::size_t v = 0; v < values.size(); ++v) {
      SweepPoint point;
      point.parameter = param;
      point.value = values[v];
      std::vector<double> errors, edges;
      for (std::size_t k = 0; k < per_value; ++k) {
        const RunOutcome& r = outcomes[v * per_value + k];
        runs << param << ',' << format_double(values[v], 9) << ',' << r.spec.nodes << ',' << r.spec.seed << ','
             << r.best_epoch << ',' << format_double(r.best_test_error, 9) << ','
             << format_double(r.final_test_error, 9) << ',' << r.active_edges << '\n';
        errors.push_back(r.best_test_error);
        edges.push_back(static_cast<double>(r.active_edges));
        point.runs.push_back(r);
      }
      point.median_test_error = median(errors);
      point.median_active_edges = median(edges);
      summary << param << ',' << format_double(values[v], 9) << ',' << format_double(point.median_test_error, 9)
              << ',' << format_double(point.median_active_edges, 9) << '\n';

      // Best run for this value: lowest test error, earliest run on ties.
      const RunOutcome* best = &point.runs.front();
      for (const auto& r : point.runs) {
        if (r.best_test_error < best->best_test_error) best = &r;
      }
      for (std::size_t i = 0; i < best->best.levels.size(); ++i) {
        if (!best->best.levels[i].clique) continue;
        const std::string file = (dir / (cfg.outputs.pixmap + "_" + param + "_" + format_double(values[v], 9) +
                                         "_level" + std::to_string(i) + ".pgm"))
                                     .string();
        export_pixmap(*best->best.levels[i].clique, file);
        point.pixmaps.push_back(file);
      }
      report.points.push_back(std::move(point));
    }
    write_text_file((dir / (cfg.outputs.sweep + "_" + param + ".csv")).string(), runs.str());
    write_text_file((dir / (cfg.outputs.sweep + "_" + param + "_summary.csv")).string(), summary.str());
  }
  return report;
}

}  // namespace ynn
