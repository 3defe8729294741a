#pragma once

// Experiment configuration (JSON). Every section rejects unknown keys.
//
// {
//   "dataset": {
//     "source": "csv" | "synthetic",
//     "path": "data/optdigits.csv", "label_column": 64, "feature_columns": [...],
//     "has_header": false, "encoding": "none" | "connect4" | {"x": 1, ...},
//     "synthetic": {"samples": 200, "features": 4, "classes": 3, "center_spread": 3, "noise": 1, "seed": 0},
//     "normalize": true, "train_fraction": 0.8, "split_seed": 0, "stratified": true
//   },
//   "network": {"hidden_levels": 1, "activation": "tanh", "output_clique": false, "init_scale": 1.0},
//   "node_counts": [35, 40, 45, 50],
//   "seeds": [1, 2, 3, 4, 5],
//   "variants": ["nn", "ynn", "ynn_l1", "ynn_l2"],
//   "train": {"learning_rate": 0.05, "epochs": 200, "batch_size": 16, "l1": 1e-3, "l2": 1e-3,
//             "grad_mode": "exact", "solver_tol": 1e-10, "solver_max_iter": 100,
//             "projection_rho_max": 0.9 | null, "loss": "softmax_cross_entropy",
//             "active_threshold": 1e-3, "freeze_input_bias": false},
//   "sweep": {"l1": [0, 1e-3, 1e-2], "l2": [0, 1e-3, 1e-2]},
//   "gradcheck": {"networks": 50, "h": 1e-5, "rel_tol": 1e-6, "abs_tol": 1e-10, "rho_max": 0.8,
//                 "max_width": 6, "regime_instances": 20, "regime_tol": 1e-12, "seed": 0,
//                 "inject_fault": false},
//   "partition": {"tau": 0.01, "ns_max": 8, "batch": 32},
//   "output_dir": "out/run",
//   "outputs": {"metrics": "metrics", "model": "model", "summary": "summary", "runs": "runs",
//               "sweep": "sweep", "pixmap": "pixmap", "partition": "partition"},
//   "jobs": 1
// }

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ynn/data.hpp"
#include "ynn/error.hpp"
#include "ynn/training.hpp"

namespace ynn {

enum class Variant { NN, YNN, YNN_L1, YNN_L2 };

inline std::string variant_key(Variant v) {
  switch (v) {
    case Variant::NN: return "nn";
    case Variant::YNN: return "ynn";
    case Variant::YNN_L1: return "ynn_l1";
    case Variant::YNN_L2: return "ynn_l2";
  }
  return "?";
}

// Row label used in summary tables.
inline std::string variant_label(Variant v) {
  switch (v) {
    case Variant::NN: return "NN";
    case Variant::YNN: return "YNN";
    case Variant::YNN_L1: return "YNN&L1";
    case Variant::YNN_L2: return "YNN&L2";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::NN, Variant::YNN, Variant::YNN_L1, Variant::YNN_L2}) {
    if (variant_key(v) == s) return v;
  }
  throw ValidationError("unknown variant '" + s + "'");
}

struct DatasetManifest {
  std::string source = "csv";
  std::string path;
  std::optional<std::size_t> label_column;  // default: last column
  std::vector<std::size_t> feature_columns;
  bool has_header = false;
  std::map<std::string, double> encoding;
  BlobSpec synthetic{};
  bool normalize = true;
  SplitSpec split{};
};

struct NetworkSection {
  std::size_t hidden_levels = 1;
  ActivationKind activation = ActivationKind::Tanh;
  bool output_clique = false;
  double init_scale = 1.0;
};

struct GradcheckSection {
  std::size_t networks = 50;
  double h = 1e-5;
  double rel_tol = 1e-6;
  double abs_tol = 1e-10;
  double rho_max = 0.8;
  std::size_t max_width = 6;
  std::size_t regime_instances = 20;
  double regime_tol = 1e-12;
  std::uint64_t seed = 0;
  bool inject_fault = false;
};

struct PartitionSection {
  double tau = 0.01;
  std::size_t ns_max = 8;
  std::size_t batch = 32;
};

struct OutputNames {
  std::string metrics = "metrics";
  std::string model = "model";
  std::string summary = "summary";
  std::string runs = "runs";
  std::string sweep = "sweep";
  std::string pixmap = "pixmap";
  std::string partition = "partition";
};

struct ExperimentConfig {
  DatasetManifest dataset;
  NetworkSection network;
  std::vector<std::size_t> node_counts{40};
  std::vector<std::uint64_t> seeds{1};
  std::vector<Variant> variants{Variant::NN, Variant::YNN, Variant::YNN_L1, Variant::YNN_L2};
  TrainConfig train;
  std::vector<double> sweep_l1;
  std::vector<double> sweep_l2;
  GradcheckSection gradcheck;
  PartitionSection partition;
  std::string output_dir = "out";
  OutputNames outputs;
  std::size_t jobs = 1;
  std::filesystem::path base_dir;  // relative dataset paths resolve against this

  std::string dataset_path() const {
    const std::filesystem::path p(dataset.path);
    return (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
  }

  void validate() const {
    if (dataset.source != "csv" && dataset.source != "synthetic") {
      throw ValidationError("dataset.source must be 'csv' or 'synthetic'");
    }
    if (dataset.source == "csv" && dataset.path.empty()) throw ValidationError("dataset.path is required");
    if (node_counts.empty()) throw ValidationError("node_counts must not be empty");
    for (std::size_t n : node_counts) {
      if (n < 1) throw ValidationError("node_counts entries must be >= 1");
    }
    if (network.hidden_levels < 1) throw ValidationError("network.hidden_levels must be >= 1");
    if (!(network.init_scale >= 0.0)) throw ValidationError("network.init_scale must be >= 0");
    if (seeds.empty()) throw ValidationError("seeds must not be empty");
    if (variants.empty()) throw ValidationError("variants must not be empty");
    train.validate();
    for (double v : sweep_l1) {
      if (!(v >= 0.0)) throw ValidationError("sweep.l1 values must be >= 0");
    }
    for (double v : sweep_l2) {
      if (!(v >= 0.0)) throw ValidationError("sweep.l2 values must be >= 0");
    }
    if (!(gradcheck.h > 0.0) || !(gradcheck.rel_tol >= 0.0) || !(gradcheck.abs_tol >= 0.0) ||
        !(gradcheck.regime_tol >= 0.0)) {
      throw ValidationError("gradcheck tolerances must be non-negative and h > 0");
    }
    if (gradcheck.max_width < 1) throw ValidationError("gradcheck.max_width must be >= 1");
    if (!(partition.tau >= 0.0)) throw ValidationError("partition.tau must be >= 0");
    if (partition.ns_max < 1) throw ValidationError("partition.ns_max must be >= 1");
    if (jobs < 1) throw ValidationError("jobs must be >= 1");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");

    const std::vector<std::string> names{outputs.metrics, outputs.model, outputs.summary, outputs.runs,
                                         outputs.sweep, outputs.pixmap, outputs.partition};
    std::set<std::string> unique;
    for (const auto& n : names) {
      if (n.empty() || n.find('/') != std::string::npos) {
        throw ValidationError("output names must be nonempty plain file stems");
      }
      if (!unique.insert(n).second) throw ValidationError("output name '" + n + "' is used twice");
    }
    if (dataset.source == "csv") {
      const auto out = std::filesystem::weakly_canonical(output_dir);
      const auto data = std::filesystem::weakly_canonical(dataset_path());
      if (out == data) throw ValidationError("output_dir overlaps the dataset path");
    }
  }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ValidationError(section + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ValidationError("unknown key '" + it.key() + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline double read_tolerance(const json& j, const char* key, double fallback, const std::string& section) {
  double v = fallback;
  read(j, key, v);
  if (!(v > 0.0)) throw ValidationError(section + "." + key + " must be positive");
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  try {
    detail::check_keys(doc, {"dataset", "network", "node_counts", "seeds", "variants", "train", "sweep",
                             "gradcheck", "partition", "output_dir", "outputs", "jobs"},
                       "config");
    if (doc.contains("dataset")) {
      const json& d = doc["dataset"];
      detail::check_keys(d, {"source", "path", "label_column", "feature_columns", "has_header", "encoding",
                             "synthetic", "normalize", "train_fraction", "split_seed", "stratified"},
                         "dataset");
      auto& m = cfg.dataset;
      detail::read(d, "source", m.source);
      detail::read(d, "path", m.path);
      if (d.contains("label_column")) m.label_column = d["label_column"].get<std::size_t>();
      detail::read(d, "feature_columns", m.feature_columns);
      detail::read(d, "has_header", m.has_header);
      if (d.contains("encoding")) {
        const json& e = d["encoding"];
        if (e.is_string()) {
          const auto name = e.get<std::string>();
          if (name == "connect4") {
            m.encoding = connect4_encoding();
          } else if (name != "none") {
            throw ValidationError("unknown dataset.encoding '" + name + "'");
          }
        } else {
          m.encoding = e.get<std::map<std::string, double>>();
        }
      }
      if (d.contains("synthetic")) {
        const json& s = d["synthetic"];
        detail::check_keys(s, {"samples", "features", "classes", "center_spread", "noise", "seed"},
                           "dataset.synthetic");
        detail::read(s, "samples", m.synthetic.samples);
        detail::read(s, "features", m.synthetic.features);
        detail::read(s, "classes", m.synthetic.classes);
        detail::read(s, "center_spread", m.synthetic.center_spread);
        detail::read(s, "noise", m.synthetic.noise);
        detail::read(s, "seed", m.synthetic.seed);
      }
      detail::read(d, "normalize", m.normalize);
      detail::read(d, "train_fraction", m.split.train_fraction);
      detail::read(d, "split_seed", m.split.seed);
      detail::read(d, "stratified", m.split.stratified);
    }
    if (doc.contains("network")) {
      const json& n = doc["network"];
      detail::check_keys(n, {"hidden_levels", "activation", "output_clique", "init_scale"}, "network");
      detail::read(n, "hidden_levels", cfg.network.hidden_levels);
      if (n.contains("activation")) cfg.network.activation = parse_activation(n["activation"].get<std::string>());
      detail::read(n, "output_clique", cfg.network.output_clique);
      detail::read(n, "init_scale", cfg.network.init_scale);
    }
    detail::read(doc, "node_counts", cfg.node_counts);
    detail::read(doc, "seeds", cfg.seeds);
    if (doc.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : doc["variants"]) cfg.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (doc.contains("train")) {
      const json& t = doc["train"];
      detail::check_keys(t, {"learning_rate", "epochs", "batch_size", "l1", "l2", "grad_mode", "solver_tol",
                             "solver_max_iter", "projection_rho_max", "loss", "active_threshold",
                             "freeze_input_bias", "train_cliques"},
                         "train");
      auto& tc = cfg.train;
      detail::read(t, "learning_rate", tc.learning_rate);
      detail::read(t, "epochs", tc.epochs);
      detail::read(t, "batch_size", tc.batch_size);
      detail::read(t, "l1", tc.l1);
      detail::read(t, "l2", tc.l2);
      if (t.contains("grad_mode")) tc.grad_mode = parse_grad_mode(t["grad_mode"].get<std::string>());
      tc.solver.tol = detail::read_tolerance(t, "solver_tol", tc.solver.tol, "train");
      detail::read(t, "solver_max_iter", tc.solver.max_iter);
      if (t.contains("projection_rho_max")) {
        const json& p = t["projection_rho_max"];
        tc.projection_rho_max = p.is_null() ? std::nullopt : std::optional<double>(p.get<double>());
      }
      if (t.contains("loss")) tc.loss_kind = parse_loss_kind(t["loss"].get<std::string>());
      detail::read(t, "active_threshold", tc.active_threshold);
      detail::read(t, "freeze_input_bias", tc.freeze_input_bias);
      detail::read(t, "train_cliques", tc.train_cliques);
    }
    if (doc.contains("sweep")) {
      const json& s = doc["sweep"];
      detail::check_keys(s, {"l1", "l2"}, "sweep");
      detail::read(s, "l1", cfg.sweep_l1);
      detail::read(s, "l2", cfg.sweep_l2);
    }
    if (doc.contains("gradcheck")) {
      const json& g = doc["gradcheck"];
      detail::check_keys(g, {"networks", "h", "rel_tol", "abs_tol", "rho_max", "max_width", "regime_instances",
                             "regime_tol", "seed", "inject_fault"},
                         "gradcheck");
      auto& gc = cfg.gradcheck;
      detail::read(g, "networks", gc.networks);
      detail::read(g, "h", gc.h);
      detail::read(g, "rel_tol", gc.rel_tol);
      detail::read(g, "abs_tol", gc.abs_tol);
      detail::read(g, "rho_max", gc.rho_max);
      detail::read(g, "max_width", gc.max_width);
      detail::read(g, "regime_instances", gc.regime_instances);
      detail::read(g, "regime_tol", gc.regime_tol);
      detail::read(g, "seed", gc.seed);
      detail::read(g, "inject_fault", gc.inject_fault);
    }
    if (doc.contains("partition")) {
      const json& p = doc["partition"];
      detail::check_keys(p, {"tau", "ns_max", "batch"}, "partition");
      detail::read(p, "tau", cfg.partition.tau);
      detail::read(p, "ns_max", cfg.partition.ns_max);
      detail::read(p, "batch", cfg.partition.batch);
    }
    detail::read(doc, "output_dir", cfg.output_dir);
    if (doc.contains("outputs")) {
      const json& o = doc["outputs"];
      detail::check_keys(o, {"metrics", "model", "summary", "runs", "sweep", "pixmap", "partition"}, "outputs");
      detail::read(o, "metrics", cfg.outputs.metrics);
      detail::read(o, "model", cfg.outputs.model);
      detail::read(o, "summary", cfg.outputs.summary);
      detail::read(o, "runs", cfg.outputs.runs);
      detail::read(o, "sweep", cfg.outputs.sweep);
      detail::read(o, "pixmap", cfg.outputs.pixmap);
      detail::read(o, "partition", cfg.outputs.partition);
    }
    detail::read(doc, "jobs", cfg.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::filesystem::path p(path);
  return parse_config(read_text_file(path), p.parent_path());
}

}  // namespace ynn
