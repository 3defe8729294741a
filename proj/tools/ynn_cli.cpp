// ynn: command-line driver.
//
//   ynn train         --config <file> [--seed N] [--out DIR] [--jobs N]
//   ynn eval          --config <file> --model <file>
//   ynn gradcheck     [--config <file>] [--seed N] [--inject-fault]
//   ynn partition     --model <file> --tau T --ns-max N [--out DIR] [--config <file>] [--seed N] [--batch N]
//   ynn sweep         --config <file> [--seed N] [--out DIR] [--jobs N]
//   ynn export-pixmap --model <file> --level I --out <file.pgm>
//
// Exit codes: 0 success, 1 validation error, 2 runtime or solver error.

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ynn/ynn.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
};

ynn::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  ynn::ExperimentConfig cfg = path.empty() ? ynn::ExperimentConfig{} : ynn::load_config(path);
  if (o.seed) {
    cfg.seeds = {*o.seed};
    cfg.gradcheck.seed = *o.seed;
  }
  if (o.out) cfg.output_dir = *o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

double parse_tau(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  const double v = ynn::parse_double(s);
  if (!(v >= 0.0)) throw ynn::ValidationError("--tau must be >= 0");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yoked neural networks: training, gradient checks, clique partitioning"};
  app.require_subcommand(1);

  std::string config_path, model_path, out_file, tau_text = "0";
  std::size_t level = 0, ns_max = 8, batch = 32;
  bool inject_fault = false;
  Overrides ov;

  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", ov.seed, "Run with this single seed");
    sub->add_option("--out", ov.out, "Output directory");
    sub->add_option("--jobs", ov.jobs, "Parallel runs");
  };

  auto* train = app.add_subcommand("train", "Train the configured variants and write tables");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_overrides(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a model on the configured dataset split");
  eval->add_option("--config", config_path, "Experiment config (JSON)")->required();
  eval->add_option("--model", model_path, "Model file")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Check gradients against finite differences");
  gradcheck->add_option("--config", config_path, "Experiment config (JSON)");
  gradcheck->add_option("--seed", ov.seed, "Generator seed");
  gradcheck->add_flag("--inject-fault", inject_fault, "Corrupt the clique gradient (negative control)");

  auto* partition = app.add_subcommand("partition", "Cut each clique into neural modules");
  partition->add_option("--model", model_path, "Model file")->required();
  partition->add_option("--tau", tau_text, "Pruning threshold (number or 'inf')");
  partition->add_option("--ns-max", ns_max, "Largest allowed module");
  partition->add_option("--config", config_path, "Use this config's test split as the held-out batch");
  partition->add_option("--batch", batch, "Held-out batch size");
  add_overrides(partition);

  auto* sweep = app.add_subcommand("sweep", "Train across the L1/L2 sweep lists");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_overrides(sweep);

  auto* pixmap = app.add_subcommand("export-pixmap", "Write a clique's weights as a PGM image");
  pixmap->add_option("--model", model_path, "Model file")->required();
  pixmap->add_option("--level", level, "Level index (0-based)");
  pixmap->add_option("--out", out_file, "Output .pgm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      const auto cfg = load_with_overrides(config_path, ov);
      const auto report = ynn::cmd_train(cfg);
      std::cout << ynn::read_text_file(report.summary_text_file);
    } else if (eval->parsed()) {
      const auto cfg = load_with_overrides(config_path, ov);
      const auto r = ynn::cmd_eval(cfg, model_path);
      std::cout << "train_err " << ynn::format_double(r.train_error, 9) << "\ntest_err "
                << ynn::format_double(r.test_error, 9) << '\n';
    } else if (gradcheck->parsed()) {
      auto cfg = load_with_overrides(config_path, ov);
      if (inject_fault) cfg.gradcheck.inject_fault = true;
      const auto report = ynn::cmd_gradcheck(cfg);
      std::cout << report.text();
      if (!report.passed()) return 2;
    } else if (partition->parsed()) {
      const double tau = parse_tau(tau_text);
      const ynn::Network net = ynn::load_network(model_path);
      std::optional<ynn::PreparedData> data;
      ynn::ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = load_with_overrides(config_path, ov);
        data = ynn::prepare_data(cfg);
      }
      const std::string out_dir = ov.out ? *ov.out : (config_path.empty() ? std::string(".") : cfg.output_dir);
      const auto report = ynn::cmd_partition(net, tau, ns_max, out_dir, cfg.outputs.partition, batch,
                                             ov.seed.value_or(0), data ? &data->split.test : nullptr,
                                             cfg.train.solver);
      std::cout << report.text();
    } else if (sweep->parsed()) {
      const auto cfg = load_with_overrides(config_path, ov);
      const auto report = ynn::cmd_sweep(cfg);
      for (const auto& p : report.points) {
        std::cout << p.parameter << '=' << ynn::format_double(p.value, 9) << "  median test err "
                  << ynn::format_double(p.median_test_error, 6) << "  median active edges "
                  << ynn::format_double(p.median_active_edges, 6) << '\n';
      }
    } else if (pixmap->parsed()) {
      const ynn::Network net = ynn::load_network(model_path);
      if (level >= net.levels.size() || !net.levels[level].clique) {
        throw ynn::ValidationError("level " + std::to_string(level) + " has no clique");
      }
      ynn::export_pixmap(*net.levels[level].clique, out_file);
    }
  } catch (const ynn::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
