#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <limits>

#include "ynn/ynn.hpp"

using namespace ynn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ynn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string synthetic_config(const fs::path& out, const std::string& extra = "") {
  return R"({
  "dataset": {"source": "synthetic", "synthetic": {"samples": 60, "features": 3, "classes": 3, "seed": 2}},
  "node_counts": [3],
  "seeds": [1, 2],
  "variants": ["nn", "ynn"],
  "train": {"epochs": 3, "l1": 0.001},
  "sweep": {"l1": [0, 0.01]},
  "gradcheck": {"networks": 4, "regime_instances": 3},
  "output_dir": ")" + out.string() + "\"" + extra + "\n}\n";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(YNN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndSyntheticParse) {
  const ExperimentConfig cfg = parse_config(synthetic_config("/tmp/x"));
  EXPECT_EQ(cfg.dataset.source, "synthetic");
  EXPECT_EQ(cfg.node_counts, (std::vector<std::size_t>{3}));
  EXPECT_EQ(cfg.variants, (std::vector<Variant>{Variant::NN, Variant::YNN}));
  EXPECT_EQ(cfg.train.solver.tol, 1e-10);
  EXPECT_EQ(cfg.train.solver.max_iter, 100u);
  EXPECT_EQ(cfg.sweep_l1, (std::vector<double>{0, 0.01}));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(R"({"train": {"solver_tol": -1}})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "node_counts": [0]})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "network": {"activation": "relu"}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "bogus": 1})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic", "colour": 1}})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "outputs": {"model": "metrics"}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "variants": ["mlp"]})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "csv"}})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"dataset": {"source": "synthetic"}, "seeds": "one"})"), ValidationError);
  EXPECT_THROW(parse_config("{not json"), ParseError);
}

TEST(Config, OutputDirMustNotBeDataset) {
  EXPECT_THROW(parse_config(R"({"dataset": {"path": "d.csv"}, "output_dir": "/tmp/d.csv"})", "/tmp"), ValidationError);
}

TEST(Pixmap, HandScaledValues) {
  const auto cw = CliqueWeights::from_parts({0, 0}, Matrix{{0, 1}, {0.5, -0.25}});
  EXPECT_EQ(pixmap_pgm(cw), "P2\n2 2\n255\n0 255\n128 64\n");
  EXPECT_EQ(pixmap_pgm(CliqueWeights(2)), "P2\n2 2\n255\n0 0\n0 0\n");
}

TEST(Pixmap, Seed7Golden) {
  const Network net = init_network(classifier_levels({4}, 3), 3, SeededRng(7), 1.0);
  EXPECT_EQ(pixmap_pgm(*net.levels[0].clique), read_text_file(std::string(YNN_GOLDEN_DIR) + "/seed7_level0.pgm"));
}

TEST(SummaryCell, Format) {
  EXPECT_EQ(format_cell(0.18346, 0.00271), "0.1835±0.0027");
  EXPECT_DOUBLE_EQ(sample_std({1.0, 3.0}), std::sqrt(2.0));
  EXPECT_EQ(sample_std({5.0}), 0.0);
  EXPECT_EQ(median({3, 1, 2, 10}), 2.5);
}

TEST(CmdTrain, WritesArtifactsAndIsByteDeterministic) {
  const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
  ExperimentConfig ca = parse_config(synthetic_config(a));
  ExperimentConfig cb = parse_config(synthetic_config(b, ", \"jobs\": 2"));
  const TrainReport ra = cmd_train(ca);
  cmd_train(cb);
  EXPECT_EQ(ra.runs.size(), 4u);
  EXPECT_EQ(ra.cell(Variant::YNN, 3).test_errors.size(), 2u);
  for (const char* f : {"summary.csv", "summary.txt", "runs.csv", "metrics_ynn_n3_s1.csv", "model_nn_n3_s2.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_text_file((a / f).string()), read_text_file((b / f).string())) << f;
  }
  const std::string summary = read_text_file((a / "summary.csv").string());
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "model,3 Nodes");
  EXPECT_NE(summary.find("\nNN,"), std::string::npos);
  EXPECT_NE(summary.find("\nYNN,"), std::string::npos);
  const EvalReport ev = cmd_eval(ca, (a / "model_ynn_n3_s1.json").string());
  EXPECT_DOUBLE_EQ(ev.test_error, ra.runs[2].best_test_error);
}

TEST(CmdGradcheck, PassesAndCatchesInjectedFault) {
  ExperimentConfig cfg = parse_config(synthetic_config("/tmp/unused"));
  const GradcheckReport ok = cmd_gradcheck(cfg);
  EXPECT_TRUE(ok.passed()) << ok.text();
  EXPECT_EQ(ok.networks, 4u);
  cfg.gradcheck.inject_fault = true;
  const GradcheckReport bad = cmd_gradcheck(cfg);
  EXPECT_FALSE(bad.passed());
  EXPECT_GT(bad.failed_networks, 0u);
}

TEST(CmdPartition, BoundsAndDeviation) {
  const fs::path dir = fresh_dir("partition");
  SeededRng rng(4);
  Network net = init_network(classifier_levels({6}, 2), 3, rng, 1.0);
  net.levels[0].clique = random_clique(rng, 6, 0.7);
  const PartitionReport whole = cmd_partition(net, 0.0, 6, dir.string(), "partition", 16, 1);
  ASSERT_EQ(whole.levels.size(), 1u);
  EXPECT_EQ(whole.levels[0].partition.modules.size(), 1u);
  EXPECT_EQ(whole.max_deviation, 0.0);
  EXPECT_TRUE(fs::exists(dir / "partition_level0.txt"));

  const PartitionReport singles =
      cmd_partition(net, std::numeric_limits<double>::infinity(), 6, dir.string(), "partition", 16, 1);
  EXPECT_EQ(singles.levels[0].partition.modules.size(), 6u);
  EXPECT_GT(singles.max_deviation, 0.0);

  net.levels[0].clique = random_clique(rng, 6, 0.0);  // no coupling at all
  const PartitionReport zero = cmd_partition(net, 0.0, 1, dir.string(), "partition", 16, 1);
  EXPECT_EQ(zero.levels[0].partition.modules.size(), 6u);
  EXPECT_LE(zero.max_deviation, 1e-12);
  EXPECT_THROW(cmd_partition(net, 0.0, 0, dir.string(), "partition", 4, 1), ValidationError);
}

TEST(CmdSweep, WritesTablesAndPixmaps) {
  const fs::path dir = fresh_dir("sweep");
  const SweepReport r = cmd_sweep(parse_config(synthetic_config(dir)));
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].runs.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "sweep_l1.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep_l1_summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "pixmap_l1_0.01_level0.pgm"));
  EXPECT_FALSE(fs::exists(dir / "sweep_l2.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("exe");
  const std::string cfg = (dir / "cfg.json").string();
  write_text_file(cfg, synthetic_config(dir / "out"));
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("train"), 1);
  EXPECT_EQ(run_cli("train --config " + cfg + " --seed 3"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "model_ynn_n3_s3.json"));
  const std::string model = (dir / "out" / "model_ynn_n3_s3.json").string();
  EXPECT_EQ(run_cli("eval --config " + cfg + " --model " + model), 0);
  EXPECT_EQ(run_cli("eval --config " + cfg + " --model " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("gradcheck --config " + cfg), 0);
  EXPECT_EQ(run_cli("gradcheck --config " + cfg + " --inject-fault"), 2);
  EXPECT_EQ(run_cli("partition --model " + model + " --tau inf --ns-max 2 --out " + dir.string()), 0);
  EXPECT_EQ(run_cli("partition --model " + model + " --tau -1"), 1);
  const std::string pgm = (dir / "p.pgm").string();
  EXPECT_EQ(run_cli("export-pixmap --model " + model + " --level 0 --out " + pgm), 0);
  EXPECT_EQ(read_text_file(pgm), pixmap_pgm(*load_network(model).levels[0].clique));
  EXPECT_EQ(run_cli("export-pixmap --model " + model + " --level 1 --out " + pgm), 1);

  const std::string bad = (dir / "bad.json").string();
  write_text_file(bad, R"({"dataset": {"source": "synthetic"}, "train": {"solver_tol": 0}})");
  EXPECT_EQ(run_cli("train --config " + bad), 1);
}

TEST(Cli, GoldenPixmapFromModelFile) {
  const fs::path dir = fresh_dir("golden");
  const std::string pgm = (dir / "g.pgm").string();
  EXPECT_EQ(run_cli("export-pixmap --model " + std::string(YNN_GOLDEN_DIR) + "/seed7_network.json --level 0 --out " + pgm), 0);
  EXPECT_EQ(read_text_file(pgm), read_text_file(std::string(YNN_GOLDEN_DIR) + "/seed7_level0.pgm"));
}
