#include <gtest/gtest.h>

#include <cmath>

#include "ynn/backward.hpp"
#include "ynn/experiment.hpp"
#include "ynn/random_network.hpp"
#include "ynn/training.hpp"

using namespace ynn;

namespace {

CliqueWeights f1_clique() { return CliqueWeights::from_parts({0, 0}, Matrix{{0.5, 0.3}, {0.2, -0.4}}); }
Matrix f1_meta() { return Matrix{{0.1, -0.2}}; }
const SolverOptions kTight{1e-13, 500};

double ce_loss(const Matrix& out, std::size_t label) {
  return loss_and_output_grad(out, label, LossKind::SoftmaxCrossEntropy).loss;
}

}  // namespace

TEST(CouplingOperator, UnitDiagonal) {
  EXPECT_EQ(coupling_operator(f1_clique()), (Matrix{{1, 0.3}, {0.2, 1}}));
}

TEST(LayerInputGradient, HandArithmetic) {
  InterLayerWeights w(3, 2);
  w.weight(0, 0) = 1;
  w.weight(1, 1) = 1;
  w.weight(2, 0) = 1;
  w.weight(2, 1) = 1;
  w.bias(0) = 9;  // bias row never contributes
  const Matrix d = layer_input_gradient(Matrix{{1, 2}}, w, Matrix{{0.4, -3, 7}}, ActivationKind::Identity);
  EXPECT_EQ(d, (Matrix{{1, 2, 3}}));
  const Matrix dt = layer_input_gradient(Matrix{{1, 2}}, w, Matrix{{1, 0, 0}}, ActivationKind::Tanh);
  EXPECT_NEAR(dt[0], 0.41997434161402614, 1e-14);
  EXPECT_EQ(dt[1], 2.0);
}

TEST(PaperMetaGradient, TwoNodeHandValues) {
  const LevelCache c = solve_clique(f1_meta(), f1_clique(), ActivationKind::Tanh, kTight);
  const Matrix d = paper_meta_gradient(Matrix{{1, 0}}, c, f1_clique(), ActivationKind::Tanh);
  EXPECT_NEAR(d[0], 0.492633576895194, 1e-9);
  EXPECT_NEAR(d[1], -0.1141832612916802, 1e-9);
}

TEST(ExactMetaGradient, MatchesFiniteDifferenceOfSolvedClique) {
  SeededRng rng(13);
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 1 + rng.below(6);
    const ActivationKind f = kAllActivations[rng.below(3)];
    const CliqueWeights cw = random_clique(rng, m, rng.uniform(0.0, 0.8));
    const Matrix meta = uniform_matrix(rng, 1, m, -1.5, 1.5);
    const Matrix c = uniform_matrix(rng, 1, m, -1, 1);
    auto objective = [&](const Matrix& mt) {
      const Matrix real = solve_clique(mt, cw, f, kTight).real;
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += c[j] * real[j];
      return s;
    };
    const LevelCache cache = solve_clique(meta, cw, f, kTight);
    const AdjointResult adj = exact_meta_gradient(c, cache, cw, f);
    const double h = 1e-6;
    for (std::size_t j = 0; j < m; ++j) {
      Matrix up = meta, down = meta;
      up[j] += h;
      down[j] -= h;
      EXPECT_NEAR(adj.d_meta[j], (objective(up) - objective(down)) / (2 * h), 1e-8);
    }
  }
}

TEST(ExactMetaGradient, SingularAdjointRaises) {
  const auto cw = CliqueWeights::from_parts({0, 0}, Matrix{{1, 1}, {1, 1}});
  LevelCache cache;
  cache.meta = Matrix{{0, 0}};
  cache.real = Matrix{{0, 0}};
  cache.activated_real = cache.real;
  EXPECT_THROW(exact_meta_gradient(Matrix{{1, 0}}, cache, cw, ActivationKind::Identity), SingularError);
}

TEST(InterlayerWeightGradient, OuterProduct) {
  EXPECT_EQ(interlayer_weight_gradient(Matrix{{2, 1}}, Matrix{{1, 0.5}}), (Matrix{{2, 1}, {1, 0.5}}));
}

TEST(DesignVector, UsesMetaOnSelfEntry) {
  const LevelCache c = solve_clique(f1_meta(), f1_clique(), ActivationKind::Tanh, kTight);
  const Matrix d = design_vector(c, 0, ActivationKind::Tanh);
  EXPECT_EQ(d[0], 1.0);
  EXPECT_NEAR(d[1], 0.09966799462495582, 1e-14);
  EXPECT_NEAR(d[2], 0.09950648218987675, 1e-9);
  EXPECT_THROW(design_vector(c, 2, ActivationKind::Tanh), ShapeError);
}

TEST(CliqueWeightGradient, HandArithmetic) {
  LevelCache c;
  c.meta = Matrix{{0.5, -1}};
  c.real = Matrix{{0.1, 0.2}};
  c.activated_real = c.real;
  const Matrix g = clique_weight_gradient(Matrix{{2, 6}}, c, ActivationKind::Identity);
  const Matrix expected{{2, 6}, {1, 0.6}, {0.4, -6}};
  EXPECT_LE(max_abs_diff(g, expected), 1e-15);
  const Matrix bad = clique_weight_gradient(Matrix{{2, 6}}, c, ActivationKind::Identity, true);
  EXPECT_NEAR(bad(1, 0), 0.2, 1e-15);
}

TEST(BackwardNetwork, ExactMatchesFiniteDifferences) {
  SeededRng rng(17);
  for (int t = 0; t < 15; ++t) {
    Network net = init_network(classifier_levels({4}, 2), 3, rng.split(t), 1.0);
    net.levels[0].clique = random_clique(rng, 4, 0.8);
    const Matrix x = uniform_matrix(rng, 1, 3, -1, 1);
    const std::size_t label = rng.below(2);
    const ForwardResult fwd = forward_network(net, x, kTight);
    const Matrix d_out = loss_and_output_grad(fwd.output, label, LossKind::SoftmaxCrossEntropy).d_output;
    const GradientSet exact = backward_network(net, fwd.caches, x, d_out);
    const GradientSet fd =
        finite_difference_gradient(net, x, [&](const Matrix& o) { return ce_loss(o, label); }, 1e-5, kTight);
    const GradientComparison cmp = compare_gradients(exact, fd, 1e-6, 1e-9);
    EXPECT_EQ(cmp.failures, 0u) << "max abs diff " << cmp.max_abs_diff;
  }
}

TEST(BackwardNetwork, ExactMatchesFiniteDifferencesOnRandomDepths) {
  SeededRng rng(23);
  for (int t = 0; t < 15; ++t) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, RandomNetSpec{});
    const ForwardResult fwd = forward_network(inst.net, inst.x, kTight);
    const Matrix d_out = loss_and_output_grad(fwd.output, inst.label, LossKind::SoftmaxCrossEntropy).d_output;
    const GradientSet exact = backward_network(inst.net, fwd.caches, inst.x, d_out);
    const GradientSet fd = finite_difference_gradient(
        inst.net, inst.x, [&](const Matrix& o) { return ce_loss(o, inst.label); }, 1e-5, kTight);
    EXPECT_EQ(compare_gradients(exact, fd, 1e-6, 1e-9).failures, 0u);
  }
}

TEST(BackwardNetwork, PaperEqualsExactWhenDecoupledAndLinear) {
  SeededRng rng(29);
  RandomNetSpec spec;
  spec.zero_off_diagonal = true;
  spec.random_activation = false;
  spec.activation = ActivationKind::Identity;
  for (int t = 0; t < 20; ++t) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, spec);
    const ForwardResult fwd = forward_network(inst.net, inst.x, kTight);
    const Matrix d_out = uniform_matrix(rng, 1, inst.net.output_width(), -1, 1);
    const GradientSet exact = backward_network(inst.net, fwd.caches, inst.x, d_out, {GradMode::ExactAdjoint});
    const GradientSet paper = backward_network(inst.net, fwd.caches, inst.x, d_out, {GradMode::PaperEq6});
    EXPECT_LE(compare_gradients(paper, exact, 0.0, 1e-12).max_abs_diff, 1e-12);
  }
}

TEST(BackwardNetwork, PaperDiffersOnCoupledCliques) {
  SeededRng rng(30);
  Network net = init_network(classifier_levels({4}, 2), 3, rng, 1.0);
  net.levels[0].clique = random_clique(rng, 4, 0.8);
  const Matrix x{{0.3, -0.6, 0.9}};
  const ForwardResult fwd = forward_network(net, x, kTight);
  const GradientSet exact = backward_network(net, fwd.caches, x, Matrix{{1, -1}}, {GradMode::ExactAdjoint});
  const GradientSet paper = backward_network(net, fwd.caches, x, Matrix{{1, -1}}, {GradMode::PaperEq6});
  EXPECT_GT(relative_divergence(paper, exact), 1e-3);
}

TEST(BackwardNetwork, LinearInOutputGradient) {
  SeededRng rng(37);
  for (int t = 0; t < 10; ++t) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, RandomNetSpec{});
    const ForwardResult fwd = forward_network(inst.net, inst.x, kTight);
    const std::size_t k = inst.net.output_width();
    const Matrix a = uniform_matrix(rng, 1, k, -1, 1), b = uniform_matrix(rng, 1, k, -1, 1);
    for (GradMode mode : {GradMode::ExactAdjoint, GradMode::PaperEq6}) {
      const GradientSet gb = backward_network(inst.net, fwd.caches, inst.x, b, {mode});
      const GradientSet gab = backward_network(inst.net, fwd.caches, inst.x, add(scale(a, 2.0), scale(b, -3.0)), {mode});
      GradientSet combo = GradientSet::zeros_like(inst.net);
      combo.add_scaled(backward_network(inst.net, fwd.caches, inst.x, a, {mode}), 2.0);
      combo.add_scaled(gb, -3.0);
      EXPECT_LE(compare_gradients(combo, gab, 0.0, 1e-12).max_abs_diff, 1e-12);
    }
  }
}

TEST(BackwardNetwork, SmallStepAlongNegativeGradientLowersLoss) {
  SeededRng rng(41);
  for (int t = 0; t < 10; ++t) {
    const GradcheckInstance inst = random_gradcheck_instance(rng, RandomNetSpec{});
    const ForwardResult fwd = forward_network(inst.net, inst.x, kTight);
    const LossResult lr = loss_and_output_grad(fwd.output, inst.label, LossKind::SoftmaxCrossEntropy);
    const GradientSet g = backward_network(inst.net, fwd.caches, inst.x, lr.d_output);
    Network stepped = inst.net;
    for (std::size_t i = 0; i < stepped.levels.size(); ++i) {
      axpy(stepped.levels[i].inter.matrix, -1e-4, g.d_inter[i]);
      if (g.d_clique[i]) axpy(stepped.levels[i].clique->matrix, -1e-4, *g.d_clique[i]);
    }
    const double after = ce_loss(forward_network(stepped, inst.x, kTight).output, inst.label);
    EXPECT_LE(after, lr.loss);
  }
}

TEST(FiniteDifference, ExactOnLinearLoss) {
  // Identity network without cliques: the loss is linear in each single weight.
  const Network net = init_network(classifier_levels({}, 2, ActivationKind::Identity, false), 2, SeededRng(3), 1.0);
  const Matrix x{{0.25, -2}};
  const GradientSet fd = finite_difference_gradient(net, x, [](const Matrix& o) { return 3 * o[0] - o[1]; }, 1e-3);
  EXPECT_NEAR(fd.d_inter[0](0, 0), 3.0, 1e-12);
  EXPECT_NEAR(fd.d_inter[0](1, 0), 0.75, 1e-12);
  EXPECT_NEAR(fd.d_inter[0](2, 1), 2.0, 1e-12);
}

TEST(FiniteDifference, StepSizesAgree) {
  SeededRng rng(43);
  const GradcheckInstance inst = random_gradcheck_instance(rng, RandomNetSpec{});
  auto loss = [&](const Matrix& o) { return ce_loss(o, inst.label); };
  const GradientSet a = finite_difference_gradient(inst.net, inst.x, loss, 1e-4, kTight);
  const GradientSet b = finite_difference_gradient(inst.net, inst.x, loss, 1e-5, kTight);
  EXPECT_LE(compare_gradients(a, b, 1e-5, 1e-8).failures, 0u);
  EXPECT_THROW(finite_difference_gradient(inst.net, inst.x, loss, 0.0), ValidationError);
}
