#include <gtest/gtest.h>

#include <cmath>

#include "clann/error.hpp"
#include "clann/model.hpp"
#include "gradcheck.hpp"

using namespace clann;

namespace {

ModelDims small_dims() { return {3, 2, 4, 5, 4}; }

Vector randn(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Forward, ZeroWeightsGiveHalf) {
  const ModelParams p = ModelParams::zeros(small_dims());
  const ForwardTrace t = forward(p, Vector{1, 2, 3}, Vector{4, 5, 6}, Vector{7, 8}, std::nullopt);
  EXPECT_EQ(t.task_prob, 0.5);
  EXPECT_EQ(t.joint, Vector(5));
  EXPECT_EQ(t.output_in.dim(), 7u);
}

TEST(Forward, ReluAfterFirstLayer) {
  ModelDims d{1, 1, 1, 1, 1};
  ModelParams p = ModelParams::zeros(d);
  p.input_layer = Matrix::from_rows({{1.0, -1.0}});
  p.hidden_layer = Matrix::from_rows({{1.0, 0.0}});
  const ForwardTrace t = forward(p, Vector{1.0}, Vector{3.0}, Vector{0.0}, std::nullopt);
  EXPECT_EQ(t.hidden, Vector{0.0});
  EXPECT_EQ(t.joint, Vector{0.0});
}

TEST(Forward, ProbabilityInUnitIntervalAndDeterministicWithoutDropout) {
  Rng rng(3);
  const ModelParams p = ModelParams::glorot(small_dims(), rng);
  for (int i = 0; i < 100; ++i) {
    const Vector a = randn(3, rng), b = randn(3, rng), f = randn(2, rng);
    const double s = predict_score(p, a, b, f);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(s, predict_score(p, a, b, f));
  }
}

TEST(Forward, RejectsWrongShapes) {
  const ModelParams p = ModelParams::zeros(small_dims());
  EXPECT_THROW(forward(p, Vector{1, 2}, Vector{1, 2, 3}, Vector{1, 2}, std::nullopt),
               ValidationError);
  EXPECT_THROW(forward(p, Vector{1, 2, 3}, Vector{1, 2, 3}, Vector{1}, std::nullopt),
               ValidationError);
  EXPECT_THROW(discriminator_forward(p, Vector{1}), ValidationError);
}

TEST(Discriminator, ZeroWeightsAndIgnoresTaskHead) {
  Rng rng(8);
  ModelParams p = ModelParams::glorot(small_dims(), rng);
  p.disc_weights = Vector(4);
  EXPECT_EQ(discriminator_forward(p, randn(5, rng)).prob, 0.5);

  const Vector f = randn(5, rng);
  ModelParams q = ModelParams::glorot(small_dims(), rng);
  const double before = discriminator_forward(q, f).prob;
  q.output_weights = randn(7, rng);
  EXPECT_EQ(discriminator_forward(q, f).prob, before);
}

TEST(Loss, Examples) {
  EXPECT_NEAR(binary_cross_entropy(0.5, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_cross_entropy(0.5, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_cross_entropy(0.9, 1), -std::log(0.9), 1e-15);
  EXPECT_EQ(binary_cross_entropy_from_logit(0.0, 1), std::log(2.0));
  EXPECT_TRUE(std::isfinite(binary_cross_entropy_from_logit(800.0, 0)));
  EXPECT_NEAR(binary_cross_entropy_from_logit(800.0, 0), 800.0, 1e-9);
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    auto [params, ex] = gradcheck::random_case(rng, trial % 2 == 1);
    const auto r = gradcheck::check(params, ex);
    EXPECT_LT(r.max_relative_error, 1e-4) << "trial " << trial;
    EXPECT_GT(r.components, 0u);
  }
}

TEST(Backward, UnlabeledOrLanguagelessExamples) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto [params, ex] = gradcheck::random_case(rng, false);
    ex.label.reset();
    EXPECT_LT(gradcheck::check(params, ex).max_relative_error, 1e-4);
    ex.label = 1;
    ex.language.reset();
    EXPECT_LT(gradcheck::check(params, ex).max_relative_error, 1e-4);
  }
}

TEST(Backward, OutputWeightsNeverSeeDiscriminatorLoss) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto [params, ex] = gradcheck::random_case(rng, false);
    ForwardTrace t = forward(params, ex.z_q, ex.z_rel, ex.features, std::nullopt);
    attach_discriminator(params, t);
    const Gradients g = backward(params, t, std::nullopt, 1, 1.0);
    EXPECT_EQ(g.values.output_weights, Vector(params.output_weights.dim()));
    const Gradients with_task = backward(params, t, 1, 1, 0.7);
    const Gradients task_only = backward(params, t, 1, std::nullopt, 0.7);
    EXPECT_EQ(with_task.values.output_weights, task_only.values.output_weights);
  }
}

TEST(Backward, ReversalIsExactNegation) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto [params, ex] = gradcheck::random_case(rng, trial % 3 == 0);
    ForwardTrace t = forward(params, ex.z_q, ex.z_rel, ex.features, ex.masks);
    attach_discriminator(params, t);
    const int lang = trial % 2;
    const Gradients reversed = backward(params, t, std::nullopt, lang, 1.0);

    const DiscriminatorBackward disc = discriminator_backward(params, t, lang);
    Gradients plain = Gradients::zeros(params.dims, GradientSource::discriminator);
    backprop_shared(params, t, disc.joint_grad, plain);
    for (std::size_t i = 0; i < plain.values.input_layer.values().size(); ++i) {
      EXPECT_EQ(reversed.values.input_layer.values()[i], -plain.values.input_layer.values()[i]);
    }
    for (std::size_t i = 0; i < plain.values.hidden_layer.values().size(); ++i) {
      EXPECT_EQ(reversed.values.hidden_layer.values()[i], -plain.values.hidden_layer.values()[i]);
    }
    // The discriminator itself is not reversed.
    EXPECT_EQ(reversed.values.disc_layer, disc.own.values.disc_layer);
    EXPECT_EQ(reversed.values.disc_weights, disc.own.values.disc_weights);
  }
}

TEST(Backward, RejectsNegativeLambda) {
  const ModelParams p = ModelParams::zeros(small_dims());
  ForwardTrace t = forward(p, Vector{1, 2, 3}, Vector{1, 2, 3}, Vector{1, 2}, std::nullopt);
  attach_discriminator(p, t);
  EXPECT_THROW(backward(p, t, 1, 1, -0.1), ValidationError);
}

TEST(Backward, DropoutZeroedUnitsGetNoGradient) {
  Rng rng(31);
  const ModelDims d = small_dims();
  const ModelParams p = ModelParams::glorot(d, rng);
  DropoutMasks masks = sample_masks(d, 0.5, rng);
  masks.joint.scale[0] = 0.0;
  masks.hidden.scale[1] = 0.0;
  ForwardTrace t = forward(p, randn(3, rng), randn(3, rng), randn(2, rng), masks);
  const Gradients g = backward(p, t, 1, std::nullopt, 0.0);
  for (std::size_t c = 0; c < p.hidden_layer.cols(); ++c) EXPECT_EQ(g.values.hidden_layer(0, c), 0.0);
  for (std::size_t c = 0; c < p.input_layer.cols(); ++c) EXPECT_EQ(g.values.input_layer(1, c), 0.0);
}

TEST(Params, ValidateCatchesShapeDrift) {
  ModelParams p = ModelParams::zeros(small_dims());
  EXPECT_NO_THROW(p.validate());
  p.disc_weights = Vector(3);
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Gradients, AddAndScale) {
  Gradients a = Gradients::zeros(small_dims(), GradientSource::task);
  Gradients b = Gradients::zeros(small_dims(), GradientSource::task);
  b.values.output_weights[0] = 2.0;
  a.add(b, 0.5);
  a.scale(3.0);
  EXPECT_EQ(a.values.output_weights[0], 3.0);
}
