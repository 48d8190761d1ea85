#pragma once

// Central finite differences against clann::backward.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <random>
#include <utility>

#include "clann/model.hpp"

namespace gradcheck {

struct Example {
  clann::Vector z_q, z_rel, features;
  std::optional<clann::DropoutMasks> masks;
  std::optional<int> label;
  std::optional<int> language;
  double lambda = 0.0;
};

// Per-example objective seen by one parameter block: L_c - lambda * L_l for
// the shared blocks, +L_l for the discriminator blocks.
inline double objective(const clann::ModelParams& p, const Example& ex, std::size_t block) {
  clann::ForwardTrace t = clann::forward(p, ex.z_q, ex.z_rel, ex.features, ex.masks);
  double task = 0.0, disc = 0.0;
  if (ex.label) task = clann::binary_cross_entropy_from_logit(t.task_logit, *ex.label);
  if (ex.language) {
    clann::attach_discriminator(p, t);
    disc = clann::binary_cross_entropy_from_logit(t.disc_logit, *ex.language);
  }
  if (block >= clann::ModelParams::kFirstDiscBlock) return disc;
  return task - ex.lambda * disc;
}

struct Result {
  double max_relative_error = 0.0;
  std::size_t components = 0;
};

inline Result check(const clann::ModelParams& params, const Example& ex, double step = 1e-6) {
  clann::ForwardTrace trace = clann::forward(params, ex.z_q, ex.z_rel, ex.features, ex.masks);
  if (ex.language) clann::attach_discriminator(params, trace);
  const clann::Gradients g = clann::backward(params, trace, ex.label, ex.language, ex.lambda);
  Result r;
  clann::ModelParams probe = params;
  auto blocks = probe.blocks();
  const auto analytic = g.values.blocks();
  for (std::size_t b = 0; b < clann::ModelParams::kBlockCount; ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      const double saved = blocks[b][i];
      blocks[b][i] = saved + step;
      const double up = objective(probe, ex, b);
      blocks[b][i] = saved - step;
      const double down = objective(probe, ex, b);
      blocks[b][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[b][i];
      // Relative error with an absolute floor so components near zero do
      // not blow up on round-off.
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      r.max_relative_error = std::max(r.max_relative_error, err);
      ++r.components;
    }
  }
  return r;
}

// Random configuration drawn from the small-shape grid used by the tests.
inline std::pair<clann::ModelParams, Example> random_case(clann::Rng& rng, bool with_dropout) {
  auto pick = [&](std::initializer_list<std::size_t> xs) {
    std::uniform_int_distribution<std::size_t> u(0, xs.size() - 1);
    return *(xs.begin() + u(rng));
  };
  clann::ModelDims d;
  d.embedding_dim = pick({2, 5});
  d.feature_dim = pick({1, 4});
  d.hidden_dim = pick({2, 5});
  d.joint_dim = pick({3, 7});
  d.disc_hidden_dim = pick({2, 5});
  clann::ModelParams p = clann::ModelParams::glorot(d, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  auto vec = [&](std::size_t n) {
    clann::Vector v(n);
    for (double& x : v) x = g(rng);
    return v;
  };
  // Scale the output heads up so the losses are not flat.
  for (double& x : p.output_weights) x *= 3.0;
  for (double& x : p.disc_weights) x *= 3.0;
  Example ex{vec(d.embedding_dim), vec(d.embedding_dim), vec(d.feature_dim), std::nullopt,
             std::nullopt, std::nullopt, 0.0};
  if (with_dropout) ex.masks = clann::sample_masks(d, 0.8, rng);
  const double lambdas[] = {0.0, 0.5, 1.0};
  ex.lambda = lambdas[pick({0, 1, 2})];
  std::bernoulli_distribution coin(0.5);
  ex.label = coin(rng) ? 1 : 0;
  ex.language = coin(rng) ? 1 : 0;
  return {std::move(p), std::move(ex)};
}

}  // namespace gradcheck
