#pragma once

// Pair classifier with an adversarial language discriminator.
//
//   x0 = [z_q ; z_q']             h  = relu(input_layer  · x0)  (dropout)
//   x1 = [h ; phi]                f  = relu(hidden_layer · x1)  (dropout)
//   x2 = [f ; phi]                c  = sigmoid(output_weights · x2)
//   discriminator on f:           hl = relu(disc_layer · f)
//                                 l  = sigmoid(disc_weights · hl)
//
// The discriminator is trained to predict the language bit. Its gradient is
// reversed (scaled by -lambda) where it flows back into f, so the shared
// layers are pushed toward language-invariant representations.

#include <array>
#include <optional>
#include <span>
#include <string>

#include "clann/linalg.hpp"

namespace clann {

struct ModelDims {
  std::size_t embedding_dim = 0;  // per question; the first layer sees twice this
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;     // |h|
  std::size_t joint_dim = 0;      // |f|
  std::size_t disc_hidden_dim = 0;

  bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
  ModelDims dims;
  Matrix input_layer;      // hidden_dim x 2*embedding_dim
  Matrix hidden_layer;     // joint_dim x (hidden_dim + feature_dim)
  Vector output_weights;   // joint_dim + feature_dim
  Matrix disc_layer;       // disc_hidden_dim x joint_dim
  Vector disc_weights;     // disc_hidden_dim

  static constexpr std::size_t kBlockCount = 5;
  static constexpr std::array<const char*, kBlockCount> kBlockNames = {
      "input_layer", "hidden_layer", "output_weights", "disc_layer", "disc_weights"};
  // Blocks 0..2 are shared with the task head; 3..4 belong to the discriminator.
  static constexpr std::size_t kFirstDiscBlock = 3;

  static ModelParams zeros(const ModelDims& dims);
  static ModelParams glorot(const ModelDims& dims, Rng& rng);

  std::array<std::span<double>, kBlockCount> blocks();
  std::array<std::span<const double>, kBlockCount> blocks() const;

  // Throws ValidationError if any block disagrees with `dims`.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

enum class GradientSource { task, discriminator, combined };

struct Gradients {
  ModelParams values;  // shape-congruent with the parameters they update
  GradientSource source = GradientSource::combined;

  static Gradients zeros(const ModelDims& dims, GradientSource source);
  void add(const Gradients& other, double scale = 1.0);
  void scale(double factor);
};

// Dropout masks for the two shared hidden layers. Absent means eval mode.
struct DropoutMasks {
  DropoutMask hidden;
  DropoutMask joint;
};

DropoutMasks sample_masks(const ModelDims& dims, double keep_probability, Rng& rng);

struct ForwardTrace {
  Vector input;           // [z_q ; z_q']
  Vector features;        // phi
  Vector hidden_pre;
  Vector hidden;          // after relu and dropout
  Vector joint_in;        // [hidden ; phi]
  Vector joint_pre;
  Vector joint;           // f, after relu and dropout
  Vector output_in;       // [f ; phi]
  double task_logit = 0.0;
  double task_prob = 0.5;
  std::optional<DropoutMasks> masks;

  // Filled by discriminator_forward.
  Vector disc_pre;
  Vector disc_hidden;
  double disc_logit = 0.0;
  double disc_prob = 0.5;
};

struct DiscriminatorOutput {
  Vector pre_activation;
  Vector hidden;
  double logit = 0.0;
  double prob = 0.5;
};

// Pass masks for training, std::nullopt for evaluation.
ForwardTrace forward(const ModelParams& params, const Vector& z_q, const Vector& z_rel,
                     const Vector& features, const std::optional<DropoutMasks>& masks);

DiscriminatorOutput discriminator_forward(const ModelParams& params, const Vector& joint);
// Runs the discriminator on trace.joint and stores its outputs in the trace.
void attach_discriminator(const ModelParams& params, ForwardTrace& trace);

// Binary cross-entropy. The *_from_logit forms are what training uses.
double binary_cross_entropy(double prob, int label);
double binary_cross_entropy_from_logit(double logit, int label);
inline double task_loss(double prob, int label) { return binary_cross_entropy(prob, label); }
inline double discriminator_loss(double prob, int label) {
  return binary_cross_entropy(prob, label);
}

// d(loss)/d(f) of the discriminator loss for one example, plus the
// discriminator's own parameter gradients, without any reversal.
struct DiscriminatorBackward {
  Vector joint_grad;
  Gradients own;  // only disc_layer / disc_weights are non-zero
};
DiscriminatorBackward discriminator_backward(const ModelParams& params, const ForwardTrace& trace,
                                             int language);

// Gradient reversal: identity forward, -lambda on the way back.
Vector reverse_gradient(const Vector& upstream, double lambda);

// Pushes an upstream gradient at f through the shared layers into
// hidden_layer and input_layer (honouring the trace's dropout masks).
void backprop_shared(const ModelParams& params, const ForwardTrace& trace, const Vector& joint_grad,
                     Gradients& out);

// Per-example gradients of
//   L_c - lambda * L_l   for input_layer, hidden_layer, output_weights
//   L_l                  for disc_layer, disc_weights
// `label` absent means unlabeled (no task term); `language` absent skips the
// discriminator entirely. Throws ValidationError for lambda < 0.
Gradients backward(const ModelParams& params, const ForwardTrace& trace, std::optional<int> label,
                   std::optional<int> language, double lambda);

double predict_score(const ModelParams& params, const Vector& z_q, const Vector& z_rel,
                     const Vector& features);

}  // namespace clann
