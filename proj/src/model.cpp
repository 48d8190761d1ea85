#include "clann/model.hpp"

#include <cmath>

#include "clann/error.hpp"

namespace clann {

ModelParams ModelParams::zeros(const ModelDims& d) {
  ModelParams p;
  p.dims = d;
  p.input_layer = Matrix(d.hidden_dim, 2 * d.embedding_dim);
  p.hidden_layer = Matrix(d.joint_dim, d.hidden_dim + d.feature_dim);
  p.output_weights = Vector(d.joint_dim + d.feature_dim);
  p.disc_layer = Matrix(d.disc_hidden_dim, d.joint_dim);
  p.disc_weights = Vector(d.disc_hidden_dim);
  return p;
}

ModelParams ModelParams::glorot(const ModelDims& d, Rng& rng) {
  if (d.embedding_dim == 0 || d.hidden_dim == 0 || d.joint_dim == 0 || d.disc_hidden_dim == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  ModelParams p;
  p.dims = d;
  p.input_layer = glorot_uniform_init(d.hidden_dim, 2 * d.embedding_dim, rng);
  p.hidden_layer = glorot_uniform_init(d.joint_dim, d.hidden_dim + d.feature_dim, rng);
  p.output_weights = Vector(glorot_uniform_init(1, d.joint_dim + d.feature_dim, rng).values());
  p.disc_layer = glorot_uniform_init(d.disc_hidden_dim, d.joint_dim, rng);
  p.disc_weights = Vector(glorot_uniform_init(1, d.disc_hidden_dim, rng).values());
  return p;
}

std::array<std::span<double>, ModelParams::kBlockCount> ModelParams::blocks() {
  return {input_layer.span(), hidden_layer.span(), output_weights.span(), disc_layer.span(),
          disc_weights.span()};
}

std::array<std::span<const double>, ModelParams::kBlockCount> ModelParams::blocks() const {
  return {input_layer.span(), hidden_layer.span(), output_weights.span(), disc_layer.span(),
          disc_weights.span()};
}

void ModelParams::validate() const {
  const ModelParams expected = zeros(dims);
  auto bad = [](const char* name) {
    throw ValidationError(std::string("parameter block '") + name +
                          "' does not match the model dimensions");
  };
  if (input_layer.rows() != expected.input_layer.rows() ||
      input_layer.cols() != expected.input_layer.cols()) {
    bad("input_layer");
  }
  if (hidden_layer.rows() != expected.hidden_layer.rows() ||
      hidden_layer.cols() != expected.hidden_layer.cols()) {
    bad("hidden_layer");
  }
  if (output_weights.dim() != expected.output_weights.dim()) bad("output_weights");
  if (disc_layer.rows() != expected.disc_layer.rows() ||
      disc_layer.cols() != expected.disc_layer.cols()) {
    bad("disc_layer");
  }
  if (disc_weights.dim() != expected.disc_weights.dim()) bad("disc_weights");
}

Gradients Gradients::zeros(const ModelDims& dims, GradientSource source) {
  return {ModelParams::zeros(dims), source};
}

void Gradients::add(const Gradients& other, double scale) {
  auto mine = values.blocks();
  const auto theirs = other.values.blocks();
  for (std::size_t b = 0; b < ModelParams::kBlockCount; ++b) {
    if (mine[b].size() != theirs[b].size()) {
      throw ValidationError("gradient block size mismatch in '" +
                            std::string(ModelParams::kBlockNames[b]) + "'");
    }
    for (std::size_t i = 0; i < mine[b].size(); ++i) mine[b][i] += scale * theirs[b][i];
  }
}

void Gradients::scale(double factor) {
  for (auto block : values.blocks()) {
    for (double& x : block) x *= factor;
  }
}

DropoutMasks sample_masks(const ModelDims& dims, double keep_probability, Rng& rng) {
  DropoutMasks m;
  m.hidden = sample_dropout_mask(dims.hidden_dim, keep_probability, rng);
  m.joint = sample_dropout_mask(dims.joint_dim, keep_probability, rng);
  return m;
}

ForwardTrace forward(const ModelParams& params, const Vector& z_q, const Vector& z_rel,
                     const Vector& features, const std::optional<DropoutMasks>& masks) {
  const ModelDims& d = params.dims;
  if (z_q.dim() != d.embedding_dim || z_rel.dim() != d.embedding_dim) {
    throw ValidationError("forward: question vectors of dim " + std::to_string(z_q.dim()) + "/" +
                          std::to_string(z_rel.dim()) + ", model expects " +
                          std::to_string(d.embedding_dim));
  }
  if (features.dim() != d.feature_dim) {
    throw ValidationError("forward: " + std::to_string(features.dim()) +
                          " pair features, model expects " + std::to_string(d.feature_dim));
  }

  ForwardTrace t;
  t.input = concat(z_q, z_rel);
  t.features = features;
  t.hidden_pre = matvec(params.input_layer, t.input);
  t.hidden = relu(t.hidden_pre);
  if (masks) t.hidden = apply_mask(t.hidden, masks->hidden);
  t.joint_in = concat(t.hidden, features);
  t.joint_pre = matvec(params.hidden_layer, t.joint_in);
  t.joint = relu(t.joint_pre);
  if (masks) t.joint = apply_mask(t.joint, masks->joint);
  t.output_in = concat(t.joint, features);
  t.task_logit = dot(params.output_weights, t.output_in);
  t.task_prob = sigmoid(t.task_logit);
  t.masks = masks;
  return t;
}

DiscriminatorOutput discriminator_forward(const ModelParams& params, const Vector& joint) {
  if (joint.dim() != params.dims.joint_dim) {
    throw ValidationError("discriminator_forward: representation of dim " +
                          std::to_string(joint.dim()) + ", model expects " +
                          std::to_string(params.dims.joint_dim));
  }
  DiscriminatorOutput out;
  out.pre_activation = matvec(params.disc_layer, joint);
  out.hidden = relu(out.pre_activation);
  out.logit = dot(params.disc_weights, out.hidden);
  out.prob = sigmoid(out.logit);
  return out;
}

void attach_discriminator(const ModelParams& params, ForwardTrace& trace) {
  DiscriminatorOutput out = discriminator_forward(params, trace.joint);
  trace.disc_pre = std::move(out.pre_activation);
  trace.disc_hidden = std::move(out.hidden);
  trace.disc_logit = out.logit;
  trace.disc_prob = out.prob;
}

double binary_cross_entropy(double prob, int label) {
  return label == 1 ? -std::log(prob) : -std::log1p(-prob);
}

double binary_cross_entropy_from_logit(double logit, int label) {
  return softplus(logit) - static_cast<double>(label) * logit;
}

DiscriminatorBackward discriminator_backward(const ModelParams& params, const ForwardTrace& trace,
                                             int language) {
  if (trace.disc_hidden.dim() != params.dims.disc_hidden_dim) {
    throw ValidationError("discriminator_backward: trace has no discriminator pass");
  }
  DiscriminatorBackward out{Vector(), Gradients::zeros(params.dims, GradientSource::discriminator)};
  const double dlogit = trace.disc_prob - static_cast<double>(language);
  out.own.values.disc_weights = dlogit * trace.disc_hidden;
  const Vector pre_grad =
      relu_backward(trace.disc_pre, dlogit * params.disc_weights);
  add_outer(out.own.values.disc_layer, pre_grad, trace.joint);
  out.joint_grad = matvec_transposed(params.disc_layer, pre_grad);
  return out;
}

Vector reverse_gradient(const Vector& upstream, double lambda) { return (-lambda) * upstream; }

void backprop_shared(const ModelParams& params, const ForwardTrace& trace, const Vector& joint_grad,
                     Gradients& out) {
  const ModelDims& d = params.dims;
  Vector grad = joint_grad;
  if (trace.masks) grad = hadamard(grad, trace.masks->joint.scale);
  const Vector joint_pre_grad = relu_backward(trace.joint_pre, grad);
  add_outer(out.values.hidden_layer, joint_pre_grad, trace.joint_in);

  const Vector joint_in_grad = matvec_transposed(params.hidden_layer, joint_pre_grad);
  Vector hidden_grad = split(joint_in_grad, d.hidden_dim).first;
  if (trace.masks) hidden_grad = hadamard(hidden_grad, trace.masks->hidden.scale);
  const Vector hidden_pre_grad = relu_backward(trace.hidden_pre, hidden_grad);
  add_outer(out.values.input_layer, hidden_pre_grad, trace.input);
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace, std::optional<int> label,
                   std::optional<int> language, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("backward: lambda must be >= 0");
  const ModelDims& d = params.dims;
  Gradients g = Gradients::zeros(d, GradientSource::combined);
  Vector joint_grad(d.joint_dim);

  if (label) {
    const double dlogit = trace.task_prob - static_cast<double>(*label);
    g.values.output_weights = dlogit * trace.output_in;
    for (std::size_t i = 0; i < d.joint_dim; ++i) {
      joint_grad[i] = dlogit * params.output_weights[i];
    }
  }
  if (language) {
    DiscriminatorBackward disc = discriminator_backward(params, trace, *language);
    g.values.disc_layer = std::move(disc.own.values.disc_layer);
    g.values.disc_weights = std::move(disc.own.values.disc_weights);
    if (lambda != 0.0) joint_grad = joint_grad + reverse_gradient(disc.joint_grad, lambda);
  }
  backprop_shared(params, trace, joint_grad, g);
  return g;
}

double predict_score(const ModelParams& params, const Vector& z_q, const Vector& z_rel,
                     const Vector& features) {
  return forward(params, z_q, z_rel, features, std::nullopt).task_prob;
}

}  // namespace clann
