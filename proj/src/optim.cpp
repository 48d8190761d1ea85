#include "clann/optim.hpp"

#include <algorithm>
#include <cmath>

#include "clann/error.hpp"

namespace clann {

AdamState::AdamState(const ModelDims& dims, AdamHyper hyper)
    : hyper_(hyper), first_(ModelParams::zeros(dims)), second_(ModelParams::zeros(dims)) {}

void AdamState::step(ModelParams& params, const Gradients& grads, double l2_strength,
                     const BlockMask& active) {
  if (!(params.dims == first_.dims) || !(grads.values.dims == first_.dims)) {
    throw ValidationError("adam_step: parameter, gradient and state shapes differ");
  }
  ++timestep_;
  const double t = static_cast<double>(timestep_);
  const double correction1 = 1.0 - std::pow(hyper_.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper_.beta2, t);

  auto p_blocks = params.blocks();
  const auto g_blocks = grads.values.blocks();
  auto m_blocks = first_.blocks();
  auto v_blocks = second_.blocks();
  for (std::size_t b = 0; b < ModelParams::kBlockCount; ++b) {
    if (!active[b]) continue;
    auto p = p_blocks[b];
    const auto g = g_blocks[b];
    auto m = m_blocks[b];
    auto v = v_blocks[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double grad = g[i] + 2.0 * l2_strength * p[i];
      m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * grad;
      v[i] = hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * grad * grad;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= hyper_.learning_rate * m_hat / (std::sqrt(v_hat) + hyper_.epsilon);
    }
  }
}

double lambda_at(const LambdaSchedule& schedule, std::size_t step) {
  if (schedule.total_steps == 0) throw ValidationError("lambda schedule needs total_steps > 0");
  const double p = std::clamp(
      static_cast<double>(step) / static_cast<double>(schedule.total_steps), 0.0, 1.0);
  return 2.0 / (1.0 + std::exp(-schedule.gamma * p)) - 1.0;
}

}  // namespace clann
