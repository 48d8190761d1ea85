#pragma once

#include <array>
#include <cstddef>

#include "clann/model.hpp"

namespace clann {

struct AdamHyper {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using BlockMask = std::array<bool, ModelParams::kBlockCount>;
inline constexpr BlockMask kAllBlocks = {true, true, true, true, true};

class AdamState {
 public:
  AdamState(const ModelDims& dims, AdamHyper hyper = {});

  const AdamHyper& hyper() const { return hyper_; }
  std::size_t timestep() const { return timestep_; }
  const ModelParams& first_moment() const { return first_; }
  const ModelParams& second_moment() const { return second_; }

  // One bias-corrected ADAM update on the blocks selected by `active`.
  // The L2 term adds 2 * l2_strength * param to each gradient entry first.
  // The timestep advances even for blocks left untouched.
  void step(ModelParams& params, const Gradients& grads, double l2_strength,
            const BlockMask& active = kAllBlocks);

 private:
  AdamHyper hyper_;
  ModelParams first_;
  ModelParams second_;
  std::size_t timestep_ = 0;
};

inline void adam_step(AdamState& state, ModelParams& params, const Gradients& grads,
                      double l2_strength, const BlockMask& active = kAllBlocks) {
  state.step(params, grads, l2_strength, active);
}

// lambda(p) = 2 / (1 + exp(-gamma * p)) - 1, p = step / total_steps.
struct LambdaSchedule {
  double gamma = 10.0;
  std::size_t total_steps = 1;
};

double lambda_at(const LambdaSchedule& schedule, std::size_t step);

}  // namespace clann
