#pragma once

#include <vector>

#include "dcs/tensor.hpp"

namespace dcs {

// Bias-corrected Adam over a fixed parameter list. Moment buffers mirror the
// parameter shapes; `step` counts completed updates.
struct AdamState {
  int64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const std::vector<Tensor>& params, double learning_rate);

// One update from the gradients currently stored on the parameters.
// Parameters without an allocated gradient are treated as zero-grad.
void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace dcs
