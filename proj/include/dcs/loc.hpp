#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

// Learnable octave convolution block. The first conv kernel [c,c,k,k] is
// sliced at the split point into the four intra-/inter-frequency parts, the
// second kernel [c,c,k,k] along its input dimension into the two merge
// parts; biases are one c-vector per conv. Low-frequency features live at
// half resolution (bilinear half-scale at half-pixel centers, i.e. the 2x2
// mean).
struct LocBlockParams {
  Tensor conv1_kernel;  // [c,c,k,k]
  Tensor conv1_bias;    // [c]
  Tensor conv2_kernel;  // [c,c,k,k]
  Tensor conv2_bias;    // [c]
};

LocBlockParams make_loc_params(int64_t channels, int64_t kernel_size, Rng& rng, double init_scale);

// Channels assigned to the high-frequency branch: clamp(floor(a*c), 1, c).
int64_t hi_channels(double a, int64_t channels);

enum class LocGradMode { hard, ste };

// High part = first h channels at full resolution; low part = remaining
// channels at half resolution. a = 1 leaves the low branch empty.
struct SplitFeatures {
  Tensor high;
  Tensor low;  // undefined tensor when the low branch is empty
};
SplitFeatures split_input(const Tensor& input, double a);

// Block forward for a fixed split count h (both convs, merge, residual add).
Tensor loc_forward_at(const Tensor& input, const LocBlockParams& params, int64_t h);

// Block forward with the split driven by a scalar ratio tensor. In `hard`
// mode the ratio value picks the split and receives no gradient. In `ste`
// mode the two adjacent hard splits are blended by the fractional part
// g = a*c - floor(a*c); the blend weight is affine in `a` (dg/da = c), so
// reconstruction gradients reach `a` through the boundary channel while the
// value agrees with the hard forward whenever a*c is integral.
Tensor loc_forward(const Tensor& input, const LocBlockParams& params, const Tensor& ratio,
                   LocGradMode mode);

}  // namespace dcs
