#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

// Procedural RGB test image: smooth gradients plus random sinusoids,
// rectangles and soft disks, so both low- and high-frequency content is
// present. Deterministic per seed; values in [0,1].
Tensor synth_hr_image(uint64_t seed, int64_t height, int64_t width);

}  // namespace dcs
