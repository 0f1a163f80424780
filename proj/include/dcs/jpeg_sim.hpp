#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

// Simulated JPEG round trip: RGB -> full-range YCbCr, 8x8 orthonormal DCT,
// quantization with the Annex-K tables scaled by libjpeg's quality rule,
// dequantize, inverse DCT, back to RGB, clamp. 4:4:4 (no chroma
// subsampling); images whose sides are not multiples of 8 are edge-padded
// internally and cropped back.
Tensor jpeg_degrade(const Tensor& image, int quality);

// Annex-K table scaled for the given quality; index 0 = luma, 1 = chroma.
void jpeg_quant_table(int quality, int which, int out[64]);

}  // namespace dcs
