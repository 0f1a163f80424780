#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

// Differentiable operations over NCHW tensors. Stride-1 cross-correlation
// with square odd kernels only; accumulation order is fixed (channel, then
// kernel row, then kernel column) so results are bit-reproducible.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int64_t padding);

// Affine map: input [N,Din] x weight [Dout,Din] + bias [Dout].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);                          // relu'(0) = 0
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);

// Non-overlapping 2x2 mean; equals a bilinear half-scale resample at
// half-pixel centers. Requires even H and W.
Tensor avg_pool2(const Tensor& x);

// Bilinear x2 upsample, half-pixel centers (align_corners=false).
Tensor upsample2_bilinear(const Tensor& x);

// [N,C,H,W] -> [N,C]; row-major summation order.
Tensor global_avg_pool(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor abs_elem(const Tensor& a);

Tensor slice_channels(const Tensor& x, int64_t c0, int64_t c1);
Tensor crop_spatial(const Tensor& x, int64_t r0, int64_t c0, int64_t h, int64_t w);
Tensor pad_reflect(const Tensor& x, int64_t bottom, int64_t right);

// Depth-to-space: [N, C*r*r, H, W] -> [N, C, H*r, W*r].
Tensor pixel_shuffle(const Tensor& x, int64_t r);

// Identity with the graph link severed.
Tensor detach(const Tensor& x);

// Element i of a flattened tensor as a scalar node.
Tensor gather_scalar(const Tensor& x, int64_t index);

// (1-t)*a + t*b with scalar t; gradient flows to a, b and t.
Tensor blend(const Tensor& a, const Tensor& b, const Tensor& t);

// k*x + d on a scalar.
Tensor affine_scalar(const Tensor& x, double k, double d);

Tensor sum_all(const Tensor& x);                 // scalar
Tensor sum_abs(const Tensor& x);                 // scalar, sign subgradient
Tensor euclid_norm(const Tensor& x);             // scalar ||x||_2, subgradient 0 at 0
Tensor l1_mean(const Tensor& a, const Tensor& b);  // scalar mean |a-b|

// Forward-only resamplers (no gradient; reject inputs that need one).
// Catmull-Rom bicubic (a = -0.5) and bilinear, both at half-pixel centers,
// point-sampled without an antialiasing prefilter. Output dims are
// round(dim * scale) and must be >= 1.
Tensor resize_bicubic(const Tensor& x, double scale);
Tensor resize_bilinear(const Tensor& x, double scale);

// Same resamplers with an explicit target size (per-axis scale factors).
Tensor resize_bicubic_to(const Tensor& x, int64_t out_h, int64_t out_w);
Tensor resize_bilinear_to(const Tensor& x, int64_t out_h, int64_t out_w);

void clamp01_(Tensor& x);

}  // namespace dcs
