#include "dcs/loc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcs/ops.hpp"

namespace dcs {
namespace {

// Rows [r0,r1) x input-channel columns [c0,c1) of a [C,C,k,k] kernel.
Tensor kernel_slice(const Tensor& kernel, int64_t r0, int64_t r1, int64_t c0, int64_t c1) {
  const int64_t Ci = kernel.dim(1), k = kernel.dim(2);
  const int64_t rows = r1 - r0, cols = c1 - c0, kk = k * k;
  auto out_node = std::make_shared<TensorNode>();
  out_node->shape = {rows, cols, k, k};
  out_node->value.resize(rows * cols * kk);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c)
      std::copy_n(kernel.data() + ((r0 + r) * Ci + c0 + c) * kk, kk,
                  out_node->value.data() + (r * cols + c) * kk);
  if (kernel.needs_grad()) {
    out_node->needs_grad = true;
    out_node->parents = {kernel.node()};
    TensorNode* o = out_node.get();
    TensorNode* kn = kernel.node().get();
    out_node->backward = [o, kn, r0, c0, Ci, rows, cols, kk]() {
      kn->ensure_grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) {
          const double* g = o->grad.data() + (r * cols + c) * kk;
          double* gi = kn->grad.data() + ((r0 + r) * Ci + c0 + c) * kk;
          for (int64_t i = 0; i < kk; ++i) gi[i] += g[i];
        }
    };
  }
  Tensor t;
  t.node() = std::move(out_node);
  return t;
}

Tensor bias_slice(const Tensor& bias, int64_t c0, int64_t c1) {
  auto out_node = std::make_shared<TensorNode>();
  out_node->shape = {c1 - c0};
  out_node->value.assign(bias.data() + c0, bias.data() + c1);
  if (bias.needs_grad()) {
    out_node->needs_grad = true;
    out_node->parents = {bias.node()};
    TensorNode* o = out_node.get();
    TensorNode* bn = bias.node().get();
    out_node->backward = [o, bn, c0]() {
      bn->ensure_grad();
      for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[c0 + i] += o->grad[i];
    };
  }
  Tensor t;
  t.node() = std::move(out_node);
  return t;
}

}  // namespace

LocBlockParams make_loc_params(int64_t channels, int64_t kernel_size, Rng& rng, double init_scale) {
  const double stddev = init_scale * std::sqrt(2.0 / double(channels * kernel_size * kernel_size));
  LocBlockParams p;
  p.conv1_kernel = Tensor::randn({channels, channels, kernel_size, kernel_size}, rng, stddev, true);
  p.conv1_bias = Tensor::zeros({channels}, true);
  p.conv2_kernel = Tensor::randn({channels, channels, kernel_size, kernel_size}, rng, stddev, true);
  p.conv2_bias = Tensor::zeros({channels}, true);
  return p;
}

int64_t hi_channels(double a, int64_t channels) {
  const auto floor_ac = static_cast<int64_t>(std::floor(a * double(channels)));
  return std::clamp<int64_t>(floor_ac, 1, channels);
}

SplitFeatures split_input(const Tensor& input, double a) {
  if (input.rank() != 4)
    throw std::invalid_argument("split_input: expected [N,c,H,W], got " + shape_str(input.shape()));
  const int64_t c = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (c < 2) throw std::invalid_argument("split_input: need at least 2 channels");
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("split_input: spatial dims must be even, got " +
                                shape_str(input.shape()));
  const int64_t h = hi_channels(a, c);
  SplitFeatures out;
  out.high = h == c ? input : slice_channels(input, 0, h);
  if (h < c) out.low = avg_pool2(slice_channels(input, h, c));
  return out;
}

Tensor loc_forward_at(const Tensor& input, const LocBlockParams& params, int64_t h) {
  const int64_t c = input.dim(1);
  const int64_t k = params.conv1_kernel.dim(2);
  const int64_t pad = (k - 1) / 2;
  if (params.conv1_kernel.dim(0) != c)
    throw std::invalid_argument("loc_forward: kernel " + shape_str(params.conv1_kernel.shape()) +
                                " does not match input " + shape_str(input.shape()));
  SplitFeatures split = split_input(input, double(h) / double(c));

  Tensor out_high;
  if (h == c) {
    // Degenerate all-high path: a plain two-conv residual block.
    const Tensor o_h = relu(conv2d(split.high, params.conv1_kernel, params.conv1_bias, pad));
    out_high = relu(conv2d(o_h, params.conv2_kernel, params.conv2_bias, pad));
  } else {
    const Tensor w1_hh = kernel_slice(params.conv1_kernel, 0, h, 0, h);
    const Tensor w1_lh = kernel_slice(params.conv1_kernel, 0, h, h, c);
    const Tensor w1_hl = kernel_slice(params.conv1_kernel, h, c, 0, h);
    const Tensor w1_ll = kernel_slice(params.conv1_kernel, h, c, h, c);
    const Tensor b1_h = bias_slice(params.conv1_bias, 0, h);
    const Tensor b1_l = bias_slice(params.conv1_bias, h, c);
    const Tensor zero_h = Tensor::zeros({h});
    const Tensor zero_l = Tensor::zeros({c - h});

    const Tensor o_h = relu(add(conv2d(split.high, w1_hh, b1_h, pad),
                                upsample2_bilinear(conv2d(split.low, w1_lh, zero_h, pad))));
    const Tensor o_l = relu(add(conv2d(split.low, w1_ll, b1_l, pad),
                                conv2d(avg_pool2(split.high), w1_hl, zero_l, pad)));

    const Tensor w2_hh = kernel_slice(params.conv2_kernel, 0, c, 0, h);
    const Tensor w2_lh = kernel_slice(params.conv2_kernel, 0, c, h, c);
    const Tensor zero_c = Tensor::zeros({c});
    out_high = relu(add(conv2d(o_h, w2_hh, params.conv2_bias, pad),
                        upsample2_bilinear(conv2d(o_l, w2_lh, zero_c, pad))));
  }
  return add(input, out_high);
}

Tensor loc_forward(const Tensor& input, const LocBlockParams& params, const Tensor& ratio,
                   LocGradMode mode) {
  if (ratio.numel() != 1)
    throw std::invalid_argument("loc_forward: ratio must be scalar, got " + shape_str(ratio.shape()));
  const double a = ratio.item();
  if (a < 0.0 || a > 1.0)
    throw std::invalid_argument("loc_forward: ratio " + std::to_string(a) + " outside [0,1]");
  const int64_t c = input.dim(1);
  const int64_t h = hi_channels(a, c);

  if (mode == LocGradMode::hard || !ratio.needs_grad()) return loc_forward_at(input, params, h);

  // Boundary-channel relaxation: blend the two adjacent hard splits with the
  // fractional gate; the gate is affine in the ratio, so dgate/da = c.
  const auto floor_ac = static_cast<int64_t>(std::floor(a * double(c)));
  const int64_t lo = std::clamp<int64_t>(floor_ac, 1, c);
  const int64_t hi = std::clamp<int64_t>(floor_ac + 1, 1, c);
  if (lo == hi) return loc_forward_at(input, params, lo);
  const Tensor gate = affine_scalar(ratio, double(c), -double(floor_ac));
  return blend(loc_forward_at(input, params, lo), loc_forward_at(input, params, hi), gate);
}

}  // namespace dcs
