#pragma once

#include "dcs/tensor.hpp"

namespace dcs {

// BT.601 luma with legal-range offsets: Y = 65.481 R + 128.553 G + 24.966 B + 16
// for RGB in [0,1]; output lives on the 0..255 scale (16..235 for valid input).
Tensor rgb_to_y(const Tensor& image);

// 10*log10(peak^2 / MSE); +inf when the images are identical.
double psnr(const Tensor& x, const Tensor& y, double peak);

// Single-channel SSIM: 11x11 Gaussian window (sigma 1.5), C1=(0.01*peak)^2,
// C2=(0.03*peak)^2, mean over valid windows only.
double ssim(const Tensor& x, const Tensor& y, double peak);

// Standard SR evaluation protocol: crop `border` pixels per side, then
// PSNR/SSIM on the Y channel at peak 255.
struct YMetrics {
  double psnr;
  double ssim;
};
YMetrics y_channel_metrics(const Tensor& rgb_a, const Tensor& rgb_b, int64_t border);

}  // namespace dcs
