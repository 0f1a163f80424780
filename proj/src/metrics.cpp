#include "dcs/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dcs/ops.hpp"

namespace dcs {

Tensor rgb_to_y(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("rgb_to_y: expected [3,H,W], got " + shape_str(image.shape()));
  const int64_t h = image.dim(1), w = image.dim(2), hw = h * w;
  Tensor y({h, w}, 0.0, false);
  const double* r = image.data();
  const double* g = image.data() + hw;
  const double* b = image.data() + 2 * hw;
  for (int64_t i = 0; i < hw; ++i) y.data()[i] = 65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0;
  return y;
}

double psnr(const Tensor& x, const Tensor& y, double peak) {
  if (x.shape() != y.shape())
    throw std::invalid_argument("psnr: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(y.shape()));
  double mse = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double d = x.data()[i] - y.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& x, const Tensor& y, double peak) {
  if (x.shape() != y.shape())
    throw std::invalid_argument("ssim: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(y.shape()));
  if (x.rank() != 2) throw std::invalid_argument("ssim: expected [H,W], got " + shape_str(x.shape()));
  const int64_t h = x.dim(0), w = x.dim(1);
  constexpr int kWin = 11;
  if (h < kWin || w < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  static const std::vector<double> window = [] {
    std::vector<double> w(kWin * kWin);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i)
      for (int j = 0; j < kWin; ++j) {
        const double dy = i - 5, dx = j - 5;
        w[i * kWin + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        sum += w[i * kWin + j];
      }
    for (auto& v : w) v /= sum;
    return w;
  }();

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  int64_t count = 0;
  for (int64_t oy = 0; oy + kWin <= h; ++oy)
    for (int64_t ox = 0; ox + kWin <= w; ++ox) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
          const double wgt = window[i * kWin + j];
          const double a = x.data()[(oy + i) * w + ox + j];
          const double b = y.data()[(oy + i) * w + ox + j];
          mx += wgt * a;
          my += wgt * b;
          sxx += wgt * a * a;
          syy += wgt * b * b;
          sxy += wgt * a * b;
        }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

YMetrics y_channel_metrics(const Tensor& rgb_a, const Tensor& rgb_b, int64_t border) {
  Tensor a = rgb_a, b = rgb_b;
  if (border > 0) {
    const int64_t h = rgb_a.dim(1), w = rgb_a.dim(2);
    a = crop_spatial(rgb_a, border, border, h - 2 * border, w - 2 * border);
    b = crop_spatial(rgb_b, border, border, h - 2 * border, w - 2 * border);
  }
  const Tensor ya = rgb_to_y(a), yb = rgb_to_y(b);
  return {psnr(ya, yb, 255.0), ssim(ya, yb, 255.0)};
}

}  // namespace dcs
