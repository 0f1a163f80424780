#include "dcs/synth_image.hpp"

#include <algorithm>
#include <cmath>

#include "dcs/ops.hpp"

namespace dcs {

Tensor synth_hr_image(uint64_t seed, int64_t height, int64_t width) {
  Rng rng(seed, 0x1479);
  Tensor img({3, height, width}, 0.0, false);

  // Base gradient per channel.
  double gx[3], gy[3], off[3];
  for (int c = 0; c < 3; ++c) {
    gx[c] = rng.uniform(-0.3, 0.3);
    gy[c] = rng.uniform(-0.3, 0.3);
    off[c] = rng.uniform(0.3, 0.7);
  }
  for (int c = 0; c < 3; ++c)
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x)
        img.data()[(c * height + y) * width + x] =
            off[c] + gx[c] * (double(x) / width - 0.5) + gy[c] * (double(y) / height - 0.5);

  // Sinusoidal texture.
  const int waves = 3 + int(rng.uniform_int(3));
  for (int s = 0; s < waves; ++s) {
    const double fx = rng.uniform(0.5, 7.0) * 2.0 * M_PI / double(width);
    const double fy = rng.uniform(0.5, 7.0) * 2.0 * M_PI / double(height);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    double amp[3];
    for (int c = 0; c < 3; ++c) amp[c] = rng.uniform(0.02, 0.10);
    for (int c = 0; c < 3; ++c)
      for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x)
          img.data()[(c * height + y) * width + x] += amp[c] * std::sin(fx * x + fy * y + phase);
  }

  // Hard-edged rectangles and soft disks.
  const int shapes = 4 + int(rng.uniform_int(4));
  for (int s = 0; s < shapes; ++s) {
    const bool rect = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.1, 0.9) * width;
    const double cy = rng.uniform(0.1, 0.9) * height;
    const double rx = rng.uniform(0.04, 0.22) * width;
    const double ry = rng.uniform(0.04, 0.22) * height;
    double delta[3];
    for (int c = 0; c < 3; ++c) delta[c] = rng.uniform(-0.35, 0.35);
    for (int c = 0; c < 3; ++c)
      for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x) {
          double m;
          if (rect) {
            m = (std::fabs(x - cx) <= rx && std::fabs(y - cy) <= ry) ? 1.0 : 0.0;
          } else {
            const double d = std::hypot((x - cx) / rx, (y - cy) / ry);
            m = std::clamp(1.5 - d, 0.0, 1.0);
          }
          if (m > 0.0) img.data()[(c * height + y) * width + x] += m * delta[c];
        }
  }

  clamp01_(img);
  return img;
}

}  // namespace dcs
