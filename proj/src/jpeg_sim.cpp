#include "dcs/jpeg_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dcs {
namespace {

// ISO/IEC 10918-1 Annex K sample quantization tables.
constexpr int kLumaTable[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr int kChromaTable[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct DctBasis {
  double cosine[8][8];  // cosine[u][x] = c(u) * cos((2x+1) u pi / 16)
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x)
        cosine[u][x] = cu * std::cos((2.0 * x + 1.0) * u * M_PI / 16.0);
    }
  }
};

const DctBasis& basis() {
  static DctBasis b;
  return b;
}

// Separable orthonormal 2D DCT-II on an 8x8 block, forward or inverse.
void dct8x8(const double in[64], double out[64], bool inverse) {
  const auto& cs = basis().cosine;
  double tmp[64];
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * (inverse ? cs[x][u] : cs[u][x]);
      tmp[y * 8 + u] = acc;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * (inverse ? cs[y][v] : cs[v][y]);
      out[v * 8 + u] = acc;
    }
}

}  // namespace

void jpeg_quant_table(int quality, int which, int out[64]) {
  if (quality < 1 || quality > 100) throw std::invalid_argument("jpeg: quality outside [1,100]");
  const int* base = which == 0 ? kLumaTable : kChromaTable;
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  for (int i = 0; i < 64; ++i)
    out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
}

Tensor jpeg_degrade(const Tensor& image, int quality) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("jpeg_degrade: expected [3,H,W], got " + shape_str(image.shape()));
  if (quality < 10 || quality > 95)
    throw std::invalid_argument("jpeg_degrade: quality outside [10,95]");
  const int64_t h = image.dim(1), w = image.dim(2);
  const int64_t hp = (h + 7) / 8 * 8, wp = (w + 7) / 8 * 8;

  // YCbCr planes on the 0..255 scale, edge-replicated to 8x8 multiples.
  std::vector<double> planes(3 * hp * wp);
  for (int64_t y = 0; y < hp; ++y)
    for (int64_t x = 0; x < wp; ++x) {
      const int64_t sy = std::min(y, h - 1), sx = std::min(x, w - 1);
      const double r = 255.0 * image.data()[(0 * h + sy) * w + sx];
      const double g = 255.0 * image.data()[(1 * h + sy) * w + sx];
      const double b = 255.0 * image.data()[(2 * h + sy) * w + sx];
      planes[0 * hp * wp + y * wp + x] = 0.299 * r + 0.587 * g + 0.114 * b;
      planes[1 * hp * wp + y * wp + x] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
      planes[2 * hp * wp + y * wp + x] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
    }

  int qtab[2][64];
  jpeg_quant_table(quality, 0, qtab[0]);
  jpeg_quant_table(quality, 1, qtab[1]);

  for (int c = 0; c < 3; ++c) {
    double* plane = planes.data() + c * hp * wp;
    const int* qt = qtab[c == 0 ? 0 : 1];
    for (int64_t by = 0; by < hp; by += 8)
      for (int64_t bx = 0; bx < wp; bx += 8) {
        double block[64], coef[64];
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) block[i * 8 + j] = plane[(by + i) * wp + bx + j] - 128.0;
        dct8x8(block, coef, false);
        for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / qt[i]) * qt[i];
        dct8x8(coef, block, true);
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) plane[(by + i) * wp + bx + j] = block[i * 8 + j] + 128.0;
      }
  }

  Tensor out({3, h, w}, 0.0, false);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const double yy = planes[0 * hp * wp + y * wp + x];
      const double cb = planes[1 * hp * wp + y * wp + x] - 128.0;
      const double cr = planes[2 * hp * wp + y * wp + x] - 128.0;
      const double r = yy + 1.402 * cr;
      const double g = yy - 0.344136 * cb - 0.714136 * cr;
      const double b = yy + 1.772 * cb;
      out.data()[(0 * h + y) * w + x] = std::clamp(r / 255.0, 0.0, 1.0);
      out.data()[(1 * h + y) * w + x] = std::clamp(g / 255.0, 0.0, 1.0);
      out.data()[(2 * h + y) * w + x] = std::clamp(b / 255.0, 0.0, 1.0);
    }
  return out;
}

}  // namespace dcs
