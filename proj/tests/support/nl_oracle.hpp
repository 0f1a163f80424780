#pragma once

// Scalar re-implementation of the non-local regularizer: distance sums over
// the query and its K matches in both spaces (i = 0 term against the zero
// patch), absolute difference, divided by max(K, 1).

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dcs/loss.hpp"
#include "dcs/tensor.hpp"

namespace oracle {

inline double patch_dist_ref(const dcs::Tensor& img, dcs::PatchPos a, dcs::PatchPos b, int64_t p) {
  const int64_t h = img.dim(img.rank() - 2), w = img.dim(img.rank() - 1);
  const int64_t lead = img.numel() / (h * w);
  double acc = 0.0;
  for (int64_t c = 0; c < lead; ++c)
    for (int64_t y = 0; y < p; ++y)
      for (int64_t x = 0; x < p; ++x) {
        const double d = img.data()[(c * h + a.row + y) * w + a.col + x] -
                         img.data()[(c * h + b.row + y) * w + b.col + x];
        acc += d * d;
      }
  return std::sqrt(acc);
}

inline double patch_norm_ref(const dcs::Tensor& img, dcs::PatchPos a, int64_t p) {
  const int64_t h = img.dim(img.rank() - 2), w = img.dim(img.rank() - 1);
  const int64_t lead = img.numel() / (h * w);
  double acc = 0.0;
  for (int64_t c = 0; c < lead; ++c)
    for (int64_t y = 0; y < p; ++y)
      for (int64_t x = 0; x < p; ++x) {
        const double v = img.data()[(c * h + a.row + y) * w + a.col + x];
        acc += v * v;
      }
  return std::sqrt(acc);
}

inline double l_nonlocal_ref(const dcs::Tensor& lr, const dcs::Tensor& sr,
                             const dcs::PatchIndex& idx, int64_t s) {
  const int64_t p = idx.patch;
  double lr_sum = patch_norm_ref(lr, idx.query, p);
  for (const auto& m : idx.matches) lr_sum += patch_dist_ref(lr, idx.query, m, p);

  const dcs::PatchPos q{idx.query.row * s, idx.query.col * s};
  double sr_sum = patch_norm_ref(sr, q, p * s);
  for (const auto& m : idx.matches)
    sr_sum += patch_dist_ref(sr, q, {m.row * s, m.col * s}, p * s);

  const auto k = static_cast<int64_t>(idx.matches.size());
  // normalizer applied as a factor, matching the declared convention
  return std::fabs(lr_sum - sr_sum) * (1.0 / double(std::max<int64_t>(k, 1)));
}

}  // namespace oracle
