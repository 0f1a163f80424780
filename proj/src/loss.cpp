#include "dcs/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcs/ops.hpp"

namespace dcs {

Tensor l_pix(const Tensor& sr, const Tensor& hr) { return l1_mean(sr, hr); }

Tensor l_reg(const Tensor& u_hat, const Tensor& u) { return l1_mean(u_hat, u); }

Tensor l_sparsity(const Tensor& a) { return sum_abs(a); }

namespace {

int64_t spatial_h(const Tensor& t) { return t.dim(t.rank() - 2); }
int64_t spatial_w(const Tensor& t) { return t.dim(t.rank() - 1); }

double patch_distance(const Tensor& img, PatchPos a, PatchPos b, int64_t p) {
  const int64_t h = spatial_h(img), w = spatial_w(img);
  const int64_t lead = img.numel() / (h * w);
  double acc = 0.0;
  for (int64_t c = 0; c < lead; ++c)
    for (int64_t y = 0; y < p; ++y) {
      const double* ra = img.data() + (c * h + a.row + y) * w + a.col;
      const double* rb = img.data() + (c * h + b.row + y) * w + b.col;
      for (int64_t x = 0; x < p; ++x) {
        const double d = ra[x] - rb[x];
        acc += d * d;
      }
    }
  return std::sqrt(acc);
}

}  // namespace

PatchIndex knn_patches(const Tensor& lr_patch, PatchPos query, int64_t patch, int64_t stride,
                       int64_t k) {
  if (k < 0) throw std::invalid_argument("knn_patches: K must be >= 0");
  if (stride < 1) throw std::invalid_argument("knn_patches: stride must be >= 1");
  const int64_t h = spatial_h(lr_patch), w = spatial_w(lr_patch);
  if (query.row < 0 || query.col < 0 || query.row + patch > h || query.col + patch > w)
    throw std::invalid_argument("knn_patches: query window out of bounds");

  struct Cand {
    double dist;
    PatchPos pos;
  };
  std::vector<Cand> cands;
  for (int64_t r = 0; r + patch <= h; r += stride)
    for (int64_t c = 0; c + patch <= w; c += stride) {
      if (r == query.row && c == query.col) continue;
      cands.push_back({patch_distance(lr_patch, query, {r, c}, patch), {r, c}});
    }
  if (static_cast<int64_t>(cands.size()) < k)
    throw std::invalid_argument("knn_patches: only " + std::to_string(cands.size()) +
                                " candidates for K=" + std::to_string(k));
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.pos.row != b.pos.row) return a.pos.row < b.pos.row;
    return a.pos.col < b.pos.col;
  });

  PatchIndex out;
  out.query = query;
  out.patch = patch;
  out.stride = stride;
  out.matches.reserve(k);
  for (int64_t i = 0; i < k; ++i) out.matches.push_back(cands[i].pos);
  return out;
}

Tensor l_nonlocal(const Tensor& lr_patch, const Tensor& sr_patch, const PatchIndex& index,
                  int64_t sr_scale, bool per_pixel_normalize) {
  const int64_t p = index.patch, ps = p * sr_scale;
  const int64_t k = static_cast<int64_t>(index.matches.size());
  const int64_t lead_lr = lr_patch.numel() / (spatial_h(lr_patch) * spatial_w(lr_patch));
  const int64_t lead_sr = sr_patch.numel() / (spatial_h(sr_patch) * spatial_w(sr_patch));
  const double lr_div = per_pixel_normalize ? std::sqrt(double(lead_lr * p * p)) : 1.0;
  const double sr_div = per_pixel_normalize ? std::sqrt(double(lead_sr * ps * ps)) : 1.0;

  // LR side is data: plain accumulation, no graph.
  double lr_sum = 0.0;
  {
    // i = 0 term: distance to the zero patch, i.e. the query's own norm.
    double acc = 0.0;
    const int64_t h = spatial_h(lr_patch), w = spatial_w(lr_patch);
    for (int64_t c = 0; c < lead_lr; ++c)
      for (int64_t y = 0; y < p; ++y)
        for (int64_t x = 0; x < p; ++x) {
          const double v = lr_patch.data()[(c * h + index.query.row + y) * w + index.query.col + x];
          acc += v * v;
        }
    lr_sum += std::sqrt(acc) / lr_div;
  }
  for (const auto& m : index.matches) lr_sum += patch_distance(lr_patch, index.query, m, p) / lr_div;

  // SR side through the graph so gradients reach sr_patch.
  const PatchPos q_sr{index.query.row * sr_scale, index.query.col * sr_scale};
  const Tensor q = crop_spatial(sr_patch, q_sr.row, q_sr.col, ps, ps);
  Tensor sr_sum = scale(euclid_norm(q), 1.0 / sr_div);
  for (const auto& m : index.matches) {
    const Tensor e = crop_spatial(sr_patch, m.row * sr_scale, m.col * sr_scale, ps, ps);
    sr_sum = add(sr_sum, scale(euclid_norm(sub(q, e)), 1.0 / sr_div));
  }

  const double norm = 1.0 / double(std::max<int64_t>(k, 1));
  return scale(abs_elem(sub(Tensor::scalar(lr_sum), sr_sum)), norm);
}

Tensor composite_loss(const LossTerms& terms, const LossWeights& weights) {
  if (!terms.pix.defined()) throw std::invalid_argument("composite_loss: pixel term is required");
  Tensor total = terms.pix;
  auto mix = [&total](const Tensor& t, double lambda) {
    if (t.defined() && lambda != 0.0) total = add(total, scale(t, lambda));
  };
  mix(terms.reg, weights.lambda1);
  mix(terms.perceptual, weights.lambda2);
  mix(terms.adversarial, weights.lambda3);
  mix(terms.nonlocal, weights.lambda4);
  mix(terms.sparsity, weights.lambda5);
  return total;
}

}  // namespace dcs
