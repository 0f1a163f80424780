#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dcs/tensor.hpp"

namespace dcs {

// Balancing weights of the composite objective. The perceptual and
// adversarial slots exist for extension but default to zero and no such
// terms ship here.
struct LossWeights {
  double lambda1 = 1.0;   // degradation regression
  double lambda2 = 0.0;   // perceptual (slot only)
  double lambda3 = 0.0;   // adversarial (slot only)
  double lambda4 = 1.0;   // non-local
  double lambda5 = 0.25;  // split sparsity
};

// Mean absolute error over all elements; sign subgradient, zero at ties.
Tensor l_pix(const Tensor& sr, const Tensor& hr);
Tensor l_reg(const Tensor& u_hat, const Tensor& u);

// Sum of |a_i| (the split ratios are sigmoid outputs, so this is their sum).
Tensor l_sparsity(const Tensor& a);

struct PatchPos {
  int64_t row;
  int64_t col;
};

// Query position plus its K nearest patches on the stride grid, sorted by
// ascending Euclidean distance with lexicographic (row, col) tie-breaks.
struct PatchIndex {
  PatchPos query;
  std::vector<PatchPos> matches;
  int64_t patch = 16;   // LR-space patch side
  int64_t stride = 4;
};

// Candidates are every stride-grid position where a patch x patch window
// fits, excluding the query itself. Throws when fewer than K remain.
PatchIndex knn_patches(const Tensor& lr_patch, PatchPos query, int64_t patch, int64_t stride,
                       int64_t k);

// Query/neighbour distance-sum mismatch between the LR patch and the SR
// patch (positions and sides scaled by `scale`). The i = 0 terms compare
// against the zero patch; the normalizer is max(K, 1). Gradient flows into
// the SR side only. `per_pixel_normalize` divides every distance by
// sqrt(pixel count), making the self-norm terms resolution-independent.
Tensor l_nonlocal(const Tensor& lr_patch, const Tensor& sr_patch, const PatchIndex& index,
                  int64_t sr_scale, bool per_pixel_normalize = false);

struct LossTerms {
  Tensor pix;
  Tensor reg;        // optional; undefined when the stage has no predictor
  Tensor nonlocal;   // optional
  Tensor sparsity;   // optional
  Tensor perceptual; // extension slot
  Tensor adversarial;// extension slot
};

// L = pix + l1*reg + l2*per + l3*adv + l4*nl + l5*sparsity over the defined
// terms.
Tensor composite_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace dcs
