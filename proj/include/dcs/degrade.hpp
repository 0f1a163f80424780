#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dcs/rng.hpp"
#include "dcs/tensor.hpp"

namespace dcs {

enum class DegradationLevel { S0, S1, S2, S3 };

DegradationLevel level_from_string(const std::string& s);
std::string level_to_string(DegradationLevel level);

enum class BlurKind { none, isotropic, anisotropic };
enum class ResizeMode { none, bilinear, bicubic };
enum class NoiseKind { none, gaussian, poisson };

struct StageParams {
  BlurKind blur_kind = BlurKind::none;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double theta = 0.0;  // radians in [0, pi)
  ResizeMode resize_mode = ResizeMode::none;
  double resize_scale = 1.0;
  NoiseKind noise_kind = NoiseKind::none;
  double noise_level = 0.0;  // gaussian: std in [0,1] units; poisson: scale
  bool jpeg_applied = false;
  int jpeg_quality = 95;
};

// S0 carries no stages (final bicubic resize only); S1/S2 one stage; S3 two.
struct DegradationRecipe {
  DegradationLevel level = DegradationLevel::S0;
  std::vector<StageParams> stages;
  ResizeMode final_resize_mode = ResizeMode::bicubic;
  int sr_scale = 4;
};

// Fixed 33-slot encoding: 15 slots per stage
//   [applied, blur iso, blur aniso, sigma_x, sigma_y, theta,
//    resize bilinear, resize bicubic, resize none, resize_scale,
//    noise gaussian, noise poisson, noise_level, jpeg applied, jpeg quality]
// for two stages, then 3 global slots
//   [final bilinear, final bicubic, sr_scale].
// Continuous entries are normalized by the global dynamic ranges below;
// slots of absent operations are zero.
struct DegradationVector {
  std::array<double, 33> values{};
  static constexpr int kLayoutVersion = 1;
};

// Global dynamic ranges used for vector normalization (the union of the
// per-level sampling ranges).
struct DegradationRanges {
  static constexpr double sigma_lo = 0.2, sigma_hi = 3.0;
  static constexpr double gauss_lo = 1.0 / 255.0, gauss_hi = 25.0 / 255.0;
  static constexpr double poisson_lo = 0.05, poisson_hi = 3.0;
  static constexpr double resize_lo = 0.5, resize_hi = 1.5;
  static constexpr int jpeg_lo = 10, jpeg_hi = 95;
};

// Uniform sampling inside the level's parameter ranges; deterministic per seed.
DegradationRecipe sample_recipe(DegradationLevel level, int sr_scale, uint64_t seed);

// Rotated anisotropic Gaussian at pixel centers, normalized to sum 1.
Tensor gaussian_kernel(double sigma_x, double sigma_y, double theta, int64_t size = 21);

// Stages in order (blur -> resize -> noise -> jpeg), then the final resize to
// exactly H/s x W/s; output clamped to [0,1]. H and W must be divisible by
// both the SR scale and 2. When `exact_poisson` is set, Poisson noise is
// sampled exactly instead of through the variance-matched Gaussian
// approximation.
Tensor apply_recipe(const Tensor& hr, const DegradationRecipe& recipe, uint64_t noise_seed,
                    bool exact_poisson = false);

DegradationVector encode_vector(const DegradationRecipe& recipe);
DegradationRecipe decode_vector(const DegradationVector& v);

}  // namespace dcs
