#include "dcs/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcs/jpeg_sim.hpp"
#include "dcs/ops.hpp"

namespace dcs {
namespace {

struct LevelRanges {
  double sigma_hi;
  double gauss_hi;
  double poisson_hi;
  double resize_lo, resize_hi;
  int jpeg_lo;
};

// Per-level sampling ranges; lower bounds shared with DegradationRanges.
LevelRanges ranges_for(DegradationLevel level) {
  switch (level) {
    case DegradationLevel::S1:
      return {1.0, 10.0 / 255.0, 1.0, 0.85, 1.2, 70};
    default:
      return {3.0, 25.0 / 255.0, 3.0, 0.5, 1.5, 30};
  }
}

StageParams sample_stage(Rng& rng, const LevelRanges& r, double sigma_cap) {
  StageParams s;
  const double sigma_hi = std::min(r.sigma_hi, sigma_cap);

  const double blur_pick = rng.uniform();
  if (blur_pick < 0.2) {
    s.blur_kind = BlurKind::none;
  } else if (blur_pick < 0.6) {
    s.blur_kind = BlurKind::isotropic;
    s.sigma_x = s.sigma_y = rng.uniform(DegradationRanges::sigma_lo, sigma_hi);
    s.theta = 0.0;
  } else {
    s.blur_kind = BlurKind::anisotropic;
    s.sigma_x = rng.uniform(DegradationRanges::sigma_lo, sigma_hi);
    s.sigma_y = rng.uniform(DegradationRanges::sigma_lo, sigma_hi);
    s.theta = rng.uniform(0.0, M_PI);
  }

  const double resize_pick = rng.uniform();
  if (resize_pick < 0.2) {
    s.resize_mode = ResizeMode::none;
  } else {
    s.resize_mode = resize_pick < 0.6 ? ResizeMode::bilinear : ResizeMode::bicubic;
    s.resize_scale = rng.uniform(r.resize_lo, r.resize_hi);
  }

  const double noise_pick = rng.uniform();
  if (noise_pick < 0.2) {
    s.noise_kind = NoiseKind::none;
  } else if (noise_pick < 0.6) {
    s.noise_kind = NoiseKind::gaussian;
    s.noise_level = rng.uniform(DegradationRanges::gauss_lo, r.gauss_hi);
  } else {
    s.noise_kind = NoiseKind::poisson;
    s.noise_level = rng.uniform(DegradationRanges::poisson_lo, r.poisson_hi);
  }

  s.jpeg_applied = rng.uniform() < 0.8;
  if (s.jpeg_applied)
    s.jpeg_quality = r.jpeg_lo + int(rng.uniform_int(uint64_t(95 - r.jpeg_lo + 1)));
  return s;
}

double norm01(double v, double lo, double hi) { return (v - lo) / (hi - lo); }
double denorm(double v, double lo, double hi) { return lo + v * (hi - lo); }

}  // namespace

DegradationLevel level_from_string(const std::string& s) {
  if (s == "S0") return DegradationLevel::S0;
  if (s == "S1") return DegradationLevel::S1;
  if (s == "S2") return DegradationLevel::S2;
  if (s == "S3") return DegradationLevel::S3;
  throw std::invalid_argument("unknown degradation level '" + s + "' (expected S0..S3)");
}

std::string level_to_string(DegradationLevel level) {
  switch (level) {
    case DegradationLevel::S0: return "S0";
    case DegradationLevel::S1: return "S1";
    case DegradationLevel::S2: return "S2";
    case DegradationLevel::S3: return "S3";
  }
  return "S?";
}

DegradationRecipe sample_recipe(DegradationLevel level, int sr_scale, uint64_t seed) {
  if (sr_scale != 2 && sr_scale != 3 && sr_scale != 4)
    throw std::invalid_argument("sample_recipe: sr_scale must be 2, 3 or 4");
  Rng rng(seed, 0xd35a);
  DegradationRecipe r;
  r.level = level;
  r.sr_scale = sr_scale;
  r.final_resize_mode = ResizeMode::bicubic;
  switch (level) {
    case DegradationLevel::S0:
      break;
    case DegradationLevel::S1:
    case DegradationLevel::S2:
      r.stages.push_back(sample_stage(rng, ranges_for(level), DegradationRanges::sigma_hi));
      break;
    case DegradationLevel::S3: {
      const auto lr = ranges_for(DegradationLevel::S2);
      r.stages.push_back(sample_stage(rng, lr, DegradationRanges::sigma_hi));
      r.stages.push_back(sample_stage(rng, lr, 1.5));  // milder second-stage blur
      break;
    }
  }
  if (level != DegradationLevel::S0)
    r.final_resize_mode = rng.uniform() < 0.5 ? ResizeMode::bilinear : ResizeMode::bicubic;
  return r;
}

Tensor gaussian_kernel(double sigma_x, double sigma_y, double theta, int64_t size) {
  if (size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd");
  if (sigma_x <= 0.0 || sigma_y <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  Tensor k({size, size}, 0.0, false);
  const double half = (size - 1) / 2.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  double sum = 0.0;
  for (int64_t i = 0; i < size; ++i)
    for (int64_t j = 0; j < size; ++j) {
      const double y = i - half, x = j - half;
      const double u = ct * x + st * y;
      const double v = -st * x + ct * y;
      const double w = std::exp(-0.5 * (u * u / (sigma_x * sigma_x) + v * v / (sigma_y * sigma_y)));
      k.data()[i * size + j] = w;
      sum += w;
    }
  for (auto& v : k.values()) v /= sum;
  return k;
}

namespace {

// Depthwise convolution with reflect padding, used for blurring.
Tensor blur_image(const Tensor& img, const Tensor& kernel) {
  const int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int64_t ks = kernel.dim(0), half = ks / 2;
  Tensor out({c, h, w}, 0.0, false);
  auto reflect = [](int64_t v, int64_t n) {
    while (v < 0 || v >= n) v = v < 0 ? -v : 2 * n - 2 - v;
    return v;
  };
  for (int64_t ch = 0; ch < c; ++ch) {
    const double* in = img.data() + ch * h * w;
    double* ov = out.data() + ch * h * w;
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int64_t ky = 0; ky < ks; ++ky) {
          const int64_t sy = reflect(y + ky - half, h);
          for (int64_t kx = 0; kx < ks; ++kx)
            acc += in[sy * w + reflect(x + kx - half, w)] * kernel.data()[ky * ks + kx];
        }
        ov[y * w + x] = acc;
      }
  }
  return out;
}

Tensor resize_by(const Tensor& img, ResizeMode mode, double scale) {
  return mode == ResizeMode::bilinear ? resize_bilinear(img, scale) : resize_bicubic(img, scale);
}

Tensor resize_to(const Tensor& img, ResizeMode mode, int64_t th, int64_t tw) {
  return mode == ResizeMode::bilinear ? resize_bilinear_to(img, th, tw)
                                      : resize_bicubic_to(img, th, tw);
}

}  // namespace

Tensor apply_recipe(const Tensor& hr, const DegradationRecipe& recipe, uint64_t noise_seed,
                    bool exact_poisson) {
  if (hr.rank() != 3 || hr.dim(0) != 3)
    throw std::invalid_argument("apply_recipe: expected [3,H,W], got " + shape_str(hr.shape()));
  const int64_t h = hr.dim(1), w = hr.dim(2);
  const int s = recipe.sr_scale;
  if (h % s != 0 || w % s != 0 || h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("apply_recipe: dims " + shape_str(hr.shape()) +
                                " must be divisible by the SR scale and by 2");

  Tensor img = hr.clone();
  Rng rng(noise_seed, 0x7015);
  for (const auto& st : recipe.stages) {
    if (st.blur_kind != BlurKind::none)
      img = blur_image(img, gaussian_kernel(st.sigma_x, st.sigma_y, st.theta));
    if (st.resize_mode != ResizeMode::none) img = resize_by(img, st.resize_mode, st.resize_scale);
    if (st.noise_kind == NoiseKind::gaussian) {
      for (auto& v : img.values()) v += st.noise_level * rng.normal();
      clamp01_(img);
    } else if (st.noise_kind == NoiseKind::poisson) {
      // Photon count chi = 255/scale; exact shot noise or its
      // variance-matched Gaussian approximation N(0, x*scale/255).
      const double chi = 255.0 / st.noise_level;
      for (auto& v : img.values()) {
        const double x = std::clamp(v, 0.0, 1.0);
        v = exact_poisson ? double(rng.poisson(x * chi)) / chi
                          : x + std::sqrt(x / chi) * rng.normal();
      }
      clamp01_(img);
    }
    if (st.jpeg_applied) img = jpeg_degrade(img, st.jpeg_quality);
  }

  // Final resize to exactly H/s x W/s.
  const int64_t th = h / s, tw = w / s;
  if (img.dim(1) != th || img.dim(2) != tw)
    img = resize_to(img, recipe.final_resize_mode, th, tw);
  clamp01_(img);
  return img;
}

DegradationVector encode_vector(const DegradationRecipe& recipe) {
  DegradationVector out;
  auto& v = out.values;
  for (size_t si = 0; si < 2; ++si) {
    const size_t base = si * 15;
    if (si >= recipe.stages.size()) continue;
    const StageParams& s = recipe.stages[si];
    v[base + 0] = 1.0;
    if (s.blur_kind != BlurKind::none) {
      v[base + 1] = s.blur_kind == BlurKind::isotropic ? 1.0 : 0.0;
      v[base + 2] = s.blur_kind == BlurKind::anisotropic ? 1.0 : 0.0;
      v[base + 3] = norm01(s.sigma_x, DegradationRanges::sigma_lo, DegradationRanges::sigma_hi);
      v[base + 4] = norm01(s.sigma_y, DegradationRanges::sigma_lo, DegradationRanges::sigma_hi);
      v[base + 5] = s.theta / M_PI;
    }
    if (s.resize_mode != ResizeMode::none) {
      v[base + 6] = s.resize_mode == ResizeMode::bilinear ? 1.0 : 0.0;
      v[base + 7] = s.resize_mode == ResizeMode::bicubic ? 1.0 : 0.0;
      v[base + 9] = norm01(s.resize_scale, DegradationRanges::resize_lo, DegradationRanges::resize_hi);
    } else {
      v[base + 8] = 1.0;
    }
    if (s.noise_kind != NoiseKind::none) {
      v[base + 10] = s.noise_kind == NoiseKind::gaussian ? 1.0 : 0.0;
      v[base + 11] = s.noise_kind == NoiseKind::poisson ? 1.0 : 0.0;
      v[base + 12] = s.noise_kind == NoiseKind::gaussian
                         ? norm01(s.noise_level, DegradationRanges::gauss_lo, DegradationRanges::gauss_hi)
                         : norm01(s.noise_level, DegradationRanges::poisson_lo,
                                  DegradationRanges::poisson_hi);
    }
    if (s.jpeg_applied) {
      v[base + 13] = 1.0;
      v[base + 14] = norm01(s.jpeg_quality, DegradationRanges::jpeg_lo, DegradationRanges::jpeg_hi);
    }
  }
  v[30] = recipe.final_resize_mode == ResizeMode::bilinear ? 1.0 : 0.0;
  v[31] = recipe.final_resize_mode == ResizeMode::bicubic ? 1.0 : 0.0;
  v[32] = (recipe.sr_scale - 2) / 2.0;
  for (double x : v)
    if (x < 0.0 || x > 1.0)
      throw std::runtime_error("encode_vector: recipe parameter outside its declared range");
  return out;
}

DegradationRecipe decode_vector(const DegradationVector& vec) {
  const auto& v = vec.values;
  for (double x : v)
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("decode_vector: entry outside [0,1]");
  DegradationRecipe r;
  auto on = [](double x) { return x > 0.5; };
  for (size_t si = 0; si < 2; ++si) {
    const size_t base = si * 15;
    if (!on(v[base + 0])) continue;
    StageParams s;
    if (on(v[base + 1]) || on(v[base + 2])) {
      s.blur_kind = on(v[base + 1]) ? BlurKind::isotropic : BlurKind::anisotropic;
      s.sigma_x = denorm(v[base + 3], DegradationRanges::sigma_lo, DegradationRanges::sigma_hi);
      s.sigma_y = denorm(v[base + 4], DegradationRanges::sigma_lo, DegradationRanges::sigma_hi);
      s.theta = v[base + 5] * M_PI;
    }
    if (!on(v[base + 8]) && (on(v[base + 6]) || on(v[base + 7]))) {
      s.resize_mode = on(v[base + 6]) ? ResizeMode::bilinear : ResizeMode::bicubic;
      s.resize_scale = denorm(v[base + 9], DegradationRanges::resize_lo, DegradationRanges::resize_hi);
    }
    if (on(v[base + 10]) || on(v[base + 11])) {
      s.noise_kind = on(v[base + 10]) ? NoiseKind::gaussian : NoiseKind::poisson;
      s.noise_level = s.noise_kind == NoiseKind::gaussian
                          ? denorm(v[base + 12], DegradationRanges::gauss_lo, DegradationRanges::gauss_hi)
                          : denorm(v[base + 12], DegradationRanges::poisson_lo,
                                   DegradationRanges::poisson_hi);
    }
    if (on(v[base + 13])) {
      s.jpeg_applied = true;
      s.jpeg_quality = int(std::lround(
          denorm(v[base + 14], DegradationRanges::jpeg_lo, DegradationRanges::jpeg_hi)));
    }
    r.stages.push_back(s);
  }
  r.final_resize_mode = on(v[30]) ? ResizeMode::bilinear : ResizeMode::bicubic;
  r.sr_scale = int(std::lround(v[32] * 2.0 + 2.0));
  r.level = r.stages.empty()
                ? DegradationLevel::S0
                : (r.stages.size() == 2 ? DegradationLevel::S3 : DegradationLevel::S2);
  return r;
}

}  // namespace dcs
