#pragma once

#include <string>
#include <vector>

#include "dcs/loc.hpp"
#include "dcs/tensor.hpp"

namespace dcs {

// SRResNet-flavoured backbone: head conv, a trunk of LOC blocks, pixel
// shuffle reconstruction (one x2 stage per factor of two, a single x3 stage
// for scale 3) with a trailing HR conv pair, plus an interpolated global
// base. The degradation predictor is 3 convs (3->64->33->33, leaky ReLU),
// global average pool and one dense 33->33; the split predictor is
// dense 33->25, leaky ReLU, dense 25->blocks, sigmoid.
struct ModelConfig {
  int64_t blocks = 2;
  int64_t channels = 8;
  int64_t scale = 2;
  int64_t kernel = 3;
  std::string base_interp = "bilinear";  // none | bilinear | bicubic
  bool with_predictors = true;
  double leaky_slope = 0.2;

  static constexpr int64_t kDegradationDim = 33;
  static constexpr int64_t kDConv1Channels = 64;
  static constexpr int64_t kAHidden = 25;
};

// Presets: "desk" (2 blocks, 8 channels, x2), "srresnet" (16/64/x4 without
// predictors, split fixed at 1), "dcs" (16/64/x4 with predictors).
ModelConfig model_preset(const std::string& name);

struct NamedParam {
  std::string name;
  Tensor tensor;
};

class DcsModel {
public:
  DcsModel(ModelConfig config, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // u_hat = D(I_lr): one 33-vector per batch image, unclamped regression.
  Tensor predict_degradation(const Tensor& lr_batch) const;

  // a = A(u_hat): per-block split ratios, strictly inside (0,1).
  Tensor predict_split(const Tensor& u_hat) const;

  // ratios must carry one scalar per trunk block. Output is exactly
  // scale * input size; unclamped.
  Tensor super_resolve(const Tensor& lr_batch, const std::vector<Tensor>& ratios,
                       LocGradMode mode) const;
  Tensor super_resolve_fixed(const Tensor& lr_batch, double fixed_a) const;

  struct PipelineOut {
    Tensor sr;
    Tensor u_hat;
    Tensor a;
  };
  // D -> A -> backbone on a single image batch entry [1,3,H,W]. With
  // fixed_a >= 0 the predictors are bypassed entirely. Odd inputs are
  // reflect-padded to even and the output cropped back.
  PipelineOut forward_pipeline(const Tensor& lr, LocGradMode mode, double fixed_a = -1.0) const;

  std::vector<NamedParam> named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::vector<Tensor> backbone_parameters() const;
  std::vector<Tensor> predictor_parameters() const;

  // D
  Tensor d_k1, d_b1, d_k2, d_b2, d_k3, d_b3, d_fc_w, d_fc_b;
  // A
  Tensor a_w1, a_b1, a_w2, a_b2;
  // backbone
  Tensor head_k, head_b;
  std::vector<LocBlockParams> trunk;
  std::vector<Tensor> up_k, up_b;  // one conv per pixel-shuffle stage
  Tensor hr_k, hr_b, last_k, last_b;

private:
  ModelConfig cfg_;
  std::vector<int64_t> up_factors_;  // shuffle factor per stage
};

}  // namespace dcs
