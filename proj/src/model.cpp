#include "dcs/model.hpp"

#include <cmath>
#include <stdexcept>

#include "dcs/ops.hpp"

namespace dcs {
namespace {

Tensor he_normal(Shape shape, int64_t fan_in, Rng& rng, double gain) {
  return Tensor::randn(std::move(shape), rng, gain * std::sqrt(2.0 / double(fan_in)), true);
}

}  // namespace

ModelConfig model_preset(const std::string& name) {
  ModelConfig c;
  if (name == "desk") {
    c.blocks = 2;
    c.channels = 8;
    c.scale = 2;
  } else if (name == "srresnet") {
    c.blocks = 16;
    c.channels = 64;
    c.scale = 4;
    c.with_predictors = false;
  } else if (name == "dcs") {
    c.blocks = 16;
    c.channels = 64;
    c.scale = 4;
  } else {
    throw std::invalid_argument("unknown model preset '" + name + "' (desk|srresnet|dcs)");
  }
  return c;
}

DcsModel::DcsModel(ModelConfig config, uint64_t seed) : cfg_(std::move(config)) {
  if (cfg_.scale != 2 && cfg_.scale != 3 && cfg_.scale != 4)
    throw std::invalid_argument("model: scale must be 2, 3 or 4");
  if (cfg_.base_interp != "none" && cfg_.base_interp != "bilinear" && cfg_.base_interp != "bicubic")
    throw std::invalid_argument("model: base_interp must be none|bilinear|bicubic");
  Rng rng(seed, 0x0de1);
  const int64_t c = cfg_.channels, k = cfg_.kernel, kk = k * k;
  const int64_t d = ModelConfig::kDegradationDim;
  const int64_t d1 = ModelConfig::kDConv1Channels;

  if (cfg_.with_predictors) {
    d_k1 = he_normal({d1, 3, k, k}, 3 * kk, rng, 1.0);
    d_b1 = Tensor::zeros({d1}, true);
    d_k2 = he_normal({d, d1, k, k}, d1 * kk, rng, 1.0);
    d_b2 = Tensor::zeros({d}, true);
    d_k3 = he_normal({d, d, k, k}, d * kk, rng, 1.0);
    d_b3 = Tensor::zeros({d}, true);
    d_fc_w = he_normal({d, d}, d, rng, 1.0);
    d_fc_b = Tensor::zeros({d}, true);

    a_w1 = he_normal({ModelConfig::kAHidden, d}, d, rng, 1.0);
    a_b1 = Tensor::zeros({ModelConfig::kAHidden}, true);
    // Zero-init keeps the initial split at sigmoid(0) = 0.5 for every block.
    a_w2 = Tensor::zeros({cfg_.blocks, ModelConfig::kAHidden}, true);
    a_b2 = Tensor::zeros({cfg_.blocks}, true);
  }

  head_k = he_normal({c, 3, k, k}, 3 * kk, rng, 1.0);
  head_b = Tensor::zeros({c}, true);
  trunk.reserve(cfg_.blocks);
  for (int64_t i = 0; i < cfg_.blocks; ++i) trunk.push_back(make_loc_params(c, k, rng, 0.1));

  up_factors_ = cfg_.scale == 4 ? std::vector<int64_t>{2, 2} : std::vector<int64_t>{cfg_.scale};
  for (int64_t f : up_factors_) {
    up_k.push_back(he_normal({c * f * f, c, k, k}, c * kk, rng, 1.0));
    up_b.push_back(Tensor::zeros({c * f * f}, true));
  }
  hr_k = he_normal({c, c, k, k}, c * kk, rng, 1.0);
  hr_b = Tensor::zeros({c}, true);
  // Zero-init makes the initial output equal the interpolated base.
  last_k = Tensor::zeros({3, c, k, k}, true);
  last_b = Tensor::zeros({3}, true);
}

Tensor DcsModel::predict_degradation(const Tensor& lr_batch) const {
  if (!cfg_.with_predictors) throw std::logic_error("model built without predictors");
  const int64_t pad = (cfg_.kernel - 1) / 2;
  Tensor x = leaky_relu(conv2d(lr_batch, d_k1, d_b1, pad), cfg_.leaky_slope);
  x = leaky_relu(conv2d(x, d_k2, d_b2, pad), cfg_.leaky_slope);
  x = leaky_relu(conv2d(x, d_k3, d_b3, pad), cfg_.leaky_slope);
  return dense(global_avg_pool(x), d_fc_w, d_fc_b);
}

Tensor DcsModel::predict_split(const Tensor& u_hat) const {
  if (!cfg_.with_predictors) throw std::logic_error("model built without predictors");
  Tensor h = leaky_relu(dense(u_hat, a_w1, a_b1), cfg_.leaky_slope);
  return sigmoid(dense(h, a_w2, a_b2));
}

Tensor DcsModel::super_resolve(const Tensor& lr_batch, const std::vector<Tensor>& ratios,
                               LocGradMode mode) const {
  if (static_cast<int64_t>(ratios.size()) != cfg_.blocks)
    throw std::invalid_argument("super_resolve: got " + std::to_string(ratios.size()) +
                                " split ratios for " + std::to_string(cfg_.blocks) + " blocks");
  const int64_t pad = (cfg_.kernel - 1) / 2;
  Tensor x = leaky_relu(conv2d(lr_batch, head_k, head_b, pad), cfg_.leaky_slope);
  for (int64_t i = 0; i < cfg_.blocks; ++i) x = loc_forward(x, trunk[i], ratios[i], mode);
  for (size_t s = 0; s < up_factors_.size(); ++s) {
    x = conv2d(x, up_k[s], up_b[s], pad);
    x = leaky_relu(pixel_shuffle(x, up_factors_[s]), cfg_.leaky_slope);
  }
  x = leaky_relu(conv2d(x, hr_k, hr_b, pad), cfg_.leaky_slope);
  x = conv2d(x, last_k, last_b, pad);
  if (cfg_.base_interp != "none") {
    Tensor base = cfg_.base_interp == "bilinear"
                      ? resize_bilinear(detach(lr_batch), double(cfg_.scale))
                      : resize_bicubic(detach(lr_batch), double(cfg_.scale));
    x = add(x, base);
  }
  return x;
}

Tensor DcsModel::super_resolve_fixed(const Tensor& lr_batch, double fixed_a) const {
  std::vector<Tensor> ratios(cfg_.blocks, Tensor::scalar(fixed_a));
  return super_resolve(lr_batch, ratios, LocGradMode::hard);
}

DcsModel::PipelineOut DcsModel::forward_pipeline(const Tensor& lr, LocGradMode mode,
                                                 double fixed_a) const {
  if (lr.rank() != 4 || lr.dim(0) != 1 || lr.dim(1) != 3)
    throw std::invalid_argument("forward_pipeline: expected [1,3,H,W], got " + shape_str(lr.shape()));
  const int64_t h = lr.dim(2), w = lr.dim(3);
  Tensor in = lr;
  if (h % 2 != 0 || w % 2 != 0) in = pad_reflect(lr, h % 2, w % 2);

  PipelineOut out;
  std::vector<Tensor> ratios;
  if (fixed_a >= 0.0) {
    for (int64_t i = 0; i < cfg_.blocks; ++i) ratios.push_back(Tensor::scalar(fixed_a));
  } else {
    out.u_hat = predict_degradation(in);
    out.a = predict_split(out.u_hat);
    for (int64_t i = 0; i < cfg_.blocks; ++i) {
      // In hard mode the ratio enters the split as a plain value.
      ratios.push_back(mode == LocGradMode::ste ? gather_scalar(out.a, i)
                                                : Tensor::scalar(out.a.data()[i]));
    }
  }
  out.sr = super_resolve(in, ratios, mode);
  if (in.dim(2) != h || in.dim(3) != w)
    out.sr = crop_spatial(out.sr, 0, 0, h * cfg_.scale, w * cfg_.scale);
  return out;
}

std::vector<NamedParam> DcsModel::named_parameters() const {
  std::vector<NamedParam> out;
  if (cfg_.with_predictors) {
    out.push_back({"d.conv1.kernel", d_k1});
    out.push_back({"d.conv1.bias", d_b1});
    out.push_back({"d.conv2.kernel", d_k2});
    out.push_back({"d.conv2.bias", d_b2});
    out.push_back({"d.conv3.kernel", d_k3});
    out.push_back({"d.conv3.bias", d_b3});
    out.push_back({"d.fc.weight", d_fc_w});
    out.push_back({"d.fc.bias", d_fc_b});
    out.push_back({"a.fc1.weight", a_w1});
    out.push_back({"a.fc1.bias", a_b1});
    out.push_back({"a.fc2.weight", a_w2});
    out.push_back({"a.fc2.bias", a_b2});
  }
  out.push_back({"sr.head.kernel", head_k});
  out.push_back({"sr.head.bias", head_b});
  for (size_t i = 0; i < trunk.size(); ++i) {
    const std::string p = "sr.block" + std::to_string(i);
    out.push_back({p + ".conv1.kernel", trunk[i].conv1_kernel});
    out.push_back({p + ".conv1.bias", trunk[i].conv1_bias});
    out.push_back({p + ".conv2.kernel", trunk[i].conv2_kernel});
    out.push_back({p + ".conv2.bias", trunk[i].conv2_bias});
  }
  for (size_t i = 0; i < up_k.size(); ++i) {
    out.push_back({"sr.up" + std::to_string(i) + ".kernel", up_k[i]});
    out.push_back({"sr.up" + std::to_string(i) + ".bias", up_b[i]});
  }
  out.push_back({"sr.hr.kernel", hr_k});
  out.push_back({"sr.hr.bias", hr_b});
  out.push_back({"sr.last.kernel", last_k});
  out.push_back({"sr.last.bias", last_b});
  return out;
}

std::vector<Tensor> DcsModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& np : named_parameters()) out.push_back(np.tensor);
  return out;
}

std::vector<Tensor> DcsModel::backbone_parameters() const {
  std::vector<Tensor> out;
  for (auto& np : named_parameters())
    if (np.name.rfind("sr.", 0) == 0) out.push_back(np.tensor);
  return out;
}

std::vector<Tensor> DcsModel::predictor_parameters() const {
  std::vector<Tensor> out;
  for (auto& np : named_parameters())
    if (np.name.rfind("sr.", 0) != 0) out.push_back(np.tensor);
  return out;
}

}  // namespace dcs
