#include "dcs/cost.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dcs/flops.hpp"
#include "dcs/loc.hpp"

#include <json.hpp>

namespace dcs {

int64_t CostReport::params_total() const {
  int64_t t = 0;
  for (const auto& e : entries) t += e.params;
  return t;
}

double CostReport::flops_total() const {
  double t = 0.0;
  for (const auto& e : entries) t += e.flops;
  return t;
}

std::string CostReport::table() const {
  std::ostringstream os;
  os << "component            params        flops (mul+add)   GFLOPs(MAC)\n";
  for (const auto& e : entries) {
    os.setf(std::ios::left);
    os.width(20);
    os << e.name;
    os.unsetf(std::ios::left);
    os.width(10);
    os << e.params;
    os.width(20);
    os << std::llround(e.flops);
    os.width(12);
    os.precision(4);
    os << std::fixed << e.flops / 2.0e9 << "\n";
    os.unsetf(std::ios::fixed);
  }
  os << "total: " << params_total() << " params, " << std::fixed << gflops() << " GFLOPs (MAC convention)\n";
  return os.str();
}

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["input"] = {{"h", input_h}, {"w", input_w}};
  j["a"] = split_ratios;
  j["components"] = nlohmann::json::array();
  for (const auto& e : entries)
    j["components"].push_back({{"name", e.name}, {"params", e.params}, {"flops", e.flops}});
  j["params_total"] = params_total();
  j["flops_total"] = flops_total();
  j["gflops"] = gflops();
  return j.dump(2);
}

OpCost conv_cost(int64_t c_in, int64_t c_out, int64_t k, int64_t h, int64_t w) {
  OpCost c;
  c.params = c_in * c_out * k * k + c_out;
  c.flops = double(kFlopsPerMac) * double(k * k * c_in * c_out) * double(h * w);
  return c;
}

OpCost dense_cost(int64_t d_in, int64_t d_out) {
  return {d_in * d_out + d_out, double(kFlopsPerMac * d_in * d_out)};
}

OpCost loc_block_cost(int64_t c, int64_t k, int64_t h, int64_t w, double a, bool continuous) {
  OpCost out;
  out.params = 2 * (c * c * k * k + c);
  const double hw = double(h * w), qw = hw / 4.0;
  const double mac2 = double(kFlopsPerMac * k * k);

  const double hc = continuous ? std::clamp(a, 0.0, 1.0) * double(c) : double(hi_channels(a, c));
  const double lc = double(c) - hc;

  if (!continuous && hc == double(c)) {
    // Degenerate all-high path: a plain residual block.
    out.flops = 2.0 * mac2 * double(c) * double(c) * hw            // two full convs
                + kFlopsActivationPerElem * 2.0 * double(c) * hw   // both ReLUs
                + kFlopsAddPerElem * double(c) * hw;               // residual add
    return out;
  }

  double f = 0.0;
  // split: pool the low channels to half resolution
  f += kFlopsAvgPoolPerOutput * lc * qw;
  // conv-1 intra/inter paths
  f += mac2 * (hc * hc * hw + hc * lc * qw + lc * lc * qw + lc * hc * qw);
  // high-path merge: upsample LH output, add, ReLU
  f += kFlopsBilinearPerOutput * hc * hw;
  f += kFlopsAddPerElem * hc * hw;
  f += kFlopsActivationPerElem * hc * hw;
  // low path: pool the high input, add, ReLU
  f += kFlopsAvgPoolPerOutput * hc * qw;
  f += kFlopsAddPerElem * lc * qw;
  f += kFlopsActivationPerElem * lc * qw;
  // conv-2 merge to c channels
  f += mac2 * (hc * double(c) * hw + lc * double(c) * qw);
  f += kFlopsBilinearPerOutput * double(c) * hw;
  f += kFlopsAddPerElem * double(c) * hw;
  f += kFlopsActivationPerElem * double(c) * hw;
  // residual add
  f += kFlopsAddPerElem * double(c) * hw;
  out.flops = f;
  return out;
}

CostReport model_cost(const ModelConfig& config, int64_t input_h, int64_t input_w,
                      const std::vector<double>& a, bool continuous) {
  const int64_t c = config.channels, k = config.kernel, s = config.scale;
  const int64_t h = input_h, w = input_w;
  std::vector<double> ratios = a;
  if (ratios.empty()) ratios.assign(config.blocks, 1.0);
  if (ratios.size() == 1) ratios.assign(config.blocks, ratios[0]);
  if (static_cast<int64_t>(ratios.size()) != config.blocks)
    throw std::invalid_argument("model_cost: need 1 or blocks ratios");

  CostReport r;
  r.input_h = h;
  r.input_w = w;
  r.split_ratios = ratios;

  auto act = [](int64_t n) { return double(kFlopsActivationPerElem * n); };

  {
    auto cc = conv_cost(3, c, k, h, w);
    r.entries.push_back({"sr.head", cc.params, cc.flops + act(c * h * w)});
  }
  {
    CostEntry e{"sr.trunk", 0, 0.0};
    for (int64_t i = 0; i < config.blocks; ++i) {
      auto bc = loc_block_cost(c, k, h, w, ratios[i], continuous);
      e.params += bc.params;
      e.flops += bc.flops;
    }
    r.entries.push_back(e);
  }
  {
    CostEntry e{"sr.upsample", 0, 0.0};
    const std::vector<int64_t> factors = s == 4 ? std::vector<int64_t>{2, 2} : std::vector<int64_t>{s};
    int64_t ch = h, cw = w;
    for (int64_t f : factors) {
      auto cc = conv_cost(c, c * f * f, k, ch, cw);
      e.params += cc.params;
      e.flops += cc.flops + act(c * f * f * ch * cw);  // leaky ReLU after the shuffle
      ch *= f;
      cw *= f;
    }
    r.entries.push_back(e);
  }
  {
    auto cc = conv_cost(c, c, k, h * s, w * s);
    r.entries.push_back({"sr.hr", cc.params, cc.flops + act(c * h * s * w * s)});
  }
  {
    auto cc = conv_cost(c, 3, k, h * s, w * s);
    r.entries.push_back({"sr.last", cc.params, cc.flops});
  }
  if (config.base_interp != "none") {
    const int64_t per = config.base_interp == "bilinear" ? kFlopsBilinearPerOutput
                                                         : kFlopsBicubicPerOutput;
    const double n = double(3 * h * s * w * s);
    r.entries.push_back({"sr.base", 0, per * n + kFlopsAddPerElem * n});
  }
  if (config.with_predictors) {
    const int64_t d = ModelConfig::kDegradationDim, d1 = ModelConfig::kDConv1Channels;
    CostEntry e{"d", 0, 0.0};
    auto c1 = conv_cost(3, d1, k, h, w);
    auto c2 = conv_cost(d1, d, k, h, w);
    auto c3 = conv_cost(d, d, k, h, w);
    auto fc = dense_cost(d, d);
    e.params = c1.params + c2.params + c3.params + fc.params;
    e.flops = c1.flops + act(d1 * h * w) + c2.flops + act(d * h * w) + c3.flops + act(d * h * w) +
              double(d * h * w + d) +  // global average pool
              fc.flops;
    r.entries.push_back(e);

    CostEntry ea{"a", 0, 0.0};
    auto f1 = dense_cost(d, ModelConfig::kAHidden);
    auto f2 = dense_cost(ModelConfig::kAHidden, config.blocks);
    ea.params = f1.params + f2.params;
    ea.flops = f1.flops + act(ModelConfig::kAHidden) + f2.flops +
               double(kFlopsSigmoidPerElem * config.blocks);
    r.entries.push_back(ea);
  }
  return r;
}

double solve_uniform_ratio_for_gflops(const ModelConfig& config, int64_t input_h, int64_t input_w,
                                      double target_gflops) {
  auto g = [&](double a) { return model_cost(config, input_h, input_w, {a}, true).gflops(); };
  double lo = 0.0, hi = 1.0;
  if (target_gflops <= g(lo)) return lo;
  if (target_gflops >= g(hi)) return hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < target_gflops ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dcs
