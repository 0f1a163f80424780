#include <doctest.h>

#include <cmath>

#include "dcs/cost.hpp"
#include "dcs/flops.hpp"
#include "dcs/ops.hpp"
#include "support/loc_oracle.hpp"
#include "support/oracles.hpp"

using namespace dcs;

TEST_CASE("conv_cost formulas") {
  auto c = conv_cost(64, 64, 3, 256, 256);
  CHECK(c.params == 36928);
  CHECK(c.flops == doctest::Approx(2.0 * 9 * 64 * 64 * 256 * 256));
  CHECK(conv_cost(1, 1, 1, 1, 1).params == 2);
  CHECK(conv_cost(1, 1, 1, 1, 1).flops == 2.0);
  // doubling H doubles flops, params unchanged
  auto a = conv_cost(8, 16, 3, 10, 12);
  auto b = conv_cost(8, 16, 3, 20, 12);
  CHECK(b.flops == doctest::Approx(2.0 * a.flops));
  CHECK(b.params == a.params);
}

TEST_CASE("loc_block_cost: closed forms") {
  // a=1 equals two full convolutions plus activations and the residual add
  {
    auto blk = loc_block_cost(8, 3, 16, 16, 1.0);
    const double convs = 2.0 * (2.0 * 9 * 64 * 256);
    const double extras = 2.0 * 8 * 256 * kFlopsActivationPerElem + 8 * 256 * kFlopsAddPerElem;
    CHECK(blk.flops == doctest::Approx(convs + extras));
    CHECK(blk.params == 2 * (8 * 8 * 9 + 8));
  }
  // conv-1 polynomial at a_eff = 0.5 (the conv share of the block)
  {
    const int64_t c = 64, k = 3, H = 64, W = 64;
    const double conv1 = 2.0 * k * k * double(H * W) * double(c * c) * (0.25 + 0.75 / 4.0);
    CHECK(conv1 == doctest::Approx(0.132e9).epsilon(0.01));
  }
  // strict monotonicity in the split
  double prev = -1.0;
  for (int h = 1; h <= 8; ++h) {
    const double a = double(h) / 8.0;
    auto blk = loc_block_cost(8, 3, 16, 16, a);
    CHECK(blk.flops > prev);
    CHECK(blk.params == 2 * (8 * 8 * 9 + 8));
    prev = blk.flops;
  }
}

TEST_CASE("instrumented scalar forward equals the analytic block cost") {
  Rng rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t c = std::vector<int64_t>{4, 8, 16}[rng.uniform_int(3)];
    const int64_t k = 3;
    const int64_t H = std::vector<int64_t>{8, 16}[rng.uniform_int(2)];
    const double a = rng.uniform(0.0, 1.0);
    Tensor x = oracle::random_tensor({1, c, H, H}, rng);
    LocBlockParams p = make_loc_params(c, k, rng, 1.0);
    auto run = oracle::loc_forward_counted(x, p, a);
    auto analytic = loc_block_cost(c, k, H, H, a);
    CHECK(double(run.flops) == analytic.flops);
  }
}

TEST_CASE("library flop counter agrees with the analytic model cost") {
  // whole-model instrumentation via the thread-local counter
  for (const char* preset : {"desk", "srresnet", "dcs"}) {
    ModelConfig cfg = model_preset(preset);
    const int64_t hw = 8;
    DcsModel model(cfg, 123);
    Tensor lr({1, 3, hw, hw}, 0.25);

    const double a_fixed = cfg.with_predictors ? -1.0 : 1.0;
    // run once to learn the split values the hard forward will use
    auto warm = model.forward_pipeline(lr, LocGradMode::hard, a_fixed);
    std::vector<double> ratios;
    if (cfg.with_predictors)
      for (int64_t i = 0; i < warm.a.numel(); ++i) ratios.push_back(warm.a.data()[i]);
    else
      ratios.assign(cfg.blocks, 1.0);

    flops_reset();
    flops_enable(true);
    auto out = model.forward_pipeline(lr, LocGradMode::hard, a_fixed);
    flops_enable(false);
    const auto report = model_cost(cfg, hw, hw, ratios);
    CHECK(double(flops_count()) == report.flops_total());
  }
}

TEST_CASE("preset budgets reproduce the published table") {
  // SRResNet x4: 1.52M parameters, 166 GFLOPs (MAC convention) at 256x256
  const auto srresnet = model_cost(model_preset("srresnet"), 256, 256, {1.0});
  CHECK(std::fabs(double(srresnet.params_total()) - 1.52e6) / 1.52e6 < 0.02);
  CHECK(std::fabs(srresnet.gflops() - 166.0) / 166.0 < 0.10);

  // DCS backbone + predictors: 1.55M parameters
  const auto dcs_full = model_cost(model_preset("dcs"), 256, 256, {1.0});
  CHECK(std::fabs(double(dcs_full.params_total()) - 1.55e6) / 1.55e6 < 0.02);

  // params independent of a; flops monotone between the extremes
  const auto at_half = model_cost(model_preset("dcs"), 256, 256, {0.5});
  const auto at_low = model_cost(model_preset("dcs"), 256, 256, {1.0 / 64.0});
  CHECK(at_half.params_total() == dcs_full.params_total());
  CHECK(at_half.flops_total() < dcs_full.flops_total());
  CHECK(at_half.flops_total() > at_low.flops_total());
}

TEST_CASE("solved uniform ratio for the published DCS budget is reported") {
  const double a128 = solve_uniform_ratio_for_gflops(model_preset("dcs"), 256, 256, 128.0);
  CHECK(a128 > 0.0);
  CHECK(a128 < 1.0);
  const auto check = model_cost(model_preset("dcs"), 256, 256, {a128}, true);
  CHECK(check.gflops() == doctest::Approx(128.0).epsilon(1e-6));
  MESSAGE("uniform a reproducing 128 GFLOPs: ", a128);
}

TEST_CASE("model tensors account for exactly the analytic parameter total") {
  for (const char* preset : {"desk", "srresnet", "dcs"}) {
    const ModelConfig cfg = model_preset(preset);
    DcsModel model(cfg, 7);
    int64_t counted = 0;
    for (const auto& p : model.parameters()) counted += p.numel();
    const auto report = model_cost(cfg, 16, 16, {0.5});
    CHECK(counted == report.params_total());
  }
  // the configured degradation predictor measures 31,789 parameters
  const auto report = model_cost(model_preset("dcs"), 16, 16, {0.5});
  for (const auto& e : report.entries)
    if (e.name == "d") CHECK(e.params == 31789);
}

TEST_CASE("cost report serialization") {
  const auto r = model_cost(model_preset("desk"), 24, 24, {0.5});
  const std::string js = r.to_json();
  CHECK(js.find("\"gflops\"") != std::string::npos);
  CHECK(js.find("sr.trunk") != std::string::npos);
  CHECK(r.table().find("total") != std::string::npos);
  CHECK(r.params_total() > 0);
}
