#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcs/model.hpp"

namespace dcs {

// Closed-form parameter and flop accounting. `flops` counts one multiply and
// one add per weight application plus the declared weights of flops.hpp for
// pooling, interpolation and elementwise work, so an instrumented forward
// pass reproduces the analytic number exactly. Reported GFLOPs follow the
// usual model-budget convention of one multiply-accumulate per FLOP, i.e.
// half the audited multiply/add count.
struct CostEntry {
  std::string name;
  int64_t params = 0;
  double flops = 0.0;
};

struct CostReport {
  std::vector<CostEntry> entries;
  int64_t input_h = 0;
  int64_t input_w = 0;
  std::vector<double> split_ratios;

  int64_t params_total() const;
  double flops_total() const;
  double gflops() const { return flops_total() / 2.0e9; }
  std::string table() const;
  std::string to_json() const;
};

struct OpCost {
  int64_t params = 0;
  double flops = 0.0;
};

OpCost conv_cost(int64_t c_in, int64_t c_out, int64_t k, int64_t h, int64_t w);
OpCost dense_cost(int64_t d_in, int64_t d_out);

// One LOC block on a [c,H,W] feature map. With `continuous` the split uses
// the raw ratio instead of the floor/clamp channel count, giving a smooth
// flop estimate for diagnostics; parameters never depend on the ratio.
OpCost loc_block_cost(int64_t c, int64_t k, int64_t h, int64_t w, double a, bool continuous = false);

// Whole-model account for a batch of one image. `a` supplies per-block
// ratios (a single value is broadcast).
CostReport model_cost(const ModelConfig& config, int64_t input_h, int64_t input_w,
                      const std::vector<double>& a, bool continuous = false);

// Uniform ratio whose continuous-estimate GFLOPs match the target; solved by
// bisection. Diagnostic only.
double solve_uniform_ratio_for_gflops(const ModelConfig& config, int64_t input_h, int64_t input_w,
                                      double target_gflops);

}  // namespace dcs
