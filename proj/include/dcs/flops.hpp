#pragma once

#include <cstdint>

namespace dcs {

// Declared operation-cost weights. Convolution and dense layers count one
// multiply and one add per weight application (accumulation and bias adds
// folded into the add); the remaining weights are fixed accounting
// constants shared by the analytic cost model and the instrumented forward
// pass, so the two can be compared exactly.
constexpr int64_t kFlopsPerMac = 2;
constexpr int64_t kFlopsBilinearPerOutput = 7;
constexpr int64_t kFlopsBicubicPerOutput = 19;
constexpr int64_t kFlopsAvgPoolPerOutput = 4;
constexpr int64_t kFlopsActivationPerElem = 1;  // relu / leaky relu
constexpr int64_t kFlopsSigmoidPerElem = 4;
constexpr int64_t kFlopsAddPerElem = 1;
// Global average pool: one add per input element plus one divide per output.

// Thread-local counter fed by the inference-path operations (conv2d, dense,
// activations, pooling, interpolation, elementwise add, pixel shuffle and
// slicing are free moves). Reported totals use the actual runtime shapes.
void flops_enable(bool on);
bool flops_enabled();
void flops_add(int64_t n);
uint64_t flops_count();
void flops_reset();

}  // namespace dcs
