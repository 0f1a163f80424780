#pragma once

#include <optional>
#include <string>

#include "dcs/adam.hpp"
#include "dcs/model.hpp"

namespace dcs {

// Single-file checkpoint: one line of JSON (architecture config, layout
// version, seed, iteration, per-tensor byte offsets) terminated by '\n',
// followed by raw little-endian float64 blobs in declaration order.
// Optimizer moments are stored as additional "opt.*" tensors so training can
// resume bit-exactly; loading for inference ignores them.
struct CheckpointMeta {
  ModelConfig config;
  uint64_t seed = 0;
  int64_t iteration = 0;
};

void save_checkpoint(const std::string& path, const DcsModel& model, const CheckpointMeta& meta,
                     const AdamState* opt = nullptr);

CheckpointMeta load_checkpoint_meta(const std::string& path);
DcsModel load_checkpoint(const std::string& path, CheckpointMeta* meta_out = nullptr,
                         AdamState* opt_out = nullptr);

}  // namespace dcs
