#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcs/loss.hpp"
#include "dcs/manifest.hpp"
#include "dcs/model.hpp"

namespace dcs {

// Two-stage schedule: "pretrain" runs the backbone alone with a fixed split
// ratio and the pixel loss only; "joint" trains predictor networks and
// backbone together under the full composite objective.
struct TrainConfig {
  std::string stage = "pretrain";
  int64_t iterations = 200;
  int64_t batch_size = 4;
  double learning_rate = 1e-3;
  double lr_decay_factor = 10.0;
  int64_t lr_decay_interval = 250000;
  LossWeights weights;
  int64_t k_nearest = 3;
  uint64_t seed = 0;
  ModelConfig model;
  double fixed_a = 0.5;           // pretrain split ratio
  std::string grad_mode = "ste";  // joint-stage split gradient rule: hard | ste
  int64_t hr_patch = 48;
  int64_t nl_patch = 16;
  int64_t nl_stride = 4;
  int64_t log_interval = 10;
  int prefetch_threads = 0;
  // Weights-only warm start (fresh optimizer and iteration count); the
  // two-stage protocol loads the pretrain checkpoint here for the joint run.
  std::string init_checkpoint;

  static TrainConfig from_json_file(const std::string& path);
  static TrainConfig from_json_text(const std::string& text);
  std::string to_json() const;
};

// Interval-averaged loss terms. Wall time is reported on the console but
// kept out of the persisted log so identical runs produce identical files.
struct RunLogRecord {
  int64_t iteration = 0;
  double l_pix = 0.0;
  double l_reg = 0.0;
  double l_nl = 0.0;
  double l_a = 0.0;
  double total = 0.0;
  double mean_a = 0.0;
  double est_gflops = 0.0;
};

std::string runlog_line(const RunLogRecord& r);

struct TrainResult {
  std::vector<RunLogRecord> log;
  std::string checkpoint_path;
  std::string runlog_path;
  double final_mean_a = 0.0;
  double final_est_gflops = 0.0;
};

TrainResult train(const TrainConfig& config, const std::string& manifest_path,
                  const std::string& out_dir, const std::string& resume_checkpoint = "",
                  bool quiet = false);

struct EvalRow {
  std::string image;
  std::string level;
  double psnr = 0.0;
  double ssim = 0.0;
  double mean_a = 0.0;
  double est_gflops = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalRow> level_means;  // image field = "MEAN"
  std::string to_csv() const;
  std::string to_json() const;
};

EvalReport evaluate(const std::string& checkpoint_path, const std::string& manifest_path);

}  // namespace dcs
