#include "dcs/train.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dcs/checkpoint.hpp"
#include "dcs/cost.hpp"
#include "dcs/metrics.hpp"
#include "dcs/ops.hpp"
#include "dcs/png_io.hpp"

namespace dcs {
namespace {

nlohmann::json weights_json(const LossWeights& w) {
  return {{"lambda1", w.lambda1},
          {"lambda2", w.lambda2},
          {"lambda3", w.lambda3},
          {"lambda4", w.lambda4},
          {"lambda5", w.lambda5}};
}

void weights_from_json(const nlohmann::json& j, LossWeights& w) {
  w.lambda1 = j.value("lambda1", w.lambda1);
  w.lambda2 = j.value("lambda2", w.lambda2);
  w.lambda3 = j.value("lambda3", w.lambda3);
  w.lambda4 = j.value("lambda4", w.lambda4);
  w.lambda5 = j.value("lambda5", w.lambda5);
}

}  // namespace

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TrainConfig c;
  c.stage = j.value("stage", c.stage);
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
  c.lr_decay_interval = j.value("lr_decay_interval", c.lr_decay_interval);
  if (j.contains("weights")) weights_from_json(j["weights"], c.weights);
  c.k_nearest = j.value("k_nearest", c.k_nearest);
  c.seed = j.value("seed", c.seed);
  if (j.contains("model")) {
    if (j["model"].is_string()) {
      c.model = model_preset(j["model"].get<std::string>());
    } else {
      const auto& m = j["model"];
      if (m.contains("preset")) c.model = model_preset(m["preset"].get<std::string>());
      c.model.blocks = m.value("blocks", c.model.blocks);
      c.model.channels = m.value("channels", c.model.channels);
      c.model.scale = m.value("scale", c.model.scale);
      c.model.kernel = m.value("kernel", c.model.kernel);
      c.model.base_interp = m.value("base_interp", c.model.base_interp);
      c.model.with_predictors = m.value("with_predictors", c.model.with_predictors);
    }
  }
  c.fixed_a = j.value("fixed_a", c.fixed_a);
  c.grad_mode = j.value("grad_mode", c.grad_mode);
  c.hr_patch = j.value("hr_patch", c.hr_patch);
  c.nl_patch = j.value("nl_patch", c.nl_patch);
  c.nl_stride = j.value("nl_stride", c.nl_stride);
  c.log_interval = j.value("log_interval", c.log_interval);
  c.prefetch_threads = j.value("prefetch_threads", c.prefetch_threads);
  c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("train: cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["lr_decay_factor"] = lr_decay_factor;
  j["lr_decay_interval"] = lr_decay_interval;
  j["weights"] = weights_json(weights);
  j["k_nearest"] = k_nearest;
  j["seed"] = seed;
  j["model"] = {{"blocks", model.blocks},
                {"channels", model.channels},
                {"scale", model.scale},
                {"kernel", model.kernel},
                {"base_interp", model.base_interp},
                {"with_predictors", model.with_predictors}};
  j["fixed_a"] = fixed_a;
  j["grad_mode"] = grad_mode;
  j["hr_patch"] = hr_patch;
  j["nl_patch"] = nl_patch;
  j["nl_stride"] = nl_stride;
  j["log_interval"] = log_interval;
  j["prefetch_threads"] = prefetch_threads;
  if (!init_checkpoint.empty()) j["init_checkpoint"] = init_checkpoint;
  return j.dump(2);
}

std::string runlog_line(const RunLogRecord& r) {
  nlohmann::json j;
  j["iteration"] = r.iteration;
  j["l_pix"] = r.l_pix;
  j["l_reg"] = r.l_reg;
  j["l_nl"] = r.l_nl;
  j["l_a"] = r.l_a;
  j["total"] = r.total;
  j["mean_a"] = r.mean_a;
  j["est_gflops"] = r.est_gflops;
  return j.dump();
}

namespace {

struct Sample {
  Tensor lr;  // [1,3,p,p]
  Tensor hr;  // [1,3,ps,ps]
  Tensor u;   // [1,33]
  PatchPos query{0, 0};
};

struct LoadedPair {
  Tensor lr;
  Tensor hr;
  Tensor u;
};

// Pure function of (seed, iteration): sampling never touches shared state,
// so batches are identical under any prefetch parallelism.
std::vector<Sample> make_batch(const TrainConfig& cfg, const std::vector<LoadedPair>& data,
                               int64_t iteration) {
  const int64_t s = cfg.model.scale;
  const int64_t lp = cfg.hr_patch / s;
  std::vector<Sample> batch;
  batch.reserve(cfg.batch_size);
  for (int64_t b = 0; b < cfg.batch_size; ++b) {
    Rng rng(cfg.seed ^ 0xb47c500bULL, uint64_t(iteration) * 1024 + uint64_t(b));
    const auto& pair = data[rng.uniform_int(data.size())];
    const int64_t lh = pair.lr.dim(2), lw = pair.lr.dim(3);
    if (lh < lp || lw < lp)
      throw std::runtime_error("train: LR image smaller than the training patch");
    const int64_t r = lh == lp ? 0 : int64_t(rng.uniform_int(uint64_t(lh - lp + 1)));
    const int64_t c = lw == lp ? 0 : int64_t(rng.uniform_int(uint64_t(lw - lp + 1)));
    Sample smp;
    smp.lr = crop_spatial(pair.lr, r, c, lp, lp);
    smp.hr = crop_spatial(pair.hr, r * s, c * s, lp * s, lp * s);
    smp.u = pair.u;
    // Query position on the stride grid of the LR patch.
    const int64_t grid = (lp - cfg.nl_patch) / cfg.nl_stride + 1;
    if (grid >= 1) {
      smp.query.row = int64_t(rng.uniform_int(uint64_t(grid))) * cfg.nl_stride;
      smp.query.col = int64_t(rng.uniform_int(uint64_t(grid))) * cfg.nl_stride;
    }
    batch.push_back(std::move(smp));
  }
  return batch;
}

// Index-ordered prefetch: workers own iterations by residue class and park
// results in a bounded window ahead of the consumer.
class BatchPrefetcher {
public:
  BatchPrefetcher(const TrainConfig& cfg, const std::vector<LoadedPair>& data, int64_t first,
                  int64_t last)
      : cfg_(cfg), data_(data), next_(first), last_(last) {
    const int n = std::max(0, cfg.prefetch_threads);
    for (int t = 0; t < n; ++t)
      workers_.emplace_back([this, t, n, first] {
        for (int64_t it = first + t; it <= last_; it += n) {
          auto batch = make_batch(cfg_, data_, it);
          std::unique_lock<std::mutex> lk(mu_);
          cv_space_.wait(lk, [&] { return it < next_ + kWindow; });
          ready_.emplace(it, std::move(batch));
          cv_ready_.notify_all();
        }
      });
  }

  ~BatchPrefetcher() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      next_ = last_ + kWindow + 1;  // release any waiting producers
      cv_space_.notify_all();
    }
    for (auto& w : workers_) w.join();
  }

  std::vector<Sample> take(int64_t iteration) {
    if (workers_.empty()) return make_batch(cfg_, data_, iteration);
    std::unique_lock<std::mutex> lk(mu_);
    cv_ready_.wait(lk, [&] { return ready_.count(iteration) > 0; });
    auto batch = std::move(ready_[iteration]);
    ready_.erase(iteration);
    next_ = iteration + 1;
    cv_space_.notify_all();
    return batch;
  }

private:
  static constexpr int64_t kWindow = 8;
  const TrainConfig& cfg_;
  const std::vector<LoadedPair>& data_;
  std::mutex mu_;
  std::condition_variable cv_ready_, cv_space_;
  std::map<int64_t, std::vector<Sample>> ready_;
  int64_t next_;
  int64_t last_;
  std::vector<std::thread> workers_;
};

Tensor mean_of(std::vector<Tensor>& terms) {
  Tensor acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return scale(acc, 1.0 / double(terms.size()));
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::string& manifest_path,
                  const std::string& out_dir, const std::string& resume_checkpoint, bool quiet) {
  namespace fs = std::filesystem;
  if (config.stage != "pretrain" && config.stage != "joint")
    throw std::invalid_argument("train: stage must be 'pretrain' or 'joint'");
  if (config.stage == "joint" && !config.model.with_predictors)
    throw std::invalid_argument("train: joint stage requires a model with predictors");
  if (config.hr_patch % config.model.scale != 0)
    throw std::invalid_argument("train: hr_patch must be divisible by the scale");
  if ((config.hr_patch / config.model.scale) % 2 != 0)
    throw std::invalid_argument("train: LR patch must be even");
  const LocGradMode mode = config.grad_mode == "hard" ? LocGradMode::hard : LocGradMode::ste;

  // Data. Scale mismatches are rejected before any training step.
  const auto entries = read_manifest(manifest_path);
  if (entries.empty()) throw std::runtime_error("train: empty manifest " + manifest_path);
  std::vector<LoadedPair> data;
  data.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.scale != config.model.scale)
      throw std::invalid_argument("train: manifest pair at scale x" + std::to_string(e.scale) +
                                  " does not match model scale x" +
                                  std::to_string(config.model.scale));
    LoadedPair p;
    Tensor lr3 = load_png(e.lr_path);
    Tensor hr3 = load_png(e.hr_path);
    p.lr = Tensor({1, 3, lr3.dim(1), lr3.dim(2)}, lr3.values());
    p.hr = Tensor({1, 3, hr3.dim(1), hr3.dim(2)}, hr3.values());
    p.u = Tensor({1, 33}, std::vector<double>(e.u.values.begin(), e.u.values.end()));
    data.push_back(std::move(p));
  }

  // Model and optimizer, fresh or resumed.
  fs::create_directories(out_dir);
  int64_t start_iter = 1;
  DcsModel model(config.model, config.seed);
  std::vector<Tensor> trainable =
      config.stage == "pretrain" ? model.backbone_parameters() : model.parameters();
  AdamState opt = make_adam_state(trainable, config.learning_rate);
  if (resume_checkpoint.empty() && !config.init_checkpoint.empty()) {
    CheckpointMeta meta;
    DcsModel warm = load_checkpoint(config.init_checkpoint, &meta);
    if (meta.config.blocks != config.model.blocks ||
        meta.config.channels != config.model.channels ||
        meta.config.scale != config.model.scale)
      throw std::invalid_argument("train: init checkpoint architecture does not match the config");
    model = std::move(warm);
    trainable = config.stage == "pretrain" ? model.backbone_parameters() : model.parameters();
    opt = make_adam_state(trainable, config.learning_rate);
  }
  if (!resume_checkpoint.empty()) {
    CheckpointMeta meta;
    AdamState full_opt;
    model = load_checkpoint(resume_checkpoint, &meta, &full_opt);
    trainable = config.stage == "pretrain" ? model.backbone_parameters() : model.parameters();
    // Moments were saved for the full named list; select the trained subset.
    auto named = model.named_parameters();
    opt = make_adam_state(trainable, config.learning_rate);
    opt.step = full_opt.step;
    size_t ti = 0;
    for (size_t i = 0; i < named.size(); ++i) {
      if (ti < trainable.size() && named[i].tensor.node().get() == trainable[ti].node().get()) {
        opt.m[ti] = full_opt.m[i];
        opt.v[ti] = full_opt.v[i];
        ++ti;
      }
    }
    start_iter = meta.iteration + 1;
  }

  const int64_t lr_patch = config.hr_patch / config.model.scale;
  const bool use_nl = config.stage == "joint" && config.weights.lambda4 != 0.0;
  if (use_nl) {
    const int64_t grid = lr_patch < config.nl_patch
                             ? 0
                             : (lr_patch - config.nl_patch) / config.nl_stride + 1;
    if (grid * grid - 1 < config.k_nearest)
      throw std::invalid_argument(
          "train: the non-local stride grid on a " + std::to_string(lr_patch) +
          "px LR patch leaves " + std::to_string(std::max<int64_t>(grid * grid - 1, 0)) +
          " candidates for K=" + std::to_string(config.k_nearest) +
          "; enlarge hr_patch or shrink nl_patch/K");
  }

  TrainResult result;
  std::ostringstream runlog_text;
  BatchPrefetcher prefetch(config, data, start_iter, config.iterations);

  double acc_pix = 0, acc_reg = 0, acc_nl = 0, acc_a = 0, acc_total = 0, acc_mean_a = 0;
  int64_t acc_n = 0;
  auto wall_start = std::chrono::steady_clock::now();

  for (int64_t it = start_iter; it <= config.iterations; ++it) {
    auto batch = prefetch.take(it);
    for (auto& p : trainable) p.zero_grad();

    std::vector<Tensor> pix_terms, reg_terms, nl_terms, a_terms;
    for (auto& smp : batch) {
      if (config.stage == "pretrain") {
        Tensor sr = model.super_resolve_fixed(smp.lr, config.fixed_a);
        pix_terms.push_back(l_pix(sr, smp.hr));
        continue;
      }
      auto pipe = model.forward_pipeline(smp.lr, mode);
      pix_terms.push_back(l_pix(pipe.sr, smp.hr));
      reg_terms.push_back(l_reg(pipe.u_hat, smp.u));
      a_terms.push_back(l_sparsity(pipe.a));
      if (use_nl) {
        const auto index = knn_patches(smp.lr, smp.query, config.nl_patch, config.nl_stride,
                                       config.k_nearest);
        nl_terms.push_back(l_nonlocal(smp.lr, pipe.sr, index, config.model.scale));
      }
      acc_mean_a += [&] {
        double m = 0;
        for (int64_t i = 0; i < pipe.a.numel(); ++i) m += pipe.a.data()[i];
        return m / double(pipe.a.numel());
      }();
    }

    LossTerms terms;
    terms.pix = mean_of(pix_terms);
    if (!reg_terms.empty()) terms.reg = mean_of(reg_terms);
    if (!nl_terms.empty()) terms.nonlocal = mean_of(nl_terms);
    if (!a_terms.empty()) terms.sparsity = mean_of(a_terms);
    Tensor total = config.stage == "pretrain" ? terms.pix : composite_loss(terms, config.weights);

    backward(total);
    opt.learning_rate =
        config.learning_rate /
        std::pow(config.lr_decay_factor, double((it - 1) / config.lr_decay_interval));
    adam_step(trainable, opt);

    acc_pix += terms.pix.item();
    acc_reg += terms.reg.defined() ? terms.reg.item() : 0.0;
    acc_nl += terms.nonlocal.defined() ? terms.nonlocal.item() : 0.0;
    acc_a += terms.sparsity.defined() ? terms.sparsity.item() : 0.0;
    acc_total += total.item();
    acc_n += 1;

    if (it % config.log_interval == 0 || it == config.iterations) {
      RunLogRecord rec;
      rec.iteration = it;
      rec.l_pix = acc_pix / acc_n;
      rec.l_reg = acc_reg / acc_n;
      rec.l_nl = acc_nl / acc_n;
      rec.l_a = acc_a / acc_n;
      rec.total = acc_total / acc_n;
      rec.mean_a = config.stage == "pretrain"
                       ? config.fixed_a
                       : acc_mean_a / double(acc_n * config.batch_size);
      rec.est_gflops =
          model_cost(config.model, lr_patch, lr_patch, {rec.mean_a}, true).gflops();
      result.log.push_back(rec);
      runlog_text << runlog_line(rec) << "\n";
      if (!quiet) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - wall_start)
                              .count();
        std::cerr << runlog_line(rec) << " wall_ms=" << std::llround(ms) << "\n";
      }
      acc_pix = acc_reg = acc_nl = acc_a = acc_total = acc_mean_a = 0;
      acc_n = 0;
    }
  }

  result.runlog_path = (fs::path(out_dir) / "runlog.jsonl").string();
  std::ofstream log_os(result.runlog_path, std::ios::binary | std::ios::trunc);
  log_os << runlog_text.str();

  result.checkpoint_path = (fs::path(out_dir) / "checkpoint.bin").string();
  CheckpointMeta meta;
  meta.config = config.model;
  meta.seed = config.seed;
  meta.iteration = config.iterations;
  // Persist moments for the full parameter list (zeros for frozen tensors).
  auto named = model.named_parameters();
  AdamState full = make_adam_state(model.parameters(), opt.learning_rate);
  full.step = opt.step;
  size_t ti = 0;
  for (size_t i = 0; i < named.size(); ++i) {
    if (ti < trainable.size() && named[i].tensor.node().get() == trainable[ti].node().get()) {
      full.m[i] = opt.m[ti];
      full.v[i] = opt.v[ti];
      ++ti;
    }
  }
  save_checkpoint(result.checkpoint_path, model, meta, &full);

  if (!result.log.empty()) {
    result.final_mean_a = result.log.back().mean_a;
    result.final_est_gflops = result.log.back().est_gflops;
  }
  return result;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "image,level,psnr,ssim,mean_a,est_gflops\n";
  auto row = [&os](const EvalRow& r) {
    os << r.image << "," << r.level << ",";
    if (std::isinf(r.psnr))
      os << "inf";
    else
      os << r.psnr;
    os << "," << r.ssim << "," << r.mean_a << "," << r.est_gflops << "\n";
  };
  for (const auto& r : rows) row(r);
  for (const auto& r : level_means) row(r);
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  auto dump_row = [](const EvalRow& r) {
    nlohmann::json o;
    o["image"] = r.image;
    o["level"] = r.level;
    if (std::isinf(r.psnr))
      o["psnr"] = nullptr;
    else
      o["psnr"] = r.psnr;
    o["ssim"] = r.ssim;
    o["mean_a"] = r.mean_a;
    o["est_gflops"] = r.est_gflops;
    return o;
  };
  j["images"] = nlohmann::json::array();
  for (const auto& r : rows) j["images"].push_back(dump_row(r));
  j["levels"] = nlohmann::json::array();
  for (const auto& r : level_means) j["levels"].push_back(dump_row(r));
  return j.dump(2);
}

EvalReport evaluate(const std::string& checkpoint_path, const std::string& manifest_path) {
  CheckpointMeta meta;
  const DcsModel model = load_checkpoint(checkpoint_path, &meta);
  const auto entries = read_manifest(manifest_path);

  EvalReport report;
  std::map<std::string, std::vector<size_t>> by_level;
  for (const auto& e : entries) {
    if (e.scale != model.config().scale)
      throw std::invalid_argument("evaluate: manifest scale x" + std::to_string(e.scale) +
                                  " does not match checkpoint scale x" +
                                  std::to_string(model.config().scale));
    Tensor lr3 = load_png(e.lr_path);
    Tensor hr3 = load_png(e.hr_path);
    Tensor lr({1, 3, lr3.dim(1), lr3.dim(2)}, lr3.values());

    const double fixed = model.config().with_predictors ? -1.0 : 1.0;
    auto pipe = model.forward_pipeline(lr, LocGradMode::hard, fixed);
    Tensor sr({3, pipe.sr.dim(2), pipe.sr.dim(3)}, pipe.sr.values());
    clamp01_(sr);

    EvalRow row;
    row.image = std::filesystem::path(e.lr_path).filename().string();
    row.level = level_to_string(e.level);
    const auto m = y_channel_metrics(hr3, sr, model.config().scale);
    row.psnr = m.psnr;
    row.ssim = m.ssim;
    double mean_a = 1.0;
    if (model.config().with_predictors) {
      mean_a = 0.0;
      for (int64_t i = 0; i < pipe.a.numel(); ++i) mean_a += pipe.a.data()[i];
      mean_a /= double(pipe.a.numel());
    }
    row.mean_a = mean_a;
    row.est_gflops =
        model_cost(model.config(), lr.dim(2), lr.dim(3), {mean_a}, true).gflops();
    by_level[row.level].push_back(report.rows.size());
    report.rows.push_back(row);
  }

  for (const auto& [level, idxs] : by_level) {
    EvalRow mean;
    mean.image = "MEAN";
    mean.level = level;
    for (size_t i : idxs) {
      mean.psnr += report.rows[i].psnr;
      mean.ssim += report.rows[i].ssim;
      mean.mean_a += report.rows[i].mean_a;
      mean.est_gflops += report.rows[i].est_gflops;
    }
    const double n = double(idxs.size());
    mean.psnr /= n;
    mean.ssim /= n;
    mean.mean_a /= n;
    mean.est_gflops /= n;
    report.level_means.push_back(mean);
  }
  return report;
}

}  // namespace dcs
