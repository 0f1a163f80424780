#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcs/checkpoint.hpp"
#include "dcs/cost.hpp"
#include "dcs/degrade.hpp"
#include "dcs/manifest.hpp"
#include "dcs/metrics.hpp"
#include "dcs/ops.hpp"
#include "dcs/png_io.hpp"
#include "dcs/synth_image.hpp"
#include "dcs/train.hpp"

namespace {

std::vector<dcs::DegradationLevel> parse_levels(const std::string& csv) {
  std::vector<dcs::DegradationLevel> levels;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) levels.push_back(dcs::level_from_string(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return levels;
}

void parse_size(const std::string& s, int64_t& h, int64_t& w) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--input", "expected HxW, e.g. 256x256");
  h = std::stoll(s.substr(0, x));
  w = std::stoll(s.substr(x + 1));
}

int run(int argc, char** argv) {
  CLI::App app{"dynamic channel splitting super-resolution toolkit"};
  app.require_subcommand(1);

  // degrade
  auto* deg = app.add_subcommand("degrade", "apply a sampled degradation recipe to one image");
  std::string deg_level = "S2", deg_in, deg_out;
  int deg_scale = 4;
  uint64_t deg_seed = 0;
  deg->add_option("--level", deg_level, "S0..S3")->capture_default_str();
  deg->add_option("--scale", deg_scale, "SR scale (2,3,4)")->capture_default_str();
  deg->add_option("--seed", deg_seed, "recipe/noise seed")->capture_default_str();
  deg->add_option("input", deg_in, "HR input PNG")->required();
  deg->add_option("output", deg_out, "LR output PNG")->required();

  // synth
  auto* syn = app.add_subcommand("synth", "synthesize an LR-HR dataset with a manifest");
  std::string syn_hr_dir, syn_out, syn_levels = "S1,S2,S3";
  int syn_count = 0, syn_scale = 4, syn_jobs = 1;
  uint64_t syn_seed = 0;
  syn->add_option("--hr-dir", syn_hr_dir, "directory of HR PNGs")->required();
  syn->add_option("--count", syn_count, "number of pairs")->required();
  syn->add_option("--levels", syn_levels, "comma list of levels")->capture_default_str();
  syn->add_option("--scale", syn_scale, "SR scale")->capture_default_str();
  syn->add_option("--seed", syn_seed, "seed")->capture_default_str();
  syn->add_option("--jobs", syn_jobs, "worker threads")->capture_default_str();
  syn->add_option("--out", syn_out, "output directory")->required();

  // train
  auto* trn = app.add_subcommand("train", "run a training stage");
  std::string trn_config, trn_manifest, trn_out = "train_out", trn_resume, trn_stage;
  int64_t trn_iters = -1;
  double trn_lambda5 = -1.0;
  int trn_prefetch = -1;
  uint64_t trn_seed = 0;
  bool trn_seed_set = false;
  trn->add_option("--config", trn_config, "JSON config file");
  trn->add_option("--manifest", trn_manifest, "training manifest")->required();
  trn->add_option("--out", trn_out, "output directory")->capture_default_str();
  trn->add_option("--resume", trn_resume, "checkpoint to resume from");
  std::string trn_init;
  trn->add_option("--init", trn_init, "checkpoint for a weights-only warm start");
  trn->add_option("--stage", trn_stage, "pretrain|joint (overrides config)");
  trn->add_option("--iters", trn_iters, "iteration count (overrides config)");
  trn->add_option("--lambda5", trn_lambda5, "sparsity weight (overrides config)");
  trn->add_option("--prefetch", trn_prefetch, "prefetch worker threads (overrides config)");
  trn->add_option("--seed", trn_seed, "seed (overrides config)")
      ->each([&](const std::string&) { trn_seed_set = true; });

  // eval
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint against a manifest");
  std::string evl_manifest, evl_ckpt, evl_out = "results.csv";
  evl->add_option("--manifest", evl_manifest)->required();
  evl->add_option("--ckpt", evl_ckpt)->required();
  evl->add_option("--out", evl_out, "CSV output path (JSON written alongside)")
      ->capture_default_str();

  // flops
  auto* flp = app.add_subcommand("flops", "closed-form cost report for a preset");
  std::string flp_preset = "dcs", flp_input = "256x256", flp_a = "1";
  flp->add_option("--preset", flp_preset, "desk|srresnet|dcs")->capture_default_str();
  flp->add_option("--input", flp_input, "input size HxW")->capture_default_str();
  flp->add_option("--a", flp_a, "split ratio (scalar or comma list)")->capture_default_str();

  // sr
  auto* srr = app.add_subcommand("sr", "super-resolve one image");
  std::string sr_in, sr_out, sr_ckpt;
  srr->add_option("input", sr_in)->required();
  srr->add_option("output", sr_out)->required();
  srr->add_option("--ckpt", sr_ckpt)->required();

  // predict-degradation
  auto* prd = app.add_subcommand("predict-degradation", "print the predicted degradation vector");
  std::string prd_in, prd_ckpt;
  prd->add_option("input", prd_in)->required();
  prd->add_option("--ckpt", prd_ckpt)->required();

  // make-hr
  auto* mk = app.add_subcommand("make-hr", "write procedural HR test images");
  std::string mk_out;
  int mk_count = 8;
  int64_t mk_size = 96;
  uint64_t mk_seed = 7;
  mk->add_option("--out", mk_out, "output directory")->required();
  mk->add_option("--count", mk_count)->capture_default_str();
  mk->add_option("--size", mk_size)->capture_default_str();
  mk->add_option("--seed", mk_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage/help text
    return code == 0 ? 0 : 2;
  }

  if (deg->parsed()) {
    const auto level = dcs::level_from_string(deg_level);
    const dcs::Tensor hr = dcs::load_png(deg_in);
    const auto recipe = dcs::sample_recipe(level, deg_scale, deg_seed);
    const dcs::Tensor lr = dcs::apply_recipe(hr, recipe, deg_seed);
    dcs::save_png(lr, deg_out);
    nlohmann::json j;
    j["level"] = deg_level;
    j["scale"] = deg_scale;
    j["seed"] = deg_seed;
    j["u"] = dcs::encode_vector(recipe).values;
    std::cout << j.dump() << "\n";
    return 0;
  }
  if (syn->parsed()) {
    dcs::SynthOptions opts;
    opts.hr_dir = syn_hr_dir;
    opts.out_dir = syn_out;
    opts.levels = parse_levels(syn_levels);
    opts.count = syn_count;
    opts.sr_scale = syn_scale;
    opts.seed = syn_seed;
    opts.jobs = syn_jobs;
    std::cout << dcs::synth_dataset(opts) << "\n";
    return 0;
  }
  if (trn->parsed()) {
    dcs::TrainConfig cfg =
        trn_config.empty() ? dcs::TrainConfig{} : dcs::TrainConfig::from_json_file(trn_config);
    if (!trn_stage.empty()) cfg.stage = trn_stage;
    if (trn_iters >= 0) cfg.iterations = trn_iters;
    if (trn_lambda5 >= 0.0) cfg.weights.lambda5 = trn_lambda5;
    if (trn_prefetch >= 0) cfg.prefetch_threads = trn_prefetch;
    if (trn_seed_set) cfg.seed = trn_seed;
    if (!trn_init.empty()) cfg.init_checkpoint = trn_init;
    const auto result = dcs::train(cfg, trn_manifest, trn_out, trn_resume);
    std::cout << result.checkpoint_path << "\n";
    return 0;
  }
  if (evl->parsed()) {
    const auto report = dcs::evaluate(evl_ckpt, evl_manifest);
    std::ofstream csv(evl_out, std::ios::trunc);
    csv << report.to_csv();
    const std::string json_path =
        std::filesystem::path(evl_out).replace_extension(".json").string();
    std::ofstream js(json_path, std::ios::trunc);
    js << report.to_json();
    std::cout << evl_out << "\n" << json_path << "\n";
    return 0;
  }
  if (flp->parsed()) {
    int64_t h = 0, w = 0;
    parse_size(flp_input, h, w);
    std::vector<double> a;
    std::string cur;
    for (char ch : flp_a + ",") {
      if (ch == ',') {
        if (!cur.empty()) a.push_back(std::stod(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    const auto cfg = dcs::model_preset(flp_preset);
    const auto report = dcs::model_cost(cfg, h, w, a);
    std::cout << report.to_json() << "\n" << report.table();
    return 0;
  }
  if (srr->parsed()) {
    const dcs::DcsModel model = dcs::load_checkpoint(sr_ckpt);
    dcs::Tensor img = dcs::load_png(sr_in);
    dcs::Tensor lr({1, 3, img.dim(1), img.dim(2)}, img.values());
    const double fixed = model.config().with_predictors ? -1.0 : 1.0;
    auto pipe = model.forward_pipeline(lr, dcs::LocGradMode::hard, fixed);
    dcs::Tensor sr({3, pipe.sr.dim(2), pipe.sr.dim(3)}, pipe.sr.values());
    dcs::clamp01_(sr);
    dcs::save_png(sr, sr_out);
    return 0;
  }
  if (prd->parsed()) {
    const dcs::DcsModel model = dcs::load_checkpoint(prd_ckpt);
    dcs::Tensor img = dcs::load_png(prd_in);
    dcs::Tensor lr({1, 3, img.dim(1), img.dim(2)}, img.values());
    const dcs::Tensor u = model.predict_degradation(lr);
    nlohmann::json j;
    j["u_hat"] = u.values();
    std::cout << j.dump() << "\n";
    return 0;
  }
  if (mk->parsed()) {
    std::filesystem::create_directories(mk_out);
    for (int i = 0; i < mk_count; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "hr_%04d.png", i);
      dcs::save_png(dcs::synth_hr_image(mk_seed + uint64_t(i), mk_size, mk_size),
                    (std::filesystem::path(mk_out) / name).string());
    }
    std::cout << mk_out << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
