#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dcs/checkpoint.hpp"
#include "dcs/manifest.hpp"
#include "dcs/png_io.hpp"
#include "dcs/synth_image.hpp"
#include "dcs/train.hpp"

using namespace dcs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string file_bytes(const std::string& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

std::string make_dataset(const TempDir& dir, int count, int scale, uint64_t seed,
                         const std::vector<DegradationLevel>& levels, int jobs = 1) {
  const auto hr_dir = dir.path / "hr";
  fs::create_directories(hr_dir);
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "hr_%02d.png", i);
    save_png(synth_hr_image(100 + i, 48, 48), (hr_dir / name).string());
  }
  SynthOptions opts;
  opts.hr_dir = hr_dir.string();
  opts.out_dir = (dir.path / ("set" + std::to_string(seed) + "_" + std::to_string(jobs))).string();
  opts.levels = levels;
  opts.count = count;
  opts.sr_scale = scale;
  opts.seed = seed;
  opts.jobs = jobs;
  return synth_dataset(opts);
}

}  // namespace

TEST_CASE("manifest lines round trip") {
  ManifestEntry e;
  e.hr_path = "a/b.png";
  e.lr_path = "c/d.png";
  e.level = DegradationLevel::S2;
  e.scale = 4;
  e.u = encode_vector(sample_recipe(DegradationLevel::S2, 4, 3));
  const auto line = manifest_line(e);
  const auto back = parse_manifest_line(line);
  CHECK(back.hr_path == e.hr_path);
  CHECK(back.lr_path == e.lr_path);
  CHECK(back.level == e.level);
  CHECK(back.scale == e.scale);
  CHECK(back.u.values == e.u.values);
}

TEST_CASE("synth: deterministic, parallelism-invariant, level cycle, shapes") {
  TempDir dir("dcs_synth_test");
  const auto m1 = make_dataset(dir, 3, 4, 5, {DegradationLevel::S1, DegradationLevel::S2,
                                              DegradationLevel::S3});
  auto entries = read_manifest(m1);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].level == DegradationLevel::S1);
  CHECK(entries[1].level == DegradationLevel::S2);
  CHECK(entries[2].level == DegradationLevel::S3);
  for (const auto& e : entries) {
    Tensor lr = load_png(e.lr_path);
    CHECK(lr.shape() == Shape{3, 12, 12});
  }

  // same seed, other jobs count -> identical pixels and vectors
  const auto m2 = make_dataset(dir, 3, 4, 5,
                               {DegradationLevel::S1, DegradationLevel::S2, DegradationLevel::S3},
                               3);
  auto entries2 = read_manifest(m2);
  REQUIRE(entries2.size() == 3);
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].u.values == entries2[i].u.values);
    CHECK(file_bytes(entries[i].lr_path) == file_bytes(entries2[i].lr_path));
  }
}

TEST_CASE("train config json round trip and overrides") {
  TrainConfig c;
  c.stage = "joint";
  c.weights.lambda5 = 2.0;
  c.model = model_preset("desk");
  const auto text = c.to_json();
  const auto back = TrainConfig::from_json_text(text);
  CHECK(back.stage == "joint");
  CHECK(back.weights.lambda5 == 2.0);
  CHECK(back.model.blocks == 2);

  const auto preset = TrainConfig::from_json_text(R"({"model": "desk", "iterations": 7})");
  CHECK(preset.model.channels == 8);
  CHECK(preset.iterations == 7);
}

TEST_CASE("train: validation failures surface before any step") {
  TempDir dir("dcs_train_val");
  const auto manifest = make_dataset(dir, 2, 4, 8, {DegradationLevel::S1});
  TrainConfig cfg;
  cfg.model = model_preset("desk");  // x2 model vs x4 manifest
  cfg.iterations = 1;
  CHECK_THROWS_AS(train(cfg, manifest, (dir.path / "out").string(), "", true),
                  std::invalid_argument);

  TrainConfig bad_stage = cfg;
  bad_stage.stage = "warmup";
  CHECK_THROWS(train(bad_stage, manifest, (dir.path / "out").string(), "", true));
}

TEST_CASE("train: determinism and prefetch invariance on a short pretrain") {
  TempDir dir("dcs_train_det");
  const auto manifest = make_dataset(dir, 4, 2, 21, {DegradationLevel::S0, DegradationLevel::S1});

  TrainConfig cfg;
  cfg.model = model_preset("desk");
  cfg.stage = "pretrain";
  cfg.iterations = 12;
  cfg.batch_size = 2;
  cfg.hr_patch = 32;
  cfg.log_interval = 4;
  cfg.seed = 3;

  auto r1 = train(cfg, manifest, (dir.path / "o1").string(), "", true);
  auto r2 = train(cfg, manifest, (dir.path / "o2").string(), "", true);
  CHECK(file_bytes(r1.checkpoint_path) == file_bytes(r2.checkpoint_path));
  CHECK(file_bytes(r1.runlog_path) == file_bytes(r2.runlog_path));

  TrainConfig threaded = cfg;
  threaded.prefetch_threads = 3;
  auto r3 = train(threaded, manifest, (dir.path / "o3").string(), "", true);
  CHECK(file_bytes(r1.checkpoint_path) == file_bytes(r3.checkpoint_path));
  CHECK(file_bytes(r1.runlog_path) == file_bytes(r3.runlog_path));
}

TEST_CASE("train: resume reproduces the uninterrupted run bit for bit") {
  TempDir dir("dcs_train_resume");
  const auto manifest = make_dataset(dir, 4, 2, 22, {DegradationLevel::S0});

  TrainConfig cfg;
  cfg.model = model_preset("desk");
  cfg.stage = "pretrain";
  cfg.iterations = 10;
  cfg.batch_size = 2;
  cfg.hr_patch = 32;
  cfg.log_interval = 1;
  cfg.seed = 4;

  auto full = train(cfg, manifest, (dir.path / "full").string(), "", true);

  TrainConfig first = cfg;
  first.iterations = 6;
  auto part = train(first, manifest, (dir.path / "part").string(), "", true);
  auto resumed = train(cfg, manifest, (dir.path / "resumed").string(), part.checkpoint_path, true);

  CHECK(file_bytes(full.checkpoint_path) == file_bytes(resumed.checkpoint_path));
  // resumed log covers iterations 7..10 and must match the tail of the full log
  REQUIRE(full.log.size() == 10);
  REQUIRE(resumed.log.size() == 4);
  for (size_t i = 0; i < resumed.log.size(); ++i)
    CHECK(runlog_line(resumed.log[i]) == runlog_line(full.log[6 + i]));
}

TEST_CASE("pretrain never touches predictor parameters") {
  TempDir dir("dcs_train_frozen");
  const auto manifest = make_dataset(dir, 3, 2, 23, {DegradationLevel::S1});

  TrainConfig cfg;
  cfg.model = model_preset("desk");
  cfg.stage = "pretrain";
  cfg.iterations = 6;
  cfg.batch_size = 2;
  cfg.hr_patch = 32;
  cfg.seed = 5;

  DcsModel reference(cfg.model, cfg.seed);
  auto result = train(cfg, manifest, (dir.path / "out").string(), "", true);
  DcsModel trained = load_checkpoint(result.checkpoint_path);

  auto ref_named = reference.named_parameters();
  auto got_named = trained.named_parameters();
  bool backbone_moved = false;
  for (size_t i = 0; i < ref_named.size(); ++i) {
    if (ref_named[i].name.rfind("sr.", 0) == 0) {
      if (ref_named[i].tensor.values() != got_named[i].tensor.values()) backbone_moved = true;
    } else {
      CHECK(ref_named[i].tensor.values() == got_named[i].tensor.values());
    }
  }
  CHECK(backbone_moved);
}

TEST_CASE("joint stage trains all three networks and logs every term") {
  TempDir dir("dcs_train_joint");
  const auto manifest = make_dataset(dir, 4, 2, 24, {DegradationLevel::S1, DegradationLevel::S2});

  TrainConfig cfg;
  cfg.model = model_preset("desk");
  cfg.stage = "joint";
  cfg.iterations = 6;
  cfg.batch_size = 2;
  cfg.hr_patch = 40;  // LR 20: nl grid (20-16)/4+1 = 2 per axis
  cfg.log_interval = 3;
  cfg.seed = 6;

  DcsModel reference(cfg.model, cfg.seed);
  auto result = train(cfg, manifest, (dir.path / "out").string(), "", true);
  REQUIRE_FALSE(result.log.empty());
  const auto& rec = result.log.back();
  CHECK(rec.l_pix > 0.0);
  CHECK(rec.l_reg > 0.0);
  CHECK(rec.l_nl >= 0.0);
  CHECK(rec.l_a > 0.0);
  CHECK(rec.mean_a > 0.0);
  CHECK(rec.mean_a < 1.0);
  CHECK(rec.est_gflops > 0.0);

  DcsModel trained = load_checkpoint(result.checkpoint_path);
  auto ref_named = reference.named_parameters();
  auto got_named = trained.named_parameters();
  int moved = 0;
  for (size_t i = 0; i < ref_named.size(); ++i)
    if (ref_named[i].tensor.values() != got_named[i].tensor.values()) ++moved;
  CHECK(moved > int(ref_named.size()) / 2);
}

TEST_CASE("evaluate: stable tables and level aggregation") {
  TempDir dir("dcs_eval");
  const auto manifest = make_dataset(dir, 4, 2, 25, {DegradationLevel::S0, DegradationLevel::S1});

  TrainConfig cfg;
  cfg.model = model_preset("desk");
  cfg.stage = "pretrain";
  cfg.iterations = 4;
  cfg.batch_size = 2;
  cfg.hr_patch = 32;
  cfg.seed = 7;
  auto result = train(cfg, manifest, (dir.path / "out").string(), "", true);

  auto r1 = evaluate(result.checkpoint_path, manifest);
  auto r2 = evaluate(result.checkpoint_path, manifest);
  CHECK(r1.to_csv() == r2.to_csv());
  CHECK(r1.to_json() == r2.to_json());
  REQUIRE(r1.rows.size() == 4);
  CHECK(r1.level_means.size() == 2);
  for (const auto& row : r1.rows) {
    CHECK(row.psnr > 5.0);
    CHECK(row.ssim > -1.0);
    CHECK(row.est_gflops > 0.0);
  }
}
