#include "dcs/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dcs/ops.hpp"
#include "dcs/png_io.hpp"

namespace dcs {

std::string manifest_line(const ManifestEntry& e) {
  nlohmann::json j;
  j["hr"] = e.hr_path;
  j["lr"] = e.lr_path;
  j["level"] = level_to_string(e.level);
  j["scale"] = e.scale;
  j["u"] = e.u.values;
  j["layout_version"] = DegradationVector::kLayoutVersion;
  return j.dump();
}

ManifestEntry parse_manifest_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  ManifestEntry e;
  e.hr_path = j.at("hr").get<std::string>();
  e.lr_path = j.at("lr").get<std::string>();
  e.level = level_from_string(j.at("level").get<std::string>());
  e.scale = j.at("scale").get<int>();
  const auto u = j.at("u").get<std::vector<double>>();
  if (u.size() != e.u.values.size())
    throw std::runtime_error("manifest: degradation vector has " + std::to_string(u.size()) +
                             " entries, expected 33");
  std::copy(u.begin(), u.end(), e.u.values.begin());
  if (j.at("layout_version").get<int>() != DegradationVector::kLayoutVersion)
    throw std::runtime_error("manifest: unsupported layout_version");
  return e;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("manifest: cannot open " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(parse_manifest_line(line));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("manifest: cannot open " + path + " for writing");
  for (const auto& e : entries) os << manifest_line(e) << "\n";
}

std::string synth_dataset(const SynthOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.levels.empty()) throw std::invalid_argument("synth: need at least one level");
  if (opts.count < 1) throw std::invalid_argument("synth: count must be >= 1");

  std::vector<std::string> hr_files;
  for (const auto& entry : fs::directory_iterator(opts.hr_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      hr_files.push_back(entry.path().string());
  std::sort(hr_files.begin(), hr_files.end());
  if (hr_files.empty()) throw std::runtime_error("synth: no .png files under " + opts.hr_dir);

  fs::create_directories(opts.out_dir);
  std::vector<ManifestEntry> entries(opts.count);

  auto worker = [&](int tid, int jobs) {
    for (int i = tid; i < opts.count; i += jobs) {
      const std::string& hr_path = hr_files[i % hr_files.size()];
      Tensor hr = load_png(hr_path);
      // Crop to dims divisible by the scale and by 2.
      const int64_t mod = std::lcm<int64_t>(opts.sr_scale, 2);
      const int64_t h = hr.dim(1) / mod * mod, w = hr.dim(2) / mod * mod;
      if (h < mod || w < mod)
        throw std::runtime_error("synth: " + hr_path + " smaller than one scale block");
      if (h != hr.dim(1) || w != hr.dim(2)) hr = crop_spatial(hr, 0, 0, h, w);

      const DegradationLevel level = opts.levels[i % opts.levels.size()];
      const uint64_t stream = opts.seed * 0x100000001ULL + uint64_t(i);
      const DegradationRecipe recipe = sample_recipe(level, opts.sr_scale, stream);
      const Tensor lr = apply_recipe(hr, recipe, stream);

      char name[64];
      std::snprintf(name, sizeof(name), "lr_%05d.png", i);
      const std::string lr_path = (fs::path(opts.out_dir) / name).string();
      save_png(lr, lr_path);

      ManifestEntry e;
      e.hr_path = hr_path;
      e.lr_path = lr_path;
      e.level = level;
      e.scale = opts.sr_scale;
      e.u = encode_vector(recipe);
      entries[i] = std::move(e);
    }
  };

  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker, t, jobs);
    for (auto& t : pool) t.join();
  }

  const std::string manifest_path = (fs::path(opts.out_dir) / "manifest.jsonl").string();
  write_manifest(manifest_path, entries);
  return manifest_path;
}

}  // namespace dcs
