#pragma once

#include <string>
#include <vector>

#include "dcs/degrade.hpp"

namespace dcs {

// One JSONL record per LR-HR pair:
// {"hr": path, "lr": path, "level": "S0".."S3", "scale": int,
//  "u": [33 floats], "layout_version": 1}
struct ManifestEntry {
  std::string hr_path;
  std::string lr_path;
  DegradationLevel level = DegradationLevel::S0;
  int scale = 4;
  DegradationVector u;
};

std::string manifest_line(const ManifestEntry& e);
ManifestEntry parse_manifest_line(const std::string& line);

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

struct SynthOptions {
  std::string hr_dir;
  std::string out_dir;
  std::vector<DegradationLevel> levels;
  int count = 0;
  int sr_scale = 4;
  uint64_t seed = 0;
  int jobs = 1;
};

// Degrades `count` pairs, cycling HR images and levels round-robin. Every
// image owns an RNG stream derived from (seed, index), so the output is
// identical for any job count. Returns the path of the written manifest.
std::string synth_dataset(const SynthOptions& opts);

}  // namespace dcs
