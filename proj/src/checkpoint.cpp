#include "dcs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dcs {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms not supported");

void write_doubles_le(std::ostream& os, const std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * 8));
  } else {
    for (double d : v) {
      uint64_t u;
      std::memcpy(&u, &d, 8);
      char b[8];
      for (int i = 0; i < 8; ++i) b[i] = char(u >> (8 * i));
      os.write(b, 8);
    }
  }
}

void read_doubles_le(std::istream& is, std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * 8));
  } else {
    for (double& d : v) {
      char b[8];
      is.read(b, 8);
      uint64_t u = 0;
      for (int i = 0; i < 8; ++i) u |= uint64_t(uint8_t(b[i])) << (8 * i);
      std::memcpy(&d, &u, 8);
    }
  }
  if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"blocks", c.blocks},       {"channels", c.channels},
          {"scale", c.scale},         {"kernel", c.kernel},
          {"base_interp", c.base_interp}, {"with_predictors", c.with_predictors},
          {"leaky_slope", c.leaky_slope}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.blocks = j.at("blocks").get<int64_t>();
  c.channels = j.at("channels").get<int64_t>();
  c.scale = j.at("scale").get<int64_t>();
  c.kernel = j.at("kernel").get<int64_t>();
  c.base_interp = j.at("base_interp").get<std::string>();
  c.with_predictors = j.at("with_predictors").get<bool>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const DcsModel& model, const CheckpointMeta& meta,
                     const AdamState* opt) {
  auto named = model.named_parameters();
  nlohmann::json tensors = nlohmann::json::array();
  int64_t offset = 0;
  auto add_entry = [&](const std::string& name, const Shape& shape, int64_t count) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", count}});
    offset += count * 8;
  };
  for (const auto& np : named) add_entry(np.name, np.tensor.shape(), np.tensor.numel());
  if (opt) {
    for (size_t i = 0; i < named.size(); ++i) {
      add_entry("opt.m." + named[i].name, named[i].tensor.shape(), named[i].tensor.numel());
      add_entry("opt.v." + named[i].name, named[i].tensor.shape(), named[i].tensor.numel());
    }
  }

  nlohmann::json header;
  header["format"] = "dcs-checkpoint";
  header["layout_version"] = 1;
  header["config"] = config_json(model.config());
  header["seed"] = meta.seed;
  header["iteration"] = meta.iteration;
  header["tensors"] = tensors;
  if (opt) {
    header["opt"] = {{"step", opt->step},
                     {"learning_rate", opt->learning_rate},
                     {"beta1", opt->beta1},
                     {"beta2", opt->beta2},
                     {"epsilon", opt->epsilon}};
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os << header.dump() << "\n";
  for (const auto& np : named) write_doubles_le(os, np.tensor.values());
  if (opt) {
    for (size_t i = 0; i < named.size(); ++i) {
      write_doubles_le(os, opt->m[i]);
      write_doubles_le(os, opt->v[i]);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointMeta load_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing header in " + path);
  const auto header = nlohmann::json::parse(line);
  if (header.at("format") != "dcs-checkpoint")
    throw std::runtime_error("checkpoint: unrecognized format in " + path);
  CheckpointMeta meta;
  meta.config = config_from_json(header.at("config"));
  meta.seed = header.at("seed").get<uint64_t>();
  meta.iteration = header.at("iteration").get<int64_t>();
  return meta;
}

DcsModel load_checkpoint(const std::string& path, CheckpointMeta* meta_out, AdamState* opt_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing header in " + path);
  const auto header = nlohmann::json::parse(line);
  if (header.at("format") != "dcs-checkpoint")
    throw std::runtime_error("checkpoint: unrecognized format in " + path);
  CheckpointMeta meta;
  meta.config = config_from_json(header.at("config"));
  meta.seed = header.at("seed").get<uint64_t>();
  meta.iteration = header.at("iteration").get<int64_t>();

  DcsModel model(meta.config, meta.seed);
  auto named = model.named_parameters();
  const std::streampos data_start = is.tellg();

  const auto& tensors = header.at("tensors");
  size_t ti = 0;
  auto read_into = [&](const std::string& expect_name, std::vector<double>& dst) {
    if (ti >= tensors.size()) throw std::runtime_error("checkpoint: missing tensor " + expect_name);
    const auto& t = tensors[ti++];
    if (t.at("name") != expect_name)
      throw std::runtime_error("checkpoint: expected tensor '" + expect_name + "', found '" +
                               t.at("name").get<std::string>() + "'");
    if (t.at("count").get<int64_t>() != static_cast<int64_t>(dst.size()))
      throw std::runtime_error("checkpoint: size mismatch for " + expect_name);
    is.seekg(data_start + std::streampos(t.at("offset").get<int64_t>()));
    read_doubles_le(is, dst);
  };
  for (auto& np : named) read_into(np.name, np.tensor.values());

  if (opt_out) {
    if (!header.contains("opt"))
      throw std::runtime_error("checkpoint: " + path + " carries no optimizer state");
    opt_out->step = header["opt"].at("step").get<int64_t>();
    opt_out->learning_rate = header["opt"].at("learning_rate").get<double>();
    opt_out->beta1 = header["opt"].at("beta1").get<double>();
    opt_out->beta2 = header["opt"].at("beta2").get<double>();
    opt_out->epsilon = header["opt"].at("epsilon").get<double>();
    opt_out->m.clear();
    opt_out->v.clear();
    for (auto& np : named) {
      std::vector<double> m(np.tensor.numel()), v(np.tensor.numel());
      read_into("opt.m." + np.name, m);
      read_into("opt.v." + np.name, v);
      opt_out->m.push_back(std::move(m));
      opt_out->v.push_back(std::move(v));
    }
  }
  if (meta_out) *meta_out = meta;
  return model;
}

}  // namespace dcs
