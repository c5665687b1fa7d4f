#pragma once

// Checkpoint container: a store-only ZIP holding manifest.json plus one
// binary file per named buffer. Buffers are little-endian 32-bit floats,
// row-major. The manifest pins the format version, the full config, every
// tensor's shape, and the memory bank metadata, so a load is self-describing
// and a save -> load -> save round trip is byte-identical.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "igcl/errors.hpp"
#include "igcl/model.hpp"
#include "igcl/zip.hpp"

namespace igcl {

constexpr int kCheckpointVersion = 1;

namespace ckptdetail {

inline std::string encode_f32(const Mat& m) {
  std::string out;
  out.reserve(m.a.size() * 4);
  for (double x : m.a) {
    float f = static_cast<float>(x);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    out.push_back(static_cast<char>(bits & 0xFF));
    out.push_back(static_cast<char>((bits >> 8) & 0xFF));
    out.push_back(static_cast<char>((bits >> 16) & 0xFF));
    out.push_back(static_cast<char>((bits >> 24) & 0xFF));
  }
  return out;
}

inline void decode_f32(const std::string& data, Mat& m, const std::string& name) {
  if (data.size() != m.a.size() * 4)
    throw CorruptCheckpoint("buffer " + name + " holds " + std::to_string(data.size()) +
                            " bytes, manifest declares " + std::to_string(m.a.size() * 4));
  for (size_t i = 0; i < m.a.size(); ++i) {
    uint32_t bits = static_cast<uint32_t>(static_cast<unsigned char>(data[4 * i])) |
                    (static_cast<uint32_t>(static_cast<unsigned char>(data[4 * i + 1])) << 8) |
                    (static_cast<uint32_t>(static_cast<unsigned char>(data[4 * i + 2])) << 16) |
                    (static_cast<uint32_t>(static_cast<unsigned char>(data[4 * i + 3])) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    m.a[i] = static_cast<double>(f);
  }
}

inline std::string tensor_file(const std::string& name) {
  std::string file = name;
  for (char& c : file)
    if (c == '/') c = '_';
  return "tensors/" + file + ".bin";
}

}  // namespace ckptdetail

inline void save_checkpoint(ModelState& state, const std::string& path) {
  using nlohmann::json;
  ZipArchive archive;
  json manifest;
  manifest["format"] = "igcl-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["config"] = config_to_json(state.config);
  manifest["n_vars"] = state.encoder.cfg.n_vars;
  manifest["aux_dim"] = state.encoder.cfg.aux_dim;

  json tensors = json::array();
  std::vector<std::pair<std::string, std::string>> buffers;
  for (auto& [name, param] : state.named_params()) {
    std::string file = ckptdetail::tensor_file(name);
    tensors.push_back(json{{"name", name},
                           {"rows", param->v.rows},
                           {"cols", param->v.cols},
                           {"dtype", "f32"},
                           {"file", file},
                           {"bytes", param->v.a.size() * 4}});
    buffers.emplace_back(file, ckptdetail::encode_f32(param->v));
  }
  manifest["tensors"] = tensors;

  json bank;
  bank["capacity"] = state.bank.capacity;
  bank["mode"] = state.bank.literal_windows ? "literal" : "pattern";
  bank["next_age"] = state.bank.next_age;
  json entries = json::array();
  for (int j = 0; j < state.bank.size(); ++j) {
    const MemoryEntry& e = state.bank.entries[j];
    char idx[16];
    std::snprintf(idx, sizeof idx, "%04d", j);
    std::string file = "bank/e" + std::string(idx) + ".bin";
    entries.push_back(json{{"importance", e.importance},
                           {"age", e.age},
                           {"rows", e.pattern.rows},
                           {"cols", e.pattern.cols},
                           {"file", file}});
    buffers.emplace_back(file, ckptdetail::encode_f32(e.pattern));
  }
  bank["entries"] = entries;
  manifest["bank"] = bank;

  archive.add("manifest.json", manifest.dump(2));
  for (auto& [file, data] : buffers) archive.add(file, std::move(data));
  write_zip(archive, path);
}

inline ModelState load_checkpoint(const std::string& path) {
  using nlohmann::json;
  ZipArchive archive = read_zip(path);
  const std::string* manifest_data = archive.find("manifest.json");
  if (!manifest_data) throw CorruptCheckpoint(path + " has no manifest.json");
  json manifest;
  try {
    manifest = json::parse(*manifest_data);
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(path + " manifest is not valid JSON: " + e.what());
  }
  if (!manifest.contains("version") || !manifest["version"].is_number_integer())
    throw CorruptCheckpoint(path + " manifest lacks a version");
  if (manifest["version"].get<int>() != kCheckpointVersion)
    throw UnsupportedVersion("checkpoint version " + manifest["version"].dump() + ", expected " +
                             std::to_string(kCheckpointVersion));

  TrainConfig config = config_from_json(manifest.at("config"));
  const int n_vars = manifest.at("n_vars").get<int>();
  const int aux_dim = manifest.at("aux_dim").get<int>();
  Rng rng(config.seed);
  ModelState state = init_model(config, n_vars, aux_dim, rng);

  for (const json& t : manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const std::string file = t.at("file").get<std::string>();
    const int rows = t.at("rows").get<int>(), cols = t.at("cols").get<int>();
    Param* target = nullptr;
    for (auto& [pname, param] : state.named_params())
      if (pname == name) target = param;
    if (!target) throw CorruptCheckpoint("manifest names unknown tensor " + name);
    if (target->v.rows != rows || target->v.cols != cols)
      throw CorruptCheckpoint("tensor " + name + " has shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", config implies " +
                              std::to_string(target->v.rows) + "x" + std::to_string(target->v.cols));
    const std::string* data = archive.find(file);
    if (!data) throw CorruptCheckpoint("missing buffer " + file);
    ckptdetail::decode_f32(*data, target->v, name);
  }

  const json& bank = manifest.at("bank");
  state.bank.capacity = bank.at("capacity").get<int>();
  state.bank.literal_windows = bank.at("mode").get<std::string>() == "literal";
  state.bank.next_age = bank.at("next_age").get<long>();
  state.bank.entries.clear();
  for (const json& ej : bank.at("entries")) {
    MemoryEntry e;
    e.importance = ej.at("importance").get<double>();
    e.age = ej.at("age").get<long>();
    e.pattern = Mat(ej.at("rows").get<int>(), ej.at("cols").get<int>());
    const std::string file = ej.at("file").get<std::string>();
    const std::string* data = archive.find(file);
    if (!data) throw CorruptCheckpoint("missing bank buffer " + file);
    ckptdetail::decode_f32(*data, e.pattern, file);
    state.bank.entries.push_back(std::move(e));
  }
  return state;
}

}  // namespace igcl
