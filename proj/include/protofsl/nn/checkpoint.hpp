#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protofsl/core/binary_io.hpp"
#include "protofsl/core/error.hpp"
#include "protofsl/data/types.hpp"
#include "protofsl/nn/encoder.hpp"

namespace protofsl {

// Sidecar descriptor written next to the tensor blob as <stem>.json.
struct CheckpointInfo {
  Backbone identity = Backbone::tiny_test_cnn;
  std::size_t embedding_dim = 0;
  bool pretrained = false;
  std::string config_hash;
  std::size_t step = 0;
  std::size_t head_classes = 0;  // 0 when there is no classifier head
  std::vector<StoneClass> class_order;  // head output k predicts class_order[k]
};

inline nlohmann::json to_json(const CheckpointInfo& info) {
  nlohmann::json order = nlohmann::json::array();
  for (auto c : info.class_order) order.push_back(to_string(c));
  return {{"identity", to_string(info.identity)}, {"embedding_dim", info.embedding_dim},
          {"pretrained", info.pretrained},        {"config_hash", info.config_hash},
          {"step", info.step},                    {"head_classes", info.head_classes},
          {"class_order", order}};
}

inline CheckpointInfo checkpoint_info_from_json(const nlohmann::json& j) {
  CheckpointInfo info;
  info.identity = parse_backbone(j.at("identity").get<std::string>());
  info.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  info.pretrained = j.value("pretrained", false);
  info.config_hash = j.value("config_hash", std::string{});
  info.step = j.value("step", std::size_t{0});
  info.head_classes = j.value("head_classes", std::size_t{0});
  if (j.contains("class_order")) {
    for (const auto& c : j.at("class_order")) info.class_order.push_back(parse_class(c.get<std::string>()));
  }
  return info;
}

inline std::filesystem::path blob_path(const std::filesystem::path& stem) { return stem.string() + ".ckpt"; }
inline std::filesystem::path descriptor_path(const std::filesystem::path& stem) { return stem.string() + ".json"; }

struct StoredTensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;
};
using TensorArchive = std::map<std::string, StoredTensor>;

inline constexpr const char* kCheckpointMagic = "PFSCKPT1";

// Blob layout: magic, u32 count, then per tensor: name, u32 rank,
// u64 dims[rank], f32 values (all little-endian).
inline void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint " + path.string());
  bin::put_magic(out, kCheckpointMagic);
  bin::put_u32(out, static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, t] : archive) {
    bin::put_string(out, name);
    bin::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) bin::put_u64(out, d);
    for (float v : t.data) bin::put_f32(out, v);
  }
  if (!out) throw RuntimeFailure("write failed for checkpoint " + path.string());
}

inline TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open checkpoint " + path.string());
  bin::expect_magic(in, kCheckpointMagic, path.string());
  TensorArchive archive;
  const auto count = bin::get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor t;
    const std::string name = bin::get_string(in);
    const auto rank = bin::get_u32(in);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(bin::get_u64(in));
    t.data.resize(Tensor<float>::count(t.shape));
    for (auto& v : t.data) v = bin::get_f32(in);
    archive.emplace(name, std::move(t));
  }
  return archive;
}

template <typename T>
void add_to_archive(TensorArchive& archive, const nn::Module<T>& m, const std::string& prefix) {
  m.visit(prefix, nn::ConstParamVisitor<T>([&](const std::string& name, const nn::Parameter<T>& p) {
            StoredTensor t{p.value.shape(), {}};
            t.data.assign(p.value.values().begin(), p.value.values().end());
            archive[name] = std::move(t);
          }));
}

template <typename T>
void load_from_archive(const TensorArchive& archive, nn::Module<T>& m, const std::string& prefix) {
  m.visit(prefix, nn::ParamVisitor<T>([&](const std::string& name, nn::Parameter<T>& p) {
            auto it = archive.find(name);
            if (it == archive.end()) throw RuntimeFailure("checkpoint is missing tensor " + name);
            if (it->second.shape != p.value.shape()) throw RuntimeFailure("checkpoint shape mismatch for " + name);
            for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<T>(it->second.data[i]);
          }));
}

template <typename T>
void save_checkpoint(const std::filesystem::path& stem, const Encoder<T>& encoder, CheckpointInfo info,
                     const nn::Module<T>* head = nullptr) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  TensorArchive archive;
  add_to_archive(archive, encoder.network(), "");
  if (head) add_to_archive(archive, *head, "head.");
  write_archive(blob_path(stem), archive);
  info.identity = encoder.identity();
  info.embedding_dim = encoder.embedding_dim();
  info.pretrained = encoder.pretrained();
  std::ofstream out(descriptor_path(stem));
  if (!out) throw RuntimeFailure("cannot write checkpoint descriptor " + descriptor_path(stem).string());
  out << to_json(info).dump(2) << "\n";
}

inline CheckpointInfo read_checkpoint_info(const std::filesystem::path& stem) {
  std::ifstream in(descriptor_path(stem));
  if (!in) throw RuntimeFailure("cannot open checkpoint descriptor " + descriptor_path(stem).string());
  return checkpoint_info_from_json(nlohmann::json::parse(in));
}

template <typename T = float>
Encoder<T> load_encoder(const std::filesystem::path& stem) {
  const CheckpointInfo info = read_checkpoint_info(stem);
  auto encoder = Encoder<T>::create(info.identity, 0);
  if (encoder.embedding_dim() != info.embedding_dim) throw RuntimeFailure("checkpoint embedding_dim does not match backbone");
  load_from_archive(read_archive(blob_path(stem)), encoder.network(), "");
  encoder.set_pretrained(info.pretrained);
  return encoder;
}

}  // namespace protofsl
