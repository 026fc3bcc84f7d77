#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protofsl/core/binary_io.hpp"
#include "protofsl/core/error.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

inline constexpr const char* kManifestFormat = "protofsl-manifest/1";
inline constexpr const char* kPayloadMagic = "PSC1";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kPayloadFile = "patches.psc";

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : m.records) {
    records.push_back({{"patch_id", r.patch_id},
                       {"source_image_id", r.source_image_id},
                       {"class", to_string(r.class_key)},
                       {"view", to_string(r.view)},
                       {"split", to_string(m.split.at(r.patch_id))},
                       {"origin", {r.origin_x, r.origin_y}},
                       {"size", r.size}});
  }
  return {{"format", kManifestFormat},
          {"view", to_string(m.view)},
          {"seed", m.seed},
          {"channel_stats", {{"mean", m.channel_stats.mean}, {"std", m.channel_stats.std}, {"scope", m.channel_stats.scope}}},
          {"payload", kPayloadFile},
          {"records", std::move(records)}};
}

// Payload: "PSC1", u32 record count, u32 height, u32 width, u32 channels,
// then raw pixel values as little-endian f32, HWC, in record order.
inline void write_payload(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  const std::size_t side = m.records.empty() ? 0 : m.records.front().size;
  bin::put_magic(out, kPayloadMagic);
  bin::put_u32(out, static_cast<std::uint32_t>(m.records.size()));
  bin::put_u32(out, static_cast<std::uint32_t>(side));
  bin::put_u32(out, static_cast<std::uint32_t>(side));
  bin::put_u32(out, static_cast<std::uint32_t>(kChannels));
  for (const auto& r : m.records) {
    require(r.size == side, "write_payload: all patches must share one size");
    require(r.raw != nullptr, "write_payload: patch " + r.patch_id + " has no raw pixels");
    for (auto v : *r.raw) bin::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

inline void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kManifestFile);
  if (!out) throw RuntimeFailure("cannot write " + (dir / kManifestFile).string());
  out << manifest_to_json(m).dump(1) << "\n";
  write_payload(dir / kPayloadFile, m);
}

inline DatasetManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw RuntimeFailure("cannot open " + (dir / kManifestFile).string());
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", std::string{}) != kManifestFormat) throw RuntimeFailure("unsupported manifest format in " + dir.string());
  DatasetManifest m;
  m.view = parse_dataset_view(j.at("view").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& cs = j.at("channel_stats");
  m.channel_stats.mean = cs.at("mean").get<std::array<double, 3>>();
  m.channel_stats.std = cs.at("std").get<std::array<double, 3>>();
  m.channel_stats.scope = cs.at("scope").get<std::string>();

  const auto payload_path = dir / j.value("payload", std::string(kPayloadFile));
  std::ifstream payload(payload_path, std::ios::binary);
  if (!payload) throw RuntimeFailure("cannot open " + payload_path.string());
  bin::expect_magic(payload, kPayloadMagic, payload_path.string());
  const auto count = bin::get_u32(payload);
  const auto height = bin::get_u32(payload);
  const auto width = bin::get_u32(payload);
  const auto channels = bin::get_u32(payload);
  const auto& recs = j.at("records");
  if (count != recs.size() || height != width || channels != kChannels) {
    throw RuntimeFailure("payload header does not match manifest in " + dir.string());
  }
  for (const auto& jr : recs) {
    PatchRecord r;
    r.patch_id = jr.at("patch_id").get<std::string>();
    r.source_image_id = jr.at("source_image_id").get<std::string>();
    r.class_key = parse_class(jr.at("class").get<std::string>());
    r.view = parse_view(jr.at("view").get<std::string>());
    r.origin_x = jr.at("origin").at(0).get<std::size_t>();
    r.origin_y = jr.at("origin").at(1).get<std::size_t>();
    r.size = jr.at("size").get<std::size_t>();
    if (r.size != height) throw RuntimeFailure("patch " + r.patch_id + " size disagrees with payload");
    auto px = std::make_shared<std::vector<std::uint8_t>>(static_cast<std::size_t>(height) * width * channels);
    for (auto& v : *px) v = static_cast<std::uint8_t>(bin::get_f32(payload));
    r.raw = std::move(px);
    if (!m.split.emplace(r.patch_id, parse_split(jr.at("split").get<std::string>())).second) {
      throw RuntimeFailure("duplicate patch id " + r.patch_id + " in manifest");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace protofsl
