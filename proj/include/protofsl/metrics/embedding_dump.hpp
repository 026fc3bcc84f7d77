#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "protofsl/core/binary_io.hpp"
#include "protofsl/core/error.hpp"
#include "protofsl/data/patch_source.hpp"
#include "protofsl/data/types.hpp"
#include "protofsl/nn/encoder.hpp"

namespace protofsl {

struct EmbeddingDump {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> vectors;  // rows x dim, row-major
  std::vector<StoneClass> labels;
  DatasetView view = DatasetView::SUR;
  std::string config_hash;
};

inline constexpr const char* kEmbeddingMagic = "PSEMB1";

// Binary layout: "PSEMB1", u32 M, u32 D, u8 view (0 SUR, 1 SEC, 2 MIX),
// config hash (u32 length + bytes), M*D little-endian f32, M class bytes.
inline void write_embedding_dump(const std::filesystem::path& path, const EmbeddingDump& d) {
  require(d.rows > 0, "embedding dump: no rows");
  require(d.vectors.size() == d.rows * d.dim && d.labels.size() == d.rows, "embedding dump: inconsistent sizes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write embedding dump " + path.string());
  bin::put_magic(out, kEmbeddingMagic);
  bin::put_u32(out, static_cast<std::uint32_t>(d.rows));
  bin::put_u32(out, static_cast<std::uint32_t>(d.dim));
  bin::put_u8(out, static_cast<std::uint8_t>(d.view));
  bin::put_string(out, d.config_hash);
  for (float v : d.vectors) bin::put_f32(out, v);
  for (auto c : d.labels) bin::put_u8(out, static_cast<std::uint8_t>(c));
  if (!out) throw RuntimeFailure("write failed for embedding dump " + path.string());
}

inline EmbeddingDump read_embedding_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open embedding dump " + path.string());
  bin::expect_magic(in, kEmbeddingMagic, path.string());
  EmbeddingDump d;
  d.rows = bin::get_u32(in);
  d.dim = bin::get_u32(in);
  const auto view = bin::get_u8(in);
  if (view > 2) throw RuntimeFailure("embedding dump: bad view code");
  d.view = static_cast<DatasetView>(view);
  d.config_hash = bin::get_string(in);
  d.vectors.resize(d.rows * d.dim);
  for (auto& v : d.vectors) v = bin::get_f32(in);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const auto c = bin::get_u8(in);
    if (c >= kAllClasses.size()) throw RuntimeFailure("embedding dump: bad class code");
    d.labels.push_back(static_cast<StoneClass>(c));
  }
  return d;
}

// Tab-separated text variant: header comment, then "class<TAB>v0<TAB>v1...".
inline void write_embedding_text(const std::filesystem::path& path, const EmbeddingDump& d) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "# view=" << to_string(d.view) << " rows=" << d.rows << " dim=" << d.dim << " config=" << d.config_hash << "\n";
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (std::size_t i = 0; i < d.rows; ++i) {
    out << to_string(d.labels[i]);
    for (std::size_t j = 0; j < d.dim; ++j) out << '\t' << d.vectors[i * d.dim + j];
    out << '\n';
  }
}

// Evaluation-mode embeddings of `ids`, batched. The 2-D projection for
// plots is left to external tooling.
template <typename T>
EmbeddingDump export_embeddings(const Encoder<T>& encoder, const PatchSource& source,
                                const std::vector<std::string>& ids, DatasetView view, std::string config_hash,
                                const std::filesystem::path& destination, std::size_t batch_size = 32) {
  require(!ids.empty(), "export_embeddings: no patches");
  EmbeddingDump d;
  d.rows = ids.size();
  d.dim = encoder.embedding_dim();
  d.view = view;
  d.config_hash = std::move(config_hash);
  d.vectors.reserve(d.rows * d.dim);
  for (std::size_t start = 0; start < ids.size(); start += batch_size) {
    const std::size_t end = std::min(ids.size(), start + batch_size);
    const std::span<const std::string> chunk(ids.data() + start, end - start);
    const Tensor<T> emb = encoder.infer(source.batch<T>(chunk));
    for (auto v : emb.values()) d.vectors.push_back(static_cast<float>(v));
  }
  for (const auto& id : ids) d.labels.push_back(source.record(id).class_key);
  write_embedding_dump(destination, d);
  return d;
}

}  // namespace protofsl
