#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

// Crops `per_class_quota` patches for every class present in `images`.
// A class's quota is spread evenly over its images (sorted by id); the first
// `quota % n` images take one extra patch. Crop origins are uniform over all
// valid positions, drawn from a stream keyed by (seed, image_id), so the
// result does not depend on processing order.
inline std::vector<PatchRecord> extract_patches(const std::vector<SourceImage>& images, std::size_t per_class_quota,
                                                std::size_t patch_size, std::uint64_t seed) {
  require(per_class_quota >= 1, "extract_patches: per_class_quota must be at least 1");
  require(patch_size >= 1, "extract_patches: patch_size must be at least 1");
  std::map<StoneClass, std::vector<const SourceImage*>> by_class;
  for (const auto& img : images) {
    if (img.width < patch_size || img.height < patch_size) {
      throw ValidationError("extract_patches: image " + img.image_id + " is smaller than the patch size");
    }
    if (!img.pixels || img.pixels->size() != img.width * img.height * kChannels) {
      throw ValidationError("extract_patches: image " + img.image_id + " has no pixel data");
    }
    by_class[img.class_key].push_back(&img);
  }
  std::vector<PatchRecord> out;
  out.reserve(by_class.size() * per_class_quota);
  for (auto& [cls, list] : by_class) {
    if (list.empty()) throw ValidationError("extract_patches: class " + to_string(cls) + " has no images");
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->image_id < b->image_id; });
    const std::size_t n = list.size();
    for (std::size_t i = 0; i < n; ++i) {
      const SourceImage& img = *list[i];
      const std::size_t count = per_class_quota / n + (i < per_class_quota % n ? 1 : 0);
      Rng rng(mix_seeds(seed, fnv1a(img.image_id)));
      for (std::size_t j = 0; j < count; ++j) {
        PatchRecord rec;
        rec.origin_x = rng.below(img.width - patch_size + 1);
        rec.origin_y = rng.below(img.height - patch_size + 1);
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "#%04zu", j);
        rec.patch_id = img.image_id + suffix;
        rec.source_image_id = img.image_id;
        rec.class_key = img.class_key;
        rec.view = img.view;
        rec.size = patch_size;
        auto px = std::make_shared<std::vector<std::uint8_t>>(patch_size * patch_size * kChannels);
        for (std::size_t y = 0; y < patch_size; ++y) {
          const std::uint8_t* src = img.pixels->data() + ((rec.origin_y + y) * img.width + rec.origin_x) * kChannels;
          std::copy(src, src + patch_size * kChannels, px->data() + y * patch_size * kChannels);
        }
        rec.raw = std::move(px);
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

// Per-channel mean and population standard deviation over every pixel.
// Sums are exact integers, so the result is independent of patch order.
inline ChannelStats compute_channel_stats(const std::vector<PatchRecord>& patches, std::string scope = {}) {
  require(!patches.empty(), "compute_channel_stats: no patches");
  std::array<unsigned __int128, 3> sum{}, sum_sq{};
  unsigned __int128 n = 0;
  for (const auto& p : patches) {
    require(!p.standardized() && p.raw, "compute_channel_stats: patch " + p.patch_id + " is already standardized");
    const auto& px = *p.raw;
    for (std::size_t i = 0; i < px.size(); i += kChannels) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        const unsigned v = px[i + c];
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    n += px.size() / kChannels;
  }
  ChannelStats stats;
  stats.scope = std::move(scope);
  for (std::size_t c = 0; c < kChannels; ++c) {
    // N * sum(x^2) - sum(x)^2 >= 0, computed without rounding.
    const unsigned __int128 num = n * sum_sq[c] - sum[c] * sum[c];
    if (num == 0) throw ValidationError("compute_channel_stats: channel " + std::to_string(c) + " has zero variance");
    const long double nn = static_cast<long double>(n);
    stats.mean[c] = static_cast<double>(static_cast<long double>(sum[c]) / nn);
    stats.std[c] = static_cast<double>(std::sqrt(static_cast<long double>(num)) / nn);
  }
  return stats;
}

// (x - mean_c) / std_c per channel; provenance is kept.
inline PatchRecord standardize(const PatchRecord& patch, const ChannelStats& stats) {
  if (patch.standardized()) throw ValidationError("standardize: patch " + patch.patch_id + " is already standardized");
  require(patch.raw != nullptr, "standardize: patch " + patch.patch_id + " has no pixels");
  for (double s : stats.std) require(s > 0.0, "standardize: channel std must be positive");
  auto real = std::make_shared<std::vector<double>>(patch.raw->size());
  const auto& raw = *patch.raw;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t c = i % kChannels;
    (*real)[i] = (static_cast<double>(raw[i]) - stats.mean[c]) / stats.std[c];
  }
  PatchRecord out = patch;
  out.raw = nullptr;
  out.real = std::move(real);
  return out;
}

// Assigns whole source images to train or test so that roughly
// `train_fraction` of each class's patches land in train. Per class, images
// are visited largest-first (seeded shuffle breaks ties) and added to train
// while they fit under the target; the achieved train mass then lies within
// one image's patch count of the target and both sides are nonempty.
inline SplitAssignment split_by_image(const std::vector<PatchRecord>& patches, double train_fraction,
                                      std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "split_by_image: train_fraction must lie in (0, 1)");
  std::map<StoneClass, std::map<std::string, std::size_t>> mass;
  for (const auto& p : patches) ++mass[p.class_key][p.source_image_id];

  SplitAssignment out;
  for (const auto& [cls, images] : mass) {
    if (images.size() < 2) {
      throw ValidationError("split_by_image: class " + to_string(cls) +
                            " has a single source image; train and test cannot both be nonempty");
    }
    std::vector<std::pair<std::string, std::size_t>> order(images.begin(), images.end());
    std::size_t total = 0;
    for (const auto& [_, m] : order) total += m;
    Rng rng(mix_seeds(seed, fnv1a(to_string(cls))));
    rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    const double target = train_fraction * static_cast<double>(total);
    std::vector<bool> in_train(order.size(), false);
    std::size_t train_mass = 0, train_count = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (static_cast<double>(train_mass + order[i].second) <= target + 1e-9) {
        in_train[i] = true;
        train_mass += order[i].second;
        ++train_count;
      }
    }
    // Every image was too large for the target: seed train with the smallest.
    if (train_count == 0) {
      in_train.back() = true;
      train_mass = order.back().second;
      ++train_count;
    }
    // One more test image may still bring train closer to the target.
    for (std::size_t i = order.size(); i-- > 0;) {
      if (in_train[i] || train_count + 1 == order.size()) continue;
      const double before = std::abs(static_cast<double>(train_mass) - target);
      const double after = std::abs(static_cast<double>(train_mass + order[i].second) - target);
      if (after < before) {
        in_train[i] = true;
        train_mass += order[i].second;
        ++train_count;
      }
      break;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      out.by_image[order[i].first] = in_train[i] ? Split::train : Split::test;
    }
  }
  for (const auto& p : patches) out.by_patch[p.patch_id] = out.by_image.at(p.source_image_id);
  return out;
}

// Packages records and their split; channel statistics come from the train
// split only and carry its id as scope.
inline DatasetManifest make_manifest(std::vector<PatchRecord> records, DatasetView view,
                                     const std::map<std::string, Split>& split, std::uint64_t seed) {
  DatasetManifest m;
  m.view = view;
  m.seed = seed;
  std::vector<PatchRecord> train;
  for (const auto& r : records) {
    auto it = split.find(r.patch_id);
    require(it != split.end(), "make_manifest: patch " + r.patch_id + " has no split");
    m.split.emplace(r.patch_id, it->second);
    if (it->second == Split::train) train.push_back(r);
  }
  require(m.split.size() == records.size(), "make_manifest: duplicate patch ids");
  m.records = std::move(records);
  m.channel_stats = compute_channel_stats(train, m.train_id());
  return m;
}

// The full per-view pipeline: patches, image-level split, train-only stats.
inline DatasetManifest prepare_view(const std::vector<SourceImage>& images, std::size_t per_class_quota,
                                    std::size_t patch_size, double train_fraction, std::uint64_t seed) {
  require(!images.empty(), "prepare_view: no images");
  const View view = images.front().view;
  for (const auto& img : images) require(img.view == view, "prepare_view: images mix SUR and SEC views");
  auto patches = extract_patches(images, per_class_quota, patch_size, seed);
  const auto split = split_by_image(patches, train_fraction, seed);
  return make_manifest(std::move(patches), as_dataset_view(view), split.by_patch, seed);
}

// MIX = SUR ∪ SEC with split labels preserved; stats are recomputed on the
// union's train split.
inline DatasetManifest build_view(const DatasetManifest& sur, const DatasetManifest& sec) {
  require(sur.view == DatasetView::SUR && sec.view == DatasetView::SEC, "build_view: expected a SUR and a SEC manifest");
  require(!sur.records.empty() && !sec.records.empty(), "build_view: both views must be nonempty");
  std::vector<PatchRecord> records = sur.records;
  records.insert(records.end(), sec.records.begin(), sec.records.end());
  std::map<std::string, Split> split = sur.split;
  for (const auto& [id, s] : sec.split) {
    if (!split.emplace(id, s).second) throw ValidationError("build_view: patch id collision on " + id);
  }
  return make_manifest(std::move(records), DatasetView::MIX, split, mix_seeds(sur.seed, sec.seed));
}

}  // namespace protofsl
