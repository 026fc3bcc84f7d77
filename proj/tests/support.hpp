#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "protofsl/protofsl.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("protofsl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Small hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  std::size_t size(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng_.below(hi - lo + 1)); }
  double real(double lo, double hi) { return rng_.uniform(lo, hi); }
  double normal() { return rng_.normal(); }
  bool coin() { return rng_.below(2) == 1; }
  protofsl::Rng& rng() { return rng_; }

 private:
  protofsl::Rng rng_;
};

// Unstandardized patch record with random pixels; no source image needed.
inline protofsl::PatchRecord make_patch(const std::string& image_id, std::size_t index, protofsl::StoneClass cls,
                                        std::size_t side, protofsl::Rng& rng,
                                        protofsl::View view = protofsl::View::SUR) {
  protofsl::PatchRecord r;
  r.patch_id = image_id + "#" + std::to_string(index);
  r.source_image_id = image_id;
  r.class_key = cls;
  r.view = view;
  r.size = side;
  auto px = std::make_shared<std::vector<std::uint8_t>>(side * side * protofsl::kChannels);
  for (auto& v : *px) v = static_cast<std::uint8_t>(rng.below(256));
  r.raw = std::move(px);
  return r;
}

// Patches for `classes`, `images` source images per class and
// `patches_per_image` patches each.
inline std::vector<protofsl::PatchRecord> make_patches(std::size_t n_classes, std::size_t images,
                                                       std::size_t patches_per_image, std::size_t side,
                                                       std::uint64_t seed,
                                                       protofsl::View view = protofsl::View::SUR) {
  protofsl::Rng rng(seed);
  std::vector<protofsl::PatchRecord> out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto cls = protofsl::kAllClasses[c];
    for (std::size_t i = 0; i < images; ++i) {
      const std::string img = protofsl::to_string(view) + "/" + protofsl::to_string(cls) + "/img" + std::to_string(i);
      for (std::size_t p = 0; p < patches_per_image; ++p) out.push_back(make_patch(img, p, cls, side, rng, view));
    }
  }
  return out;
}

// Manifest with an explicit split: the first `train_images` images of every
// class are train, the rest test.
inline protofsl::DatasetManifest manifest_with_split(std::vector<protofsl::PatchRecord> records, std::size_t train_images,
                                                     protofsl::DatasetView view = protofsl::DatasetView::SUR) {
  std::map<std::string, protofsl::Split> split;
  for (const auto& r : records) {
    const std::size_t img = std::stoul(r.source_image_id.substr(r.source_image_id.rfind("img") + 3));
    split[r.patch_id] = img < train_images ? protofsl::Split::train : protofsl::Split::test;
  }
  return protofsl::make_manifest(std::move(records), view, split, 0);
}

// Synthetic corpus prepared end to end (images -> patches -> split -> stats).
inline protofsl::DatasetManifest synthetic_manifest(double separability, std::size_t images_per_class,
                                                    std::size_t quota, std::uint64_t seed,
                                                    std::size_t n_classes = 6,
                                                    std::size_t patch_size = protofsl::kPatchSize) {
  protofsl::SyntheticOptions opt;
  opt.n_classes = n_classes;
  opt.images_per_class = images_per_class;
  opt.separability = separability;
  opt.seed = seed;
  opt.image_size = patch_size >= protofsl::kPatchSize ? patch_size : 2 * patch_size;
  return protofsl::prepare_view(protofsl::gen_synthetic_dataset(opt), quota, patch_size, 0.8, seed);
}

// Central finite difference of f at x[i]. The divisor is the step actually
// representable in T.
template <typename T>
double central_difference(T* x, std::size_t i, double h, const std::function<double()>& f) {
  const T orig = x[i];
  const T up_at = static_cast<T>(orig + h);
  const T down_at = static_cast<T>(orig - h);
  x[i] = up_at;
  const double up = f();
  x[i] = down_at;
  const double down = f();
  x[i] = orig;
  return (up - down) / (static_cast<double>(up_at) - static_cast<double>(down_at));
}

inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing_support
