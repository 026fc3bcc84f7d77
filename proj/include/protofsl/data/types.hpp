#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"

namespace protofsl {

// Stone type, by main component: Whewellite, Weddellite, Uric Acid,
// Struvite, Brushite, Cystine.
enum class StoneClass : std::uint8_t { WW, WD, UA, STR, BRU, CYS };

inline constexpr std::array<StoneClass, 6> kAllClasses{StoneClass::WW,  StoneClass::WD,  StoneClass::UA,
                                                       StoneClass::STR, StoneClass::BRU, StoneClass::CYS};

inline std::string to_string(StoneClass c) {
  static constexpr std::array<const char*, 6> names{"WW", "WD", "UA", "STR", "BRU", "CYS"};
  return names[static_cast<std::size_t>(c)];
}

inline StoneClass parse_class(const std::string& s) {
  for (auto c : kAllClasses) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown class key '" + s + "'");
}

enum class View : std::uint8_t { SUR, SEC };
enum class DatasetView : std::uint8_t { SUR, SEC, MIX };

inline std::string to_string(View v) { return v == View::SUR ? "SUR" : "SEC"; }
inline std::string to_string(DatasetView v) {
  switch (v) {
    case DatasetView::SUR: return "SUR";
    case DatasetView::SEC: return "SEC";
    case DatasetView::MIX: return "MIX";
  }
  return "?";
}
inline View parse_view(const std::string& s) {
  if (s == "SUR") return View::SUR;
  if (s == "SEC") return View::SEC;
  throw ValidationError("unknown view '" + s + "' (expected SUR or SEC)");
}
inline DatasetView parse_dataset_view(const std::string& s) {
  if (s == "SUR") return DatasetView::SUR;
  if (s == "SEC") return DatasetView::SEC;
  if (s == "MIX") return DatasetView::MIX;
  throw ValidationError("unknown view '" + s + "' (expected SUR, SEC or MIX)");
}
inline DatasetView as_dataset_view(View v) { return v == View::SUR ? DatasetView::SUR : DatasetView::SEC; }

using PixelBuffer = std::shared_ptr<const std::vector<std::uint8_t>>;

// Full-resolution RGB image, interleaved HWC, 8 bits per channel.
struct SourceImage {
  std::string image_id;
  StoneClass class_key = StoneClass::WW;
  View view = View::SUR;
  std::size_t width = 0;
  std::size_t height = 0;
  PixelBuffer pixels;
};

inline constexpr std::size_t kPatchSize = 256;
inline constexpr std::size_t kChannels = 3;

// One square crop with provenance. Raw patches hold 8-bit HWC pixels;
// standardized patches hold real-valued HWC pixels instead.
struct PatchRecord {
  std::string patch_id;
  std::string source_image_id;
  StoneClass class_key = StoneClass::WW;
  View view = View::SUR;
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  std::size_t size = kPatchSize;
  PixelBuffer raw;
  std::shared_ptr<const std::vector<double>> real;

  bool standardized() const { return real != nullptr; }
  std::size_t pixel_count() const { return size * size; }
};

struct ChannelStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
  std::string scope;
};

enum class Split : std::uint8_t { train, test };

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }
inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + s + "'");
}

struct SplitAssignment {
  std::map<std::string, Split> by_patch;
  std::map<std::string, Split> by_image;
};

// Identifier of a training subset: hash over its sorted patch ids.
inline std::string train_split_id(const std::map<std::string, Split>& by_patch) {
  std::uint64_t h = fnv1a("train");
  for (const auto& [id, s] : by_patch) {
    if (s == Split::train) {
      h = fnv1a(id, h);
      h = fnv1a(std::string_view("\n", 1), h);
    }
  }
  return "train-" + hex64(h);
}

struct DatasetManifest {
  std::vector<PatchRecord> records;
  DatasetView view = DatasetView::SUR;
  std::map<std::string, Split> split;
  ChannelStats channel_stats;
  std::uint64_t seed = 0;

  std::string train_id() const { return train_split_id(split); }

  std::vector<std::string> ids_in(Split s) const {
    std::vector<std::string> out;
    for (const auto& r : records) {
      if (split.at(r.patch_id) == s) out.push_back(r.patch_id);
    }
    return out;
  }

  std::map<StoneClass, std::size_t> class_counts() const {
    std::map<StoneClass, std::size_t> counts;
    for (const auto& r : records) ++counts[r.class_key];
    return counts;
  }
};

}  // namespace protofsl
