#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/tensor.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

// Read access to a manifest's patches as standardized NCHW batches. The
// manifest's channel statistics must have been computed on its own train
// split; anything else is rejected as a leakage risk.
class PatchSource {
 public:
  explicit PatchSource(const DatasetManifest& manifest)
      : records_(manifest.records), stats_(manifest.channel_stats) {
    if (stats_.scope != manifest.train_id()) {
      throw ValidationError("channel stats scope '" + stats_.scope + "' does not match the train split '" +
                            manifest.train_id() + "'");
    }
    for (double s : stats_.std) require(s > 0.0, "channel std must be positive");
    for (std::size_t i = 0; i < records_.size(); ++i) index_.emplace(records_[i].patch_id, i);
  }

  const PatchRecord& record(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown patch id " + id);
    return records_[it->second];
  }

  const ChannelStats& stats() const { return stats_; }

  template <typename T = float>
  Tensor<T> batch(std::span<const std::string> ids) const {
    require(!ids.empty(), "patch batch is empty");
    const std::size_t side = record(ids.front()).size;
    Tensor<T> out({ids.size(), kChannels, side, side});
    const std::size_t plane = side * side;
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const PatchRecord& r = record(ids[n]);
      require(r.size == side, "patches in one batch must share a size");
      T* dst = out.data() + n * kChannels * plane;
      if (r.standardized()) {
        for (std::size_t p = 0; p < plane; ++p) {
          for (std::size_t c = 0; c < kChannels; ++c) dst[c * plane + p] = static_cast<T>((*r.real)[p * kChannels + c]);
        }
      } else {
        for (std::size_t p = 0; p < plane; ++p) {
          for (std::size_t c = 0; c < kChannels; ++c) {
            dst[c * plane + p] = static_cast<T>(((*r.raw)[p * kChannels + c] - stats_.mean[c]) / stats_.std[c]);
          }
        }
      }
    }
    return out;
  }

 private:
  std::vector<PatchRecord> records_;
  ChannelStats stats_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace protofsl
