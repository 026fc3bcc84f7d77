#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

struct EpisodeSpec {
  std::size_t n_way = 6;
  std::size_t k_shot = 10;
  std::size_t n_query = 10;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_way >= 2, "episode spec: n_way must be at least 2");
    require(k_shot >= 1, "episode spec: k_shot must be at least 1");
    require(n_query >= 1, "episode spec: n_query must be at least 1");
  }
};

// Patch ids available for episode sampling, grouped by class (sorted ids).
struct EpisodePool {
  std::map<StoneClass, std::vector<std::string>> by_class;
  std::uint64_t seed = 0;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, ids] : by_class) n += ids.size();
    return n;
  }
};

struct BudgetedDataset {
  DatasetView view = DatasetView::SUR;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  EpisodePool pool;  // the selected train patches

  std::vector<std::string> selected_patch_ids() const {
    std::vector<std::string> ids;
    for (const auto& [_, v] : pool.by_class) ids.insert(ids.end(), v.begin(), v.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // Hash of the sorted selected id set; equal hashes mean equal training data.
  std::string selection_hash() const {
    std::uint64_t h = fnv1a("selection");
    for (const auto& id : selected_patch_ids()) {
      h = fnv1a(id, h);
      h = fnv1a(std::string_view("\n", 1), h);
    }
    return hex64(h);
  }
};

inline std::size_t budget_count(double fraction, std::size_t class_size) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(class_size) + 0.5 + 1e-9));
}

// Stratified sampling without replacement from the train split: each class
// keeps round_half_up(fraction * count) patches. The test split is untouched.
inline BudgetedDataset apply_budget(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "apply_budget: fraction must lie in (0, 1]");
  std::map<StoneClass, std::vector<std::string>> train;
  for (const auto& r : manifest.records) {
    if (manifest.split.at(r.patch_id) == Split::train) train[r.class_key].push_back(r.patch_id);
  }
  BudgetedDataset out;
  out.view = manifest.view;
  out.fraction = fraction;
  out.seed = seed;
  out.pool.seed = seed;
  for (auto& [cls, ids] : train) {
    std::sort(ids.begin(), ids.end());
    const std::size_t keep = std::min(ids.size(), budget_count(fraction, ids.size()));
    Rng rng(mix_seeds(seed, fnv1a("budget"), fnv1a(to_string(cls))));
    rng.partial_shuffle(ids, keep);
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
    if (!ids.empty()) out.pool.by_class.emplace(cls, std::move(ids));
  }
  return out;
}

// Every test patch, for evaluation episodes.
inline EpisodePool test_pool(const DatasetManifest& manifest, std::uint64_t seed) {
  EpisodePool pool;
  pool.seed = seed;
  for (const auto& r : manifest.records) {
    if (manifest.split.at(r.patch_id) == Split::test) pool.by_class[r.class_key].push_back(r.patch_id);
  }
  for (auto& [_, ids] : pool.by_class) std::sort(ids.begin(), ids.end());
  return pool;
}

struct EpisodeItem {
  std::string patch_id;
  std::size_t label = 0;

  bool operator==(const EpisodeItem&) const = default;
};

// Support and query are class-major: all items of label 0, then label 1, ...
struct Episode {
  std::size_t index = 0;
  std::vector<StoneClass> classes;
  std::vector<EpisodeItem> support;
  std::vector<EpisodeItem> query;

  bool operator==(const Episode&) const = default;

  std::vector<std::string> support_ids() const {
    std::vector<std::string> ids;
    for (const auto& it : support) ids.push_back(it.patch_id);
    return ids;
  }
  std::vector<std::string> query_ids() const {
    std::vector<std::string> ids;
    for (const auto& it : query) ids.push_back(it.patch_id);
    return ids;
  }
  std::vector<std::size_t> support_labels() const {
    std::vector<std::size_t> l;
    for (const auto& it : support) l.push_back(it.label);
    return l;
  }
  std::vector<std::size_t> query_labels() const {
    std::vector<std::size_t> l;
    for (const auto& it : query) l.push_back(it.label);
    return l;
  }
};

// A pure function of (pool, spec, index): the stream key mixes the pool
// seed, the spec seed and the episode index.
inline Episode sample_episode(const EpisodePool& pool, const EpisodeSpec& spec, std::size_t episode_index) {
  spec.validate();
  std::vector<StoneClass> available;
  for (const auto& [cls, ids] : pool.by_class) {
    if (!ids.empty()) available.push_back(cls);
  }
  if (available.size() < spec.n_way) {
    throw ValidationError("sample_episode: " + std::to_string(spec.n_way) + "-way episode needs " +
                          std::to_string(spec.n_way) + " classes, pool has " + std::to_string(available.size()));
  }
  Rng rng(mix_seeds(pool.seed, spec.seed, episode_index));
  rng.shuffle(available);
  available.resize(spec.n_way);

  Episode ep;
  ep.index = episode_index;
  ep.classes = available;
  const std::size_t needed = spec.k_shot + spec.n_query;
  for (std::size_t label = 0; label < spec.n_way; ++label) {
    const StoneClass cls = available[label];
    std::vector<std::string> ids = pool.by_class.at(cls);
    if (ids.size() < needed) {
      throw ValidationError("sample_episode: class " + to_string(cls) + " has " + std::to_string(ids.size()) +
                            " patches, needs " + std::to_string(needed) + " (k_shot + n_query)");
    }
    rng.partial_shuffle(ids, needed);
    for (std::size_t i = 0; i < spec.k_shot; ++i) ep.support.push_back({ids[i], label});
    for (std::size_t i = spec.k_shot; i < needed; ++i) ep.query.push_back({ids[i], label});
  }
  return ep;
}

// Lazily materialized sequence of episodes 0..count-1.
class EpisodeStream {
 public:
  EpisodeStream(EpisodePool pool, EpisodeSpec spec, std::size_t count)
      : pool_(std::move(pool)), spec_(spec), count_(count) {
    require(count >= 1, "episode_stream: count must be at least 1");
    spec_.validate();
  }

  std::size_t size() const { return count_; }
  Episode operator[](std::size_t i) const {
    require(i < count_, "episode_stream: index out of range");
    return sample_episode(pool_, spec_, i);
  }
  const EpisodeSpec& spec() const { return spec_; }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Episode;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = Episode;

    iterator(const EpisodeStream* s, std::size_t i) : s_(s), i_(i) {}
    Episode operator*() const { return (*s_)[i_]; }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const EpisodeStream* s_;
    std::size_t i_;
  };
  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, count_}; }

 private:
  EpisodePool pool_;
  EpisodeSpec spec_;
  std::size_t count_;
};

inline EpisodeStream episode_stream(const BudgetedDataset& data, const EpisodeSpec& spec, std::size_t count) {
  return EpisodeStream(data.pool, spec, count);
}

// Debug dump: patch ids per role.
inline nlohmann::json episode_to_json(const Episode& ep) {
  nlohmann::json classes = nlohmann::json::array();
  for (auto c : ep.classes) classes.push_back(to_string(c));
  auto items = [](const std::vector<EpisodeItem>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& it : v) a.push_back({{"patch_id", it.patch_id}, {"label", it.label}});
    return a;
  };
  return {{"index", ep.index}, {"classes", classes}, {"support", items(ep.support)}, {"query", items(ep.query)}};
}

}  // namespace protofsl
