#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/data/types.hpp"
#include "protofsl/episodic/episodes.hpp"
#include "protofsl/nn/encoder.hpp"

namespace protofsl {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { prototypical, baseline };

inline std::string to_string(Mode m) { return m == Mode::prototypical ? "prototypical" : "baseline"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "prototypical" || s == "proto") return Mode::prototypical;
  if (s == "baseline") return Mode::baseline;
  throw ValidationError("unknown mode '" + s + "' (expected prototypical or baseline)");
}

struct ExperimentConfig {
  DatasetView view = DatasetView::SUR;
  Backbone backbone = Backbone::resnet34;
  std::size_t n_way = 6;
  std::size_t k_shot = 10;
  std::size_t n_query = 10;
  double budget_fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t train_iterations = 1000;
  std::size_t eval_episodes = 100;
  double learning_rate = 1e-4;
  Mode mode = Mode::prototypical;
  std::size_t batch_size = 32;       // baseline only
  std::size_t baseline_epochs = 0;   // baseline only; 0 picks the epoch count nearest train_iterations steps
  std::string weights;               // checkpoint stem for pretrained initialization; empty = random init

  void validate() const {
    EpisodeSpec{n_way, k_shot, n_query, 0}.validate();
    require(budget_fraction > 0.0 && budget_fraction <= 1.0, "config: budget_fraction must lie in (0, 1]");
    require(train_iterations >= 1, "config: train_iterations must be at least 1");
    require(eval_episodes >= 1, "config: eval_episodes must be at least 1");
    require(learning_rate > 0.0, "config: learning_rate must be positive");
    require(batch_size >= 1, "config: batch_size must be at least 1");
  }

  // n_way-k_shot label as used in table rows, e.g. "6-10".
  std::string shot_label() const { return std::to_string(n_way) + "-" + std::to_string(k_shot); }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"view", to_string(c.view)},
          {"backbone", to_string(c.backbone)},
          {"n_way", c.n_way},
          {"k_shot", c.k_shot},
          {"n_query", c.n_query},
          {"budget_fraction", c.budget_fraction},
          {"seed", c.seed},
          {"train_iterations", c.train_iterations},
          {"eval_episodes", c.eval_episodes},
          {"learning_rate", c.learning_rate},
          {"mode", to_string(c.mode)},
          {"batch_size", c.batch_size},
          {"baseline_epochs", c.baseline_epochs},
          {"weights", c.weights}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.view = parse_dataset_view(j.at("view").get<std::string>());
  c.backbone = parse_backbone(j.at("backbone").get<std::string>());
  c.n_way = j.at("n_way").get<std::size_t>();
  c.k_shot = j.at("k_shot").get<std::size_t>();
  c.n_query = j.at("n_query").get<std::size_t>();
  c.budget_fraction = j.at("budget_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train_iterations = j.at("train_iterations").get<std::size_t>();
  c.eval_episodes = j.at("eval_episodes").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.batch_size = j.value("batch_size", std::size_t{32});
  c.baseline_epochs = j.value("baseline_epochs", std::size_t{0});
  c.weights = j.value("weights", std::string{});
  return c;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

// Identifies a cell: FNV-1a over the canonical (sorted-key) JSON encoding.
inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

// Seed for everything cell-specific (initialization, episode streams). Mixing
// in the config hash keeps existing cells unchanged when grid axes grow.
inline std::uint64_t cell_seed(const ExperimentConfig& c) { return mix_seeds(c.seed, fnv1a(config_hash(c))); }

// Seed for the budgeted subset. It depends only on (seed, view, fraction), so
// both modes and every shot setting of a cell draw the same training patches.
inline std::uint64_t budget_seed(const ExperimentConfig& c) {
  std::uint64_t bits = 0;
  static_assert(sizeof bits == sizeof c.budget_fraction);
  std::memcpy(&bits, &c.budget_fraction, sizeof bits);
  return mix_seeds(c.seed, fnv1a(to_string(c.view)), bits);
}

struct GridSpec {
  std::vector<DatasetView> views;
  std::vector<Backbone> backbones;
  std::vector<std::size_t> shots;
  std::vector<double> budgets;
  ExperimentConfig base;  // every other field; its seed is the shared base seed

  void validate() const {
    require(!views.empty(), "grid: views axis is empty");
    require(!backbones.empty(), "grid: backbones axis is empty");
    require(!shots.empty(), "grid: shots axis is empty");
    require(!budgets.empty(), "grid: budgets axis is empty");
  }

  std::size_t size() const { return views.size() * backbones.size() * shots.size() * budgets.size(); }

  // Cells in view, backbone, shot, budget order.
  std::vector<ExperimentConfig> cells() const {
    validate();
    std::vector<ExperimentConfig> out;
    for (auto v : views) {
      for (auto b : backbones) {
        for (auto k : shots) {
          for (auto f : budgets) {
            ExperimentConfig c = base;
            c.view = v;
            c.backbone = b;
            c.k_shot = k;
            c.budget_fraction = f;
            c.validate();
            out.push_back(c);
          }
        }
      }
    }
    return out;
  }
};

}  // namespace protofsl
