#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/data/patch_source.hpp"
#include "protofsl/episodic/episodes.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/nn/adam.hpp"
#include "protofsl/nn/checkpoint.hpp"
#include "protofsl/nn/encoder.hpp"
#include "protofsl/nn/layers.hpp"
#include "protofsl/proto/prototypes.hpp"

namespace protofsl {

struct ClassifierConfig {
  Backbone backbone = Backbone::resnet34;
  std::size_t n_classes = 6;
  double learning_rate = 1e-4;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_classes >= 2, "classifier: n_classes must be at least 2");
    require(epochs >= 1, "classifier: epochs must be at least 1");
    require(batch_size >= 1, "classifier: batch_size must be at least 1");
    require(learning_rate > 0.0, "classifier: learning rate must be positive");
  }
};

inline std::size_t steps_per_epoch(std::size_t n_samples, std::size_t batch_size) {
  return (n_samples + batch_size - 1) / batch_size;
}

// Epoch count whose total optimizer steps come closest to `target_steps`.
inline std::size_t epochs_for_steps(std::size_t n_samples, std::size_t batch_size, std::size_t target_steps) {
  require(n_samples >= 1 && batch_size >= 1, "epochs_for_steps: empty training set");
  const double per = static_cast<double>(steps_per_epoch(n_samples, batch_size));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(target_steps) / per)));
}

// Encoder plus a linear head over the embedding.
template <typename T = float>
struct Classifier {
  ClassifierConfig config;
  Encoder<T> encoder;
  nn::Linear<T> head;
  std::vector<StoneClass> class_order;  // head output k predicts class_order[k]
  std::size_t steps = 0;
  std::vector<double> loss_history;

  std::size_t label_of(StoneClass c) const {
    auto it = std::find(class_order.begin(), class_order.end(), c);
    if (it == class_order.end()) throw ValidationError("classifier: class " + to_string(c) + " is not in the head");
    return static_cast<std::size_t>(it - class_order.begin());
  }

  // Evaluation-mode logits {N, n_classes}.
  Tensor<T> logits(const Tensor<T>& images) const { return head.infer(encoder.infer(images)); }
};

namespace detail {

template <typename T>
nn::Linear<T> fresh_head(std::size_t dim, std::size_t n_classes, std::uint64_t seed) {
  nn::Linear<T> head(dim, n_classes);
  Rng rng(mix_seeds(seed, fnv1a("head")));
  head.init(rng);
  return head;
}

}  // namespace detail

// Fine-tunes `encoder` and a fresh head end to end with cross-entropy on
// shuffled mini-batches of the budgeted train patches.
template <typename T>
Classifier<T> train_baseline(const ClassifierConfig& config, const BudgetedDataset& data, const PatchSource& source,
                             Encoder<T> encoder) {
  config.validate();
  require(encoder.identity() == config.backbone, "train_baseline: encoder does not match the configured backbone");
  require(data.pool.by_class.size() == config.n_classes,
          "train_baseline: budgeted data has " + std::to_string(data.pool.by_class.size()) + " classes, config expects " +
              std::to_string(config.n_classes));
  const std::size_t dim = encoder.embedding_dim();
  Classifier<T> model{config, std::move(encoder), detail::fresh_head<T>(dim, config.n_classes, config.seed), {}, 0, {}};
  std::vector<EpisodeItem> items;
  for (const auto& [cls, ids] : data.pool.by_class) {
    require(!ids.empty(), "train_baseline: class " + to_string(cls) + " has no training patches");
    model.class_order.push_back(cls);
    for (const auto& id : ids) items.push_back({id, model.class_order.size() - 1});
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.patch_id < b.patch_id; });

  nn::AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  nn::Adam<T> optimizer(adam);
  auto params = nn::trainable_parameters(model.encoder.network());
  for (auto* p : nn::trainable_parameters(model.head)) params.push_back(p);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix_seeds(config.seed, fnv1a("epoch"), epoch));
    std::vector<EpisodeItem> order = items;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::string> ids;
      std::vector<std::size_t> labels;
      for (std::size_t i = start; i < end; ++i) {
        ids.push_back(order[i].patch_id);
        labels.push_back(order[i].label);
      }
      model.encoder.network().zero_grad();
      model.head.zero_grad();
      const Tensor<T> emb = model.encoder.forward(source.batch<T>(ids));
      const Tensor<T> logits = model.head.forward(emb);
      const auto lg = episode_loss_with_grad(to_matrix(logits), labels);
      if (!std::isfinite(lg.loss)) {
        throw NumericError("train_baseline: non-finite loss at step " + std::to_string(model.steps));
      }
      Tensor<T> d_logits(logits.shape(), std::vector<T>(lg.d_logits.data(), lg.d_logits.data() + lg.d_logits.size()));
      model.encoder.backward(model.head.backward(d_logits));
      optimizer.step(params);
      model.loss_history.push_back(lg.loss);
      ++model.steps;
    }
  }
  return model;
}

template <typename T = float>
Classifier<T> train_baseline(const ClassifierConfig& config, const BudgetedDataset& data, const PatchSource& source) {
  return train_baseline<T>(config, data, source, Encoder<T>::create(config.backbone, config.seed));
}

struct BaselineReport {
  MetricsReport metrics;  // single pass: n = 1, no std
  ConfusionMatrix confusion;
  std::vector<std::string> evaluated_ids;  // one entry per test patch, in evaluation order
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> truth;
};

// Macro metrics of one pass over labelled predictions.
inline BaselineReport baseline_metrics(std::vector<std::size_t> predictions, std::vector<std::size_t> truth,
                                       std::size_t n_classes) {
  const EpisodeMetrics m = episode_metrics(predictions, truth, n_classes);
  BaselineReport r;
  r.metrics = {aggregate({m.accuracy}, false), aggregate({m.precision_macro}, false),
               aggregate({m.recall_macro}, false), aggregate({m.f1_macro}, false)};
  r.confusion = m.confusion;
  r.predictions = std::move(predictions);
  r.truth = std::move(truth);
  return r;
}

// Evaluation-mode pass over every id in `test_ids`, batched; argmax ties go
// to the lower class index.
template <typename T>
BaselineReport evaluate_baseline(const Classifier<T>& model, const std::vector<std::string>& test_ids,
                                 const PatchSource& source, std::size_t batch_size = 32) {
  require(!test_ids.empty(), "evaluate_baseline: test split is empty");
  require(batch_size >= 1, "evaluate_baseline: batch size must be at least 1");
  std::vector<std::size_t> pred, truth;
  for (std::size_t start = 0; start < test_ids.size(); start += batch_size) {
    const std::size_t end = std::min(test_ids.size(), start + batch_size);
    const Tensor<T> logits = model.logits(source.batch<T>(std::span<const std::string>(test_ids.data() + start, end - start)));
    const std::size_t K = logits.dim(1);
    for (std::size_t n = 0; n < end - start; ++n) {
      std::size_t arg = 0;
      for (std::size_t k = 1; k < K; ++k) {
        if (logits[n * K + k] > logits[n * K + arg]) arg = k;
      }
      pred.push_back(arg);
      truth.push_back(model.label_of(source.record(test_ids[start + n]).class_key));
    }
  }
  BaselineReport r = baseline_metrics(std::move(pred), std::move(truth), model.config.n_classes);
  r.evaluated_ids = test_ids;
  return r;
}

template <typename T>
BaselineReport evaluate_baseline(const Classifier<T>& model, const DatasetManifest& manifest, const PatchSource& source) {
  return evaluate_baseline(model, manifest.ids_in(Split::test), source);
}

template <typename T>
void save_classifier(const std::filesystem::path& stem, const Classifier<T>& model, std::string config_hash) {
  CheckpointInfo info;
  info.config_hash = std::move(config_hash);
  info.step = model.steps;
  info.head_classes = model.config.n_classes;
  info.class_order = model.class_order;
  save_checkpoint(stem, model.encoder, info, &model.head);
}

template <typename T = float>
Classifier<T> load_classifier(const std::filesystem::path& stem) {
  const CheckpointInfo info = read_checkpoint_info(stem);
  require(info.head_classes >= 2, "checkpoint " + stem.string() + " has no classifier head");
  require(info.class_order.size() == info.head_classes, "checkpoint class order does not match its head");
  ClassifierConfig cfg;
  cfg.backbone = info.identity;
  cfg.n_classes = info.head_classes;
  Classifier<T> model{cfg, load_encoder<T>(stem), nn::Linear<T>(info.embedding_dim, info.head_classes),
                      info.class_order, info.step, {}};
  load_from_archive(read_archive(blob_path(stem)), model.head, "head.");
  return model;
}

}  // namespace protofsl
