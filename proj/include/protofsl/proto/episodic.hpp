#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/data/patch_source.hpp"
#include "protofsl/episodic/episodes.hpp"
#include "protofsl/metrics/metrics.hpp"
#include "protofsl/nn/adam.hpp"
#include "protofsl/nn/encoder.hpp"
#include "protofsl/proto/prototypes.hpp"

namespace protofsl {

// Evaluation-mode embedding of a standardized NCHW batch.
template <typename T>
EmbeddingBatch<T> embed(const Encoder<T>& encoder, const Tensor<T>& patches, std::vector<std::size_t> labels = {}) {
  require(patches.rank() == 4 && patches.dim(0) > 0, "embed: expected a nonempty NCHW batch");
  EmbeddingBatch<T> out{to_matrix(encoder.infer(patches)), std::move(labels)};
  out.validate();
  return out;
}

// Support rows first, then query rows, as one NCHW batch.
template <typename T>
Tensor<T> episode_images(const PatchSource& source, const Episode& ep) {
  std::vector<std::string> ids = ep.support_ids();
  const auto q = ep.query_ids();
  ids.insert(ids.end(), q.begin(), q.end());
  return source.batch<T>(ids);
}

template <typename T>
struct EpisodeForward {
  EmbeddingBatch<T> support;
  EmbeddingBatch<T> query;
  PrototypeSet<T> prototypes;
  Classification<T> result;
};

template <typename T>
EpisodeForward<T> split_and_classify(const Tensor<T>& embeddings, const Episode& ep) {
  const Matrix<T> all = to_matrix(embeddings);
  const auto ns = static_cast<Eigen::Index>(ep.support.size());
  const auto nq = static_cast<Eigen::Index>(ep.query.size());
  EpisodeForward<T> f;
  f.support = {all.topRows(ns), ep.support_labels()};
  f.query = {all.middleRows(ns, nq), ep.query_labels()};
  f.prototypes = compute_prototypes(f.support, ep.classes.size());
  f.prototypes.class_order = ep.classes;
  f.result = classify_queries(f.query, f.prototypes);
  return f;
}

// Training-mode loss of one episode; parameter gradients are reset and then
// filled with d loss / d theta.
template <typename T>
double episode_gradients(Encoder<T>& encoder, const Tensor<T>& images, const Episode& ep) {
  encoder.network().zero_grad();
  const Tensor<T> emb = encoder.forward(images);
  const auto f = split_and_classify(emb, ep);
  const auto lg = episode_loss_with_grad(f.result.logits, f.query.labels);
  const auto grads = prototype_backward(f.support, f.query, f.prototypes, lg.d_logits);
  Tensor<T> d_emb(emb.shape());
  Eigen::Map<Matrix<T>> dm(d_emb.data(), static_cast<Eigen::Index>(emb.dim(0)), static_cast<Eigen::Index>(emb.dim(1)));
  dm.topRows(grads.d_support.rows()) = grads.d_support;
  dm.bottomRows(grads.d_query.rows()) = grads.d_query;
  encoder.backward(d_emb);
  return lg.loss;
}

// Training-mode loss without gradients (finite-difference probes).
template <typename T>
double episode_loss_train_mode(Encoder<T>& encoder, const Tensor<T>& images, const Episode& ep) {
  const auto f = split_and_classify(encoder.forward(images), ep);
  return episode_loss(f.result.logits, f.query.labels);
}

template <typename T = float>
struct TrainState {
  Encoder<T> encoder;
  nn::Adam<T> optimizer;
  std::size_t step = 0;
  std::size_t max_steps = 0;
  double learning_rate = 1e-4;
  std::vector<double> loss_history;

  static TrainState start(Encoder<T> encoder, double learning_rate, std::size_t max_steps) {
    require(learning_rate > 0.0, "train state: learning rate must be positive");
    nn::AdamConfig cfg;
    cfg.learning_rate = learning_rate;
    return TrainState{std::move(encoder), nn::Adam<T>(cfg), 0, max_steps, learning_rate, {}};
  }
};

// One Adam step per episode on the full (support + query) batch.
// `episodes` is anything indexable yielding Episode (vector, EpisodeStream).
template <typename T, typename Episodes>
TrainState<T> train_episodic(TrainState<T> state, const Episodes& episodes, const PatchSource& source,
                             std::size_t iterations) {
  require(iterations >= 1, "train_episodic: iterations must be at least 1");
  require(episodes.size() >= iterations, "train_episodic: fewer episodes than iterations");
  require(state.step + iterations <= state.max_steps, "train_episodic: would exceed the configured iteration count");
  auto params = nn::trainable_parameters(state.encoder.network());
  require(!params.empty(), "train_episodic: encoder has no trainable parameters");
  for (std::size_t i = 0; i < iterations; ++i) {
    const Episode ep = episodes[i];
    const Tensor<T> images = episode_images<T>(source, ep);
    const double loss = episode_gradients(state.encoder, images, ep);
    if (!std::isfinite(loss)) throw NumericError("train_episodic: non-finite loss at step " + std::to_string(state.step));
    state.optimizer.step(params);
    state.loss_history.push_back(loss);
    ++state.step;
  }
  return state;
}

// Evaluation-mode metrics per episode; the encoder is not modified.
template <typename T, typename Episodes>
std::vector<EpisodeMetrics> evaluate(const Encoder<T>& encoder, const Episodes& episodes, const PatchSource& source) {
  require(episodes.size() >= 1, "evaluate: no episodes");
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Episode ep = episodes[i];
    const auto f = split_and_classify(encoder.infer(episode_images<T>(source, ep)), ep);
    out.push_back(episode_metrics(f.result.predictions, f.query.labels, ep.classes.size(), ep.index));
  }
  return out;
}

}  // namespace protofsl
