#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"

namespace protofsl {

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

// Entry (i, j) counts samples with truth i predicted as j.
inline ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& predictions,
                                        const std::vector<std::size_t>& truth, std::size_t n_classes) {
  require(predictions.size() == truth.size(), "confusion_matrix: predictions and truth differ in length");
  ConfusionMatrix m(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] < n_classes && predictions[i] < n_classes, "confusion_matrix: label out of range");
    ++m[truth[i]][predictions[i]];
  }
  return m;
}

struct EpisodeMetrics {
  std::size_t episode_index = 0;
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  ConfusionMatrix confusion;
};

// Macro-averaged metrics over n_way classes. A class that is never
// predicted contributes precision 0; F1 is 0 when precision + recall is 0.
inline EpisodeMetrics episode_metrics(const std::vector<std::size_t>& predictions,
                                      const std::vector<std::size_t>& truth, std::size_t n_way,
                                      std::size_t episode_index = 0) {
  require(!truth.empty(), "episode_metrics: empty input");
  EpisodeMetrics m;
  m.episode_index = episode_index;
  m.confusion = confusion_matrix(predictions, truth, n_way);
  std::size_t correct = 0;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (std::size_t k = 0; k < n_way; ++k) {
    const std::size_t tp = m.confusion[k][k];
    correct += tp;
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < n_way; ++j) {
      row += m.confusion[k][j];
      col += m.confusion[j][k];
    }
    const double precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    const double recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    p_sum += precision;
    r_sum += recall;
    f_sum += f1;
  }
  const double n = static_cast<double>(n_way);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.precision_macro = p_sum / n;
  m.recall_macro = r_sum / n;
  m.f1_macro = f_sum / n;
  return m;
}

// mean and sample standard deviation (divisor n - 1) of `inputs`.
struct MetricsSummary {
  double mean = 0.0;
  std::optional<double> std;
  std::size_t n = 0;
  std::vector<double> inputs;
};

// Inputs are summed in sorted order so the result does not depend on their
// arrangement.
inline MetricsSummary aggregate(std::vector<double> values, bool with_std = true) {
  require(!values.empty(), "aggregate: no values");
  if (with_std) require(values.size() >= 2, "aggregate: standard deviation needs at least two values");
  MetricsSummary s;
  s.inputs = values;
  s.n = values.size();
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (with_std) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / (n - 1.0));
  }
  return s;
}

struct MetricsReport {
  MetricsSummary accuracy, precision, recall, f1;
};

// Per-episode metrics averaged across episodes (not pooled across queries).
inline MetricsReport summarize(const std::vector<EpisodeMetrics>& episodes) {
  require(!episodes.empty(), "summarize: no episodes");
  std::vector<double> a, p, r, f;
  for (const auto& e : episodes) {
    a.push_back(e.accuracy);
    p.push_back(e.precision_macro);
    r.push_back(e.recall_macro);
    f.push_back(e.f1_macro);
  }
  const bool with_std = episodes.size() >= 2;
  return {aggregate(a, with_std), aggregate(p, with_std), aggregate(r, with_std), aggregate(f, with_std)};
}

}  // namespace protofsl
