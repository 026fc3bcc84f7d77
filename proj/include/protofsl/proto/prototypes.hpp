#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/tensor.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct EmbeddingBatch {
  Matrix<T> vectors;  // B x D
  std::vector<std::size_t> labels;

  void validate() const {
    require(vectors.rows() > 0, "embedding batch is empty");
    require(labels.empty() || labels.size() == static_cast<std::size_t>(vectors.rows()),
            "embedding batch: label count does not match rows");
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        if (!std::isfinite(static_cast<double>(vectors(i, j)))) {
          throw NumericError("embedding batch: non-finite value in row " + std::to_string(i));
        }
      }
    }
  }
};

template <typename T>
Matrix<T> to_matrix(const Tensor<T>& t) {
  require(t.rank() == 2, "expected a {N, D} tensor");
  return Eigen::Map<const Matrix<T>>(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

template <typename T>
struct PrototypeSet {
  Matrix<T> prototypes;  // n_way x D, row k is the centroid of class k
  std::vector<StoneClass> class_order;
};

// c_k = mean of the support rows labelled k.
template <typename T>
PrototypeSet<T> compute_prototypes(const EmbeddingBatch<T>& support, std::size_t n_way) {
  support.validate();
  require(support.labels.size() == static_cast<std::size_t>(support.vectors.rows()), "compute_prototypes: missing labels");
  const Eigen::Index D = support.vectors.cols();
  std::vector<double> counts(n_way, 0.0);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sums =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_way), D);
  for (Eigen::Index i = 0; i < support.vectors.rows(); ++i) {
    const std::size_t k = support.labels[static_cast<std::size_t>(i)];
    require(k < n_way, "compute_prototypes: label out of range");
    sums.row(static_cast<Eigen::Index>(k)) += support.vectors.row(i).template cast<double>();
    counts[k] += 1.0;
  }
  for (std::size_t k = 0; k < n_way; ++k) {
    if (counts[k] == 0.0) throw ValidationError("compute_prototypes: class " + std::to_string(k) + " has no support");
    sums.row(static_cast<Eigen::Index>(k)) /= counts[k];
  }
  return {sums.template cast<T>(), {}};
}

template <typename T>
struct Classification {
  Matrix<T> logits;         // B x n_way, -squared distance
  Matrix<T> probabilities;  // row-wise softmax of logits
  std::vector<std::size_t> predictions;
};

template <typename T>
Classification<T> classify_queries(const EmbeddingBatch<T>& queries, const PrototypeSet<T>& protos) {
  queries.validate();
  if (queries.vectors.cols() != protos.prototypes.cols()) {
    throw ValidationError("classify_queries: query dimension " + std::to_string(queries.vectors.cols()) +
                          " does not match prototype dimension " + std::to_string(protos.prototypes.cols()));
  }
  const Eigen::Index B = queries.vectors.rows(), K = protos.prototypes.rows(), D = protos.prototypes.cols();
  Classification<T> out;
  out.logits.resize(B, K);
  out.probabilities.resize(B, K);
  out.predictions.resize(static_cast<std::size_t>(B));
  for (Eigen::Index b = 0; b < B; ++b) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    std::vector<double> row(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
      double d2 = 0.0;
      for (Eigen::Index j = 0; j < D; ++j) {
        const double diff = static_cast<double>(queries.vectors(b, j)) - static_cast<double>(protos.prototypes(k, j));
        d2 += diff * diff;
      }
      row[static_cast<std::size_t>(k)] = -d2;
      out.logits(b, k) = static_cast<T>(-d2);
      if (-d2 > best) {  // strict: ties keep the lower class index
        best = -d2;
        arg = static_cast<std::size_t>(k);
      }
    }
    double z = 0.0;
    for (double v : row) z += std::exp(v - best);
    for (Eigen::Index k = 0; k < K; ++k) out.probabilities(b, k) = static_cast<T>(std::exp(row[static_cast<std::size_t>(k)] - best) / z);
    out.predictions[static_cast<std::size_t>(b)] = arg;
  }
  return out;
}

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  Matrix<T> d_logits;
};

// Mean over rows of -log softmax(logits)[label], with d loss / d logits.
template <typename T>
LossAndGrad<T> episode_loss_with_grad(const Matrix<T>& logits, const std::vector<std::size_t>& labels) {
  require(logits.rows() > 0, "episode_loss: empty logits");
  require(labels.size() == static_cast<std::size_t>(logits.rows()), "episode_loss: label count does not match rows");
  const Eigen::Index B = logits.rows(), K = logits.cols();
  LossAndGrad<T> out;
  out.d_logits.resize(B, K);
  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const std::size_t y = labels[static_cast<std::size_t>(b)];
    require(y < static_cast<std::size_t>(K), "episode_loss: label out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
      const double v = logits(b, k);
      if (!std::isfinite(v)) throw NumericError("episode_loss: non-finite logit in row " + std::to_string(b));
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) z += std::exp(static_cast<double>(logits(b, k)) - mx);
    const double lse = mx + std::log(z);
    total += lse - static_cast<double>(logits(b, static_cast<Eigen::Index>(y)));
    for (Eigen::Index k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(logits(b, k)) - lse);
      out.d_logits(b, k) = static_cast<T>((p - (static_cast<std::size_t>(k) == y ? 1.0 : 0.0)) / static_cast<double>(B));
    }
  }
  out.loss = total / static_cast<double>(B);
  return out;
}

template <typename T>
double episode_loss(const Matrix<T>& logits, const std::vector<std::size_t>& labels) {
  return episode_loss_with_grad(logits, labels).loss;
}

template <typename T>
struct EmbeddingGrads {
  Matrix<T> d_support;
  Matrix<T> d_query;
};

// Backpropagates d loss / d logits through logits = -||q_b - c_k||^2 and
// c_k = mean(support rows of class k).
template <typename T>
EmbeddingGrads<T> prototype_backward(const EmbeddingBatch<T>& support, const EmbeddingBatch<T>& queries,
                                     const PrototypeSet<T>& protos, const Matrix<T>& d_logits) {
  const Eigen::Index B = queries.vectors.rows(), K = protos.prototypes.rows(), D = protos.prototypes.cols();
  Eigen::MatrixXd d_proto = Eigen::MatrixXd::Zero(K, D);
  Eigen::MatrixXd d_query = Eigen::MatrixXd::Zero(B, D);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const double g = d_logits(b, k);
      if (g == 0.0) continue;
      for (Eigen::Index j = 0; j < D; ++j) {
        const double diff = static_cast<double>(queries.vectors(b, j)) - static_cast<double>(protos.prototypes(k, j));
        d_query(b, j) -= 2.0 * g * diff;
        d_proto(k, j) += 2.0 * g * diff;
      }
    }
  }
  std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
  for (auto l : support.labels) counts[l] += 1.0;
  EmbeddingGrads<T> out;
  out.d_query = d_query.template cast<T>();
  out.d_support.resize(support.vectors.rows(), D);
  for (Eigen::Index i = 0; i < support.vectors.rows(); ++i) {
    const auto k = support.labels[static_cast<std::size_t>(i)];
    out.d_support.row(i) = (d_proto.row(static_cast<Eigen::Index>(k)) / counts[k]).template cast<T>();
  }
  return out;
}

}  // namespace protofsl
