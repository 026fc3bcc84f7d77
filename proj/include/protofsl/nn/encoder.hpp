#pragma once

#include <utility>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>

#include "protofsl/core/error.hpp"
#include "protofsl/core/hash.hpp"
#include "protofsl/nn/module.hpp"
#include "protofsl/nn/resnet.hpp"

namespace protofsl {

enum class Backbone { resnet18, resnet34, resnet50, tiny_test_cnn };

inline std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::resnet18: return "resnet18";
    case Backbone::resnet34: return "resnet34";
    case Backbone::resnet50: return "resnet50";
    case Backbone::tiny_test_cnn: return "tiny_test_cnn";
  }
  return "?";
}

inline Backbone parse_backbone(const std::string& s) {
  if (s == "resnet18") return Backbone::resnet18;
  if (s == "resnet34") return Backbone::resnet34;
  if (s == "resnet50") return Backbone::resnet50;
  if (s == "tiny_test_cnn" || s == "tiny") return Backbone::tiny_test_cnn;
  throw ValidationError("unknown backbone '" + s + "'");
}

inline std::size_t embedding_dim_of(Backbone b) {
  switch (b) {
    case Backbone::resnet18: return nn::ResNetLayout::resnet18().embedding_dim();
    case Backbone::resnet34: return nn::ResNetLayout::resnet34().embedding_dim();
    case Backbone::resnet50: return nn::ResNetLayout::resnet50().embedding_dim();
    case Backbone::tiny_test_cnn: return nn::kTinyEmbeddingDim;
  }
  return 0;
}

// Backbone with its classifier removed: standardized NCHW patches in,
// {N, D} embeddings out. Copies are deep.
template <typename T = float>
class Encoder {
 public:
  static Encoder create(Backbone identity, std::uint64_t seed) {
    switch (identity) {
      case Backbone::resnet18: return Encoder(identity, nn::make_resnet<T>(nn::ResNetLayout::resnet18(), seed));
      case Backbone::resnet34: return Encoder(identity, nn::make_resnet<T>(nn::ResNetLayout::resnet34(), seed));
      case Backbone::resnet50: return Encoder(identity, nn::make_resnet<T>(nn::ResNetLayout::resnet50(), seed));
      case Backbone::tiny_test_cnn: return Encoder(identity, nn::make_tiny_cnn<T>(seed));
    }
    throw ValidationError("unknown backbone");
  }

  Encoder(Backbone identity, std::unique_ptr<nn::Module<T>> net, std::size_t dim = 0)
      : identity_(identity), dim_(dim ? dim : embedding_dim_of(identity)), net_(std::move(net)) {}
  Encoder(const Encoder& other)
      : identity_(other.identity_), dim_(other.dim_), pretrained_(other.pretrained_), net_(other.net_->clone()) {}
  Encoder& operator=(const Encoder& other) {
    if (this != &other) *this = Encoder(other);
    return *this;
  }
  Encoder(Encoder&&) noexcept = default;
  Encoder& operator=(Encoder&&) noexcept = default;

  Backbone identity() const { return identity_; }
  std::size_t embedding_dim() const { return dim_; }
  bool pretrained() const { return pretrained_; }
  void set_pretrained(bool v) { pretrained_ = v; }

  nn::Module<T>& network() { return *net_; }
  const nn::Module<T>& network() const { return *net_; }

  // Training mode: batch statistics, activations cached for backward().
  Tensor<T> forward(const Tensor<T>& x) { return check(net_->forward(x)); }
  Tensor<T> backward(const Tensor<T>& grad) { return net_->backward(grad); }
  // Evaluation mode: running statistics, no state change.
  Tensor<T> infer(const Tensor<T>& x) const { return check(net_->infer(x)); }

  // Hash over every parameter and buffer, bit-exact.
  std::uint64_t parameter_hash() const {
    std::uint64_t h = fnv1a(to_string(identity_));
    std::as_const(*net_).visit("", nn::ConstParamVisitor<T>([&](const std::string& name, const nn::Parameter<T>& p) {
                  h = fnv1a(name, h);
                  h = fnv1a(std::string_view(reinterpret_cast<const char*>(p.value.data()), p.value.size() * sizeof(T)),
                            h);
                }));
    return h;
  }

 private:
  Tensor<T> check(Tensor<T> out) const {
    if (out.rank() != 2 || out.dim(1) != dim_) {
      throw RuntimeFailure("encoder produced shape " + shape_string(out) + ", expected {N," + std::to_string(dim_) + "}");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!std::isfinite(static_cast<double>(out[i]))) {
        throw NumericError("non-finite embedding at batch index " + std::to_string(i / dim_));
      }
    }
    return out;
  }

  Backbone identity_;
  std::size_t dim_;
  bool pretrained_ = false;
  std::unique_ptr<nn::Module<T>> net_;
};

}  // namespace protofsl
