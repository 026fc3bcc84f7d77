#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "protofsl/core/rng.hpp"
#include "protofsl/nn/layers.hpp"
#include "protofsl/nn/module.hpp"

namespace protofsl::nn {

// Residual unit: relu(main(x) + shortcut(x)). Parameter names follow the
// torchvision layout ("conv1.weight", "downsample.0.weight", ...).
template <typename T>
class Residual final : public Module<T> {
 public:
  Residual(std::unique_ptr<Sequential<T>> main, std::unique_ptr<Sequential<T>> shortcut)
      : main_(std::move(main)), shortcut_(std::move(shortcut)) {}
  Residual(const Residual& other)
      : main_(std::make_unique<Sequential<T>>(*other.main_)),
        shortcut_(other.shortcut_ ? std::make_unique<Sequential<T>>(*other.shortcut_) : nullptr) {}

  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> h = main_->forward(x);
    h += shortcut_ ? shortcut_->forward(x) : x;
    return relu_.forward(h);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const Tensor<T> g = relu_.backward(grad_out);
    Tensor<T> gx = main_->backward(g);
    gx += shortcut_ ? shortcut_->backward(g) : g;
    return gx;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> h = main_->infer(x);
    h += shortcut_ ? shortcut_->infer(x) : x;
    return relu_.infer(h);
  }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override {
    main_->visit(prefix, fn);
    if (shortcut_) shortcut_->visit(prefix + "downsample.", fn);
  }
  void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const override {
    const Sequential<T>& m = *main_;
    m.visit(prefix, fn);
    if (shortcut_) {
      const Sequential<T>& s = *shortcut_;
      s.visit(prefix + "downsample.", fn);
    }
  }
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<Residual>(*this); }

 private:
  std::unique_ptr<Sequential<T>> main_;
  std::unique_ptr<Sequential<T>> shortcut_;
  ReLU<T> relu_;
};

struct ResNetLayout {
  bool bottleneck = false;
  std::array<std::size_t, 4> blocks{2, 2, 2, 2};
  std::size_t base_width = 64;

  static constexpr std::size_t kExpansion = 4;

  std::size_t embedding_dim() const { return base_width * 8 * (bottleneck ? kExpansion : 1); }

  static ResNetLayout resnet18() { return {false, {2, 2, 2, 2}, 64}; }
  static ResNetLayout resnet34() { return {false, {3, 4, 6, 3}, 64}; }
  static ResNetLayout resnet50() { return {true, {3, 4, 6, 3}, 64}; }
};

namespace detail {

template <typename T>
std::unique_ptr<Conv2d<T>> conv(std::size_t in, std::size_t out, std::size_t k, std::size_t stride,
                                std::size_t pad, Rng& rng) {
  auto c = std::make_unique<Conv2d<T>>(in, out, k, stride, pad, false);
  c->init(rng);
  return c;
}

template <typename T>
std::unique_ptr<Sequential<T>> make_shortcut(std::size_t in, std::size_t out, std::size_t stride, Rng& rng) {
  if (stride == 1 && in == out) return nullptr;
  auto s = std::make_unique<Sequential<T>>();
  s->add("0", conv<T>(in, out, 1, stride, 0, rng));
  s->add("1", std::make_unique<BatchNorm2d<T>>(out));
  return s;
}

template <typename T>
std::unique_ptr<Module<T>> basic_block(std::size_t in, std::size_t planes, std::size_t stride, Rng& rng) {
  auto m = std::make_unique<Sequential<T>>();
  m->add("conv1", conv<T>(in, planes, 3, stride, 1, rng));
  m->add("bn1", std::make_unique<BatchNorm2d<T>>(planes));
  m->add("relu", std::make_unique<ReLU<T>>());
  m->add("conv2", conv<T>(planes, planes, 3, 1, 1, rng));
  m->add("bn2", std::make_unique<BatchNorm2d<T>>(planes));
  return std::make_unique<Residual<T>>(std::move(m), make_shortcut<T>(in, planes, stride, rng));
}

// torchvision v1.5 bottleneck: the stride sits on the 3x3 convolution.
template <typename T>
std::unique_ptr<Module<T>> bottleneck_block(std::size_t in, std::size_t planes, std::size_t stride, Rng& rng) {
  const std::size_t out = planes * ResNetLayout::kExpansion;
  auto m = std::make_unique<Sequential<T>>();
  m->add("conv1", conv<T>(in, planes, 1, 1, 0, rng));
  m->add("bn1", std::make_unique<BatchNorm2d<T>>(planes));
  m->add("relu1", std::make_unique<ReLU<T>>());
  m->add("conv2", conv<T>(planes, planes, 3, stride, 1, rng));
  m->add("bn2", std::make_unique<BatchNorm2d<T>>(planes));
  m->add("relu2", std::make_unique<ReLU<T>>());
  m->add("conv3", conv<T>(planes, out, 1, 1, 0, rng));
  m->add("bn3", std::make_unique<BatchNorm2d<T>>(out));
  return std::make_unique<Residual<T>>(std::move(m), make_shortcut<T>(in, out, stride, rng));
}

}  // namespace detail

// Residual network with the classification head replaced by a flatten:
// output is {N, layout.embedding_dim()}.
template <typename T>
std::unique_ptr<Sequential<T>> make_resnet(const ResNetLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t w = layout.base_width;
  auto net = std::make_unique<Sequential<T>>();
  auto stem = detail::conv<T>(3, w, 7, 2, 3, rng);
  stem->set_input_grad(false);
  net->add("conv1", std::move(stem));
  net->add("bn1", std::make_unique<BatchNorm2d<T>>(w));
  net->add("relu", std::make_unique<ReLU<T>>());
  net->add("maxpool", std::make_unique<MaxPool2d<T>>(3, 2, 1));
  std::size_t in = w;
  for (std::size_t stage = 0; stage < 4; ++stage) {
    const std::size_t planes = w << stage;
    const std::size_t stride = stage == 0 ? 1 : 2;
    auto layer = std::make_unique<Sequential<T>>();
    for (std::size_t b = 0; b < layout.blocks[stage]; ++b) {
      const std::size_t s = b == 0 ? stride : 1;
      if (layout.bottleneck) {
        layer->add(detail::bottleneck_block<T>(in, planes, s, rng));
        in = planes * ResNetLayout::kExpansion;
      } else {
        layer->add(detail::basic_block<T>(in, planes, s, rng));
        in = planes;
      }
    }
    net->add("layer" + std::to_string(stage + 1), std::move(layer));
  }
  net->add("avgpool", std::make_unique<GlobalAvgPool<T>>());
  return net;
}

// Three strided conv-bn-tanh blocks and a global pool; 3,920 trainable
// parameters, embedding width 16. Used for gradient checks and fast runs.
// Smooth everywhere (no ReLU or max-pool kinks), so finite differences at
// float32 step sizes are well posed.
template <typename T>
std::unique_ptr<Sequential<T>> make_tiny_cnn(std::uint64_t seed) {
  Rng rng(seed);
  auto net = std::make_unique<Sequential<T>>();
  auto block = [&](std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
    auto b = std::make_unique<Sequential<T>>();
    auto c = detail::conv<T>(in, out, k, stride, pad, rng);
    c->set_input_grad(in != 3);
    b->add("conv", std::move(c));
    b->add("bn", std::make_unique<BatchNorm2d<T>>(out));
    b->add("act", std::make_unique<Tanh<T>>());
    return b;
  };
  net->add("block1", block(3, 8, 4, 4, 0));
  net->add("block2", block(8, 16, 3, 2, 1));
  net->add("block3", block(16, 16, 3, 2, 1));
  net->add("pool", std::make_unique<GlobalAvgPool<T>>());
  return net;
}

inline constexpr std::size_t kTinyEmbeddingDim = 16;

}  // namespace protofsl::nn
