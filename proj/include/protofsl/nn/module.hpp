#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "protofsl/core/tensor.hpp"

namespace protofsl::nn {

// A named slot of model state. Buffers (BatchNorm running statistics) are
// saved in checkpoints but never touched by the optimizer.
template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  static Parameter weight(std::vector<std::size_t> shape) {
    Parameter p;
    p.value = Tensor<T>(shape);
    p.grad = Tensor<T>(std::move(shape));
    return p;
  }
  static Parameter buffer(std::vector<std::size_t> shape, T fill) {
    Parameter p;
    p.value = Tensor<T>(std::move(shape), fill);
    p.trainable = false;
    return p;
  }
};

template <typename T>
using ParamVisitor = std::function<void(const std::string&, Parameter<T>&)>;
template <typename T>
using ConstParamVisitor = std::function<void(const std::string&, const Parameter<T>&)>;

// Layers cache what they need for backward() inside forward(); infer() is
// the evaluation-mode path and leaves the module untouched.
template <typename T>
class Module {
 public:
  virtual ~Module() = default;

  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;

  virtual void visit(const std::string& prefix, const ParamVisitor<T>& fn) = 0;
  virtual void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const = 0;

  virtual std::unique_ptr<Module> clone() const = 0;

  void zero_grad() {
    visit("", ParamVisitor<T>([](const std::string&, Parameter<T>& p) {
            if (p.trainable) p.grad.fill(T{0});
          }));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit("", ConstParamVisitor<T>([&](const std::string&, const Parameter<T>& p) {
            if (p.trainable) n += p.value.size();
          }));
    return n;
  }
};

// Ordered container with named children ("0", "1", ... or explicit names).
template <typename T>
class Sequential final : public Module<T> {
 public:
  Sequential() = default;
  Sequential(const Sequential& other) {
    for (const auto& [name, m] : other.children_) children_.emplace_back(name, m->clone());
  }
  Sequential& operator=(const Sequential&) = delete;

  Sequential& add(std::string name, std::unique_ptr<Module<T>> m) {
    children_.emplace_back(std::move(name), std::move(m));
    return *this;
  }
  Sequential& add(std::unique_ptr<Module<T>> m) { return add(std::to_string(children_.size()), std::move(m)); }

  std::size_t size() const { return children_.size(); }

  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> h = x;
    for (auto& [_, m] : children_) h = m->forward(h);
    return h;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> g = grad_out;
    for (auto it = children_.rbegin(); it != children_.rend(); ++it) g = it->second->backward(g);
    return g;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> h = x;
    for (const auto& [_, m] : children_) h = m->infer(h);
    return h;
  }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override {
    for (auto& [name, m] : children_) m->visit(prefix + name + ".", fn);
  }
  void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const override {
    for (const auto& [name, m] : children_) {
      const Module<T>& cm = *m;
      cm.visit(prefix + name + ".", fn);
    }
  }
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<Sequential>(*this); }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Module<T>>>> children_;
};

}  // namespace protofsl::nn
