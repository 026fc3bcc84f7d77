#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/nn/module.hpp"

namespace protofsl::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
std::vector<Parameter<T>*> trainable_parameters(Module<T>& m) {
  std::vector<Parameter<T>*> out;
  m.visit("", ParamVisitor<T>([&](const std::string&, Parameter<T>& p) {
            if (p.trainable) out.push_back(&p);
          }));
  return out;
}

// Adam with bias correction; update p -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {
    require(config.learning_rate > 0.0, "adam: learning rate must be positive");
  }

  void step(const std::vector<Parameter<T>*>& params) {
    if (first_.empty()) {
      for (const auto* p : params) {
        first_.emplace_back(p->value.size(), 0.0);
        second_.emplace_back(p->value.size(), 0.0);
      }
    }
    if (first_.size() != params.size()) throw ValidationError("adam: parameter list changed between steps");
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& value = params[i]->value;
      const auto& grad = params[i]->grad;
      auto& m = first_[i];
      auto& v = second_[i];
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j];
        m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
        v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
        const double update = config_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
        value[j] = static_cast<T>(value[j] - update);
      }
    }
  }

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace protofsl::nn
