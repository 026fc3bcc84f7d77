#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/core/tensor.hpp"
#include "protofsl/nn/module.hpp"

namespace protofsl::nn {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline void expect_rank4(const std::vector<std::size_t>& shape, std::size_t channels, const char* layer) {
  if (shape.size() != 4 || shape[1] != channels) {
    throw ValidationError(std::string(layer) + ": expected NCHW input with " + std::to_string(channels) +
                          " channels");
  }
}

// Caps the im2col buffer so that large backbones stream the batch in chunks.
constexpr std::size_t kMaxColumnElements = std::size_t{1} << 24;

}  // namespace detail

// 2-D convolution via im2col + GEMM, weights laid out {out, in, k, k}.
template <typename T>
class Conv2d final : public Module<T> {
 public:
  Conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride = 1, std::size_t pad = 0,
         bool bias = false)
      : in_(in), out_(out), k_(kernel), stride_(stride), pad_(pad), has_bias_(bias),
        weight_(Parameter<T>::weight({out, in, kernel, kernel})),
        bias_(Parameter<T>::weight({bias ? out : 0})) {}

  // He-normal, fan-out mode (matches the torchvision ResNet initialization).
  void init(Rng& rng) {
    const double sigma = std::sqrt(2.0 / static_cast<double>(out_ * k_ * k_));
    for (auto& w : weight_.value.values()) w = static_cast<T>(rng.normal() * sigma);
    bias_.value.fill(T{0});
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    return compute(x);
  }

  Tensor<T> infer(const Tensor<T>& x) const override { return compute(x); }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const auto& s = input_.shape();
    const std::size_t n_img = s[0], H = s[2], W = s[3];
    const std::size_t Ho = out_dim(H), Wo = out_dim(W), P = Ho * Wo;
    const std::size_t rows = in_ * k_ * k_;
    Tensor<T> grad_in(input_grad_ ? s : std::vector<std::size_t>{0});
    Eigen::Map<const MatR<T>> Wm(weight_.value.data(), out_, rows);
    Eigen::Map<MatR<T>> dW(weight_.grad.data(), out_, rows);
    const std::size_t chunk = chunk_size(n_img, rows, P);
    for (std::size_t n0 = 0; n0 < n_img; n0 += chunk) {
      const std::size_t nb = std::min(chunk, n_img - n0);
      MatR<T> col(rows, nb * P);
      im2col(input_.data() + n0 * in_ * H * W, nb, H, W, Ho, Wo, col.data());
      MatR<T> dy(out_, nb * P);
      for (std::size_t n = 0; n < nb; ++n) {
        for (std::size_t co = 0; co < out_; ++co) {
          const T* src = grad_out.data() + ((n0 + n) * out_ + co) * P;
          std::copy(src, src + P, dy.data() + co * nb * P + n * P);
        }
      }
      dW.noalias() += dy * col.transpose();
      if (has_bias_) {
        for (std::size_t co = 0; co < out_; ++co) bias_.grad[co] += dy.row(co).sum();
      }
      if (!input_grad_) continue;
      MatR<T> dcol = Wm.transpose() * dy;
      col2im(dcol.data(), nb, H, W, Ho, Wo, grad_in.data() + n0 * in_ * H * W);
    }
    return grad_in;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override {
    fn(prefix + "weight", weight_);
    if (has_bias_) fn(prefix + "bias", bias_);
  }
  void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const override {
    fn(prefix + "weight", weight_);
    if (has_bias_) fn(prefix + "bias", bias_);
  }
  std::unique_ptr<Module<T>> clone() const override {
    auto c = std::make_unique<Conv2d>(*this);
    c->input_ = Tensor<T>();
    return c;
  }

  std::size_t out_dim(std::size_t n) const {
    if (n + 2 * pad_ < k_) throw ValidationError("conv2d: input side " + std::to_string(n) + " is smaller than the kernel");
    return (n + 2 * pad_ - k_) / stride_ + 1;
  }

  // The stem convolution sees raw images; its input gradient is never used.
  void set_input_grad(bool on) { input_grad_ = on; }

 private:
  Tensor<T> compute(const Tensor<T>& x) const {
    detail::expect_rank4(x.shape(), in_, "conv2d");
    const std::size_t n_img = x.dim(0), H = x.dim(2), W = x.dim(3);
    if (H + 2 * pad_ < k_ || W + 2 * pad_ < k_) throw ValidationError("conv2d: input smaller than kernel");
    const std::size_t Ho = out_dim(H), Wo = out_dim(W), P = Ho * Wo;
    const std::size_t rows = in_ * k_ * k_;
    Tensor<T> y({n_img, out_, Ho, Wo});
    Eigen::Map<const MatR<T>> Wm(weight_.value.data(), out_, rows);
    const std::size_t chunk = chunk_size(n_img, rows, P);
    for (std::size_t n0 = 0; n0 < n_img; n0 += chunk) {
      const std::size_t nb = std::min(chunk, n_img - n0);
      MatR<T> col(rows, nb * P);
      im2col(x.data() + n0 * in_ * H * W, nb, H, W, Ho, Wo, col.data());
      MatR<T> out = Wm * col;
      for (std::size_t n = 0; n < nb; ++n) {
        for (std::size_t co = 0; co < out_; ++co) {
          const T* src = out.data() + co * nb * P + n * P;
          T* dst = y.data() + ((n0 + n) * out_ + co) * P;
          const T b = has_bias_ ? bias_.value[co] : T{0};
          for (std::size_t p = 0; p < P; ++p) dst[p] = src[p] + b;
        }
      }
    }
    return y;
  }

  static std::size_t chunk_size(std::size_t n_img, std::size_t rows, std::size_t P) {
    const std::size_t per_image = std::max<std::size_t>(1, rows * P);
    return std::clamp<std::size_t>(detail::kMaxColumnElements / per_image, 1, std::max<std::size_t>(1, n_img));
  }

  // Output columns [lo, hi) whose input column ox*stride + kx - pad is inside [0, W).
  void valid_range(std::size_t kx, std::size_t W, std::size_t Wo, std::size_t& lo, std::size_t& hi) const {
    lo = kx >= pad_ ? 0 : (pad_ - kx + stride_ - 1) / stride_;
    const std::size_t reach = W + pad_;  // ix < W  <=>  ox*stride + kx < W + pad
    hi = reach > kx ? std::min(Wo, (reach - kx - 1) / stride_ + 1) : 0;
    if (hi < lo) hi = lo;
  }

  // col is row-major {in*k*k, nb*Ho*Wo}; column index = n*P + oy*Wo + ox.
  void im2col(const T* x, std::size_t nb, std::size_t H, std::size_t W, std::size_t Ho, std::size_t Wo,
              T* col) const {
    const std::size_t P = Ho * Wo, cols = nb * P;
    for (std::size_t c = 0; c < in_; ++c) {
      for (std::size_t ky = 0; ky < k_; ++ky) {
        for (std::size_t kx = 0; kx < k_; ++kx) {
          std::size_t lo, hi;
          valid_range(kx, W, Wo, lo, hi);
          T* dst_row = col + ((c * k_ + ky) * k_ + kx) * cols;
          for (std::size_t n = 0; n < nb; ++n) {
            const T* src = x + (n * in_ + c) * H * W;
            T* dst = dst_row + n * P;
            for (std::size_t oy = 0; oy < Ho; ++oy) {
              const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
              T* d = dst + oy * Wo;
              if (iy < 0 || iy >= static_cast<long>(H)) {
                std::fill(d, d + Wo, T{0});
                continue;
              }
              // input index of output column ox is off + ox*stride, valid for ox in [lo, hi)
              const long off = iy * static_cast<long>(W) + static_cast<long>(kx) - static_cast<long>(pad_);
              std::fill(d, d + lo, T{0});
              if (stride_ == 1) {
                if (hi > lo) std::copy(src + off + static_cast<long>(lo), src + off + static_cast<long>(hi), d + lo);
              } else {
                for (std::size_t ox = lo; ox < hi; ++ox) d[ox] = src[off + static_cast<long>(ox * stride_)];
              }
              std::fill(d + hi, d + Wo, T{0});
            }
          }
        }
      }
    }
  }

  void col2im(const T* col, std::size_t nb, std::size_t H, std::size_t W, std::size_t Ho, std::size_t Wo,
              T* x) const {
    const std::size_t P = Ho * Wo, cols = nb * P;
    for (std::size_t c = 0; c < in_; ++c) {
      for (std::size_t ky = 0; ky < k_; ++ky) {
        for (std::size_t kx = 0; kx < k_; ++kx) {
          std::size_t lo, hi;
          valid_range(kx, W, Wo, lo, hi);
          const T* src_row = col + ((c * k_ + ky) * k_ + kx) * cols;
          for (std::size_t n = 0; n < nb; ++n) {
            T* dst = x + (n * in_ + c) * H * W;
            const T* src = src_row + n * P;
            for (std::size_t oy = 0; oy < Ho; ++oy) {
              const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad_);
              if (iy < 0 || iy >= static_cast<long>(H)) continue;
              const T* s = src + oy * Wo;
              const long off = iy * static_cast<long>(W) + static_cast<long>(kx) - static_cast<long>(pad_);
              for (std::size_t ox = lo; ox < hi; ++ox) dst[off + static_cast<long>(ox * stride_)] += s[ox];
            }
          }
        }
      }
    }
  }

  std::size_t in_, out_, k_, stride_, pad_;
  bool has_bias_;
  bool input_grad_ = true;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

// Per-channel batch normalization over (N, H, W); eps and momentum follow the
// PyTorch defaults so imported checkpoints behave identically.
template <typename T>
class BatchNorm2d final : public Module<T> {
 public:
  explicit BatchNorm2d(std::size_t channels, double eps = 1e-5, double momentum = 0.1)
      : c_(channels), eps_(eps), momentum_(momentum),
        weight_(Parameter<T>::weight({channels})), bias_(Parameter<T>::weight({channels})),
        running_mean_(Parameter<T>::buffer({channels}, T{0})),
        running_var_(Parameter<T>::buffer({channels}, T{1})) {
    weight_.value.fill(T{1});
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    detail::expect_rank4(x.shape(), c_, "batchnorm2d");
    const std::size_t N = x.dim(0), HW = x.dim(2) * x.dim(3), M = N * HW;
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(c_, 0.0);
    Tensor<T> y(x.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      double sum = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* p = x.data() + (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) sum += p[i];
      }
      const double mean = sum / static_cast<double>(M);
      double sq = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* p = x.data() + (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(M);
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[c] = inv;
      const double g = weight_.value[c], b = bias_.value[c];
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t off = (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const double xh = (x[off + i] - mean) * inv;
          xhat_[off + i] = static_cast<T>(xh);
          y[off + i] = static_cast<T>(g * xh + b);
        }
      }
      const double unbiased = M > 1 ? sq / static_cast<double>(M - 1) : var;
      running_mean_.value[c] = static_cast<T>((1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean);
      running_var_.value[c] = static_cast<T>((1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const std::size_t N = xhat_.dim(0), HW = xhat_.dim(2) * xhat_.dim(3);
    const double M = static_cast<double>(N * HW);
    Tensor<T> dx(xhat_.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t off = (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          sum_dy += grad_out[off + i];
          sum_dy_xh += static_cast<double>(grad_out[off + i]) * xhat_[off + i];
        }
      }
      weight_.grad[c] += static_cast<T>(sum_dy_xh);
      bias_.grad[c] += static_cast<T>(sum_dy);
      const double scale = weight_.value[c] * inv_std_[c] / M;
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t off = (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          dx[off + i] = static_cast<T>(scale * (M * grad_out[off + i] - sum_dy - xhat_[off + i] * sum_dy_xh));
        }
      }
    }
    return dx;
  }

  Tensor<T> infer(const Tensor<T>& x) const override {
    detail::expect_rank4(x.shape(), c_, "batchnorm2d");
    const std::size_t N = x.dim(0), HW = x.dim(2) * x.dim(3);
    Tensor<T> y(x.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + eps_);
      const double scale = weight_.value[c] * inv;
      const double shift = bias_.value[c] - running_mean_.value[c] * scale;
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t off = (n * c_ + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) y[off + i] = static_cast<T>(x[off + i] * scale + shift);
      }
    }
    return y;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override {
    fn(prefix + "weight", weight_);
    fn(prefix + "bias", bias_);
    fn(prefix + "running_mean", running_mean_);
    fn(prefix + "running_var", running_var_);
  }
  void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const override {
    fn(prefix + "weight", weight_);
    fn(prefix + "bias", bias_);
    fn(prefix + "running_mean", running_mean_);
    fn(prefix + "running_var", running_var_);
  }
  std::unique_ptr<Module<T>> clone() const override {
    auto c = std::make_unique<BatchNorm2d>(*this);
    c->xhat_ = Tensor<T>();
    return c;
  }

 private:
  std::size_t c_;
  double eps_, momentum_;
  Parameter<T> weight_, bias_, running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
};

template <typename T>
class ReLU final : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    output_ = infer(x);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(output_[i] > T{0})) g[i] = T{0};
    }
    return g;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = v < T{0} ? T{0} : v;  // NaN passes through
    return y;
  }
  void visit(const std::string&, const ParamVisitor<T>&) override {}
  void visit(const std::string&, const ConstParamVisitor<T>&) const override {}
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<ReLU>(); }

 private:
  Tensor<T> output_;
};

template <typename T>
class Tanh final : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    output_ = infer(x);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= T{1} - output_[i] * output_[i];
    return g;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = std::tanh(v);
    return y;
  }
  void visit(const std::string&, const ParamVisitor<T>&) override {}
  void visit(const std::string&, const ConstParamVisitor<T>&) const override {}
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<Tanh>(); }

 private:
  Tensor<T> output_;
};

// Max pooling with implicit -inf padding.
template <typename T>
class MaxPool2d final : public Module<T> {
 public:
  MaxPool2d(std::size_t kernel, std::size_t stride, std::size_t pad = 0) : k_(kernel), s_(stride), p_(pad) {}

  Tensor<T> forward(const Tensor<T>& x) override {
    input_shape_ = x.shape();
    return pool(x, &argmax_);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> dx(input_shape_);
    for (std::size_t i = 0; i < grad_out.size(); ++i) dx[argmax_[i]] += grad_out[i];
    return dx;
  }
  Tensor<T> infer(const Tensor<T>& x) const override { return pool(x, nullptr); }

  void visit(const std::string&, const ParamVisitor<T>&) override {}
  void visit(const std::string&, const ConstParamVisitor<T>&) const override {}
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<MaxPool2d>(k_, s_, p_); }

 private:
  Tensor<T> pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const {
    if (x.rank() != 4) throw ValidationError("maxpool2d: expected NCHW input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H + 2 * p_ < k_ || W + 2 * p_ < k_) throw ValidationError("maxpool2d: input is smaller than the window");
    const std::size_t Ho = (H + 2 * p_ - k_) / s_ + 1, Wo = (W + 2 * p_ - k_) / s_ + 1;
    Tensor<T> y({N, C, Ho, Wo});
    if (argmax) argmax->assign(y.size(), 0);
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < N * C; ++nc) {
      const std::size_t base = nc * H * W;
      for (std::size_t oy = 0; oy < Ho; ++oy) {
        for (std::size_t ox = 0; ox < Wo; ++ox, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_at = base;
          for (std::size_t ky = 0; ky < k_; ++ky) {
            const long iy = static_cast<long>(oy * s_ + ky) - static_cast<long>(p_);
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const long ix = static_cast<long>(ox * s_ + kx) - static_cast<long>(p_);
              if (ix < 0 || ix >= static_cast<long>(W)) continue;
              const std::size_t at = base + static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix);
              if (x[at] > best || std::isnan(x[at])) {
                best = x[at];
                best_at = at;
              }
            }
          }
          y[o] = best;
          if (argmax) (*argmax)[o] = best_at;
        }
      }
    }
    return y;
  }

  std::size_t k_, s_, p_;
  std::vector<std::size_t> input_shape_;
  std::vector<std::size_t> argmax_;
};

// Adaptive average pool to 1x1 followed by flatten: {N,C,H,W} -> {N,C}.
template <typename T>
class GlobalAvgPool final : public Module<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    input_shape_ = x.shape();
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const std::size_t N = input_shape_[0], C = input_shape_[1], HW = input_shape_[2] * input_shape_[3];
    Tensor<T> dx(input_shape_);
    const T scale = T{1} / static_cast<T>(HW);
    for (std::size_t i = 0; i < N * C; ++i) {
      const T g = grad_out[i] * scale;
      std::fill(dx.data() + i * HW, dx.data() + (i + 1) * HW, g);
    }
    return dx;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    if (x.rank() != 4) throw ValidationError("global pool: expected NCHW input");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Tensor<T> y({N, C});
    for (std::size_t i = 0; i < N * C; ++i) {
      double s = 0.0;
      const T* p = x.data() + i * HW;
      for (std::size_t j = 0; j < HW; ++j) s += p[j];
      y[i] = static_cast<T>(s / static_cast<double>(HW));
    }
    return y;
  }
  void visit(const std::string&, const ParamVisitor<T>&) override {}
  void visit(const std::string&, const ConstParamVisitor<T>&) const override {}
  std::unique_ptr<Module<T>> clone() const override { return std::make_unique<GlobalAvgPool>(); }

 private:
  std::vector<std::size_t> input_shape_;
};

// Fully connected layer on {N, in} inputs; weight {out, in}.
template <typename T>
class Linear final : public Module<T> {
 public:
  Linear(std::size_t in, std::size_t out)
      : in_(in), out_(out), weight_(Parameter<T>::weight({out, in})), bias_(Parameter<T>::weight({out})) {}

  // Small symmetric uniform weights, zero bias.
  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    for (auto& w : weight_.value.values()) w = static_cast<T>(rng.uniform(-bound, bound));
    bias_.value.fill(T{0});
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const std::size_t N = input_.dim(0);
    Eigen::Map<const MatR<T>> X(input_.data(), N, in_);
    Eigen::Map<const MatR<T>> dY(grad_out.data(), N, out_);
    Eigen::Map<const MatR<T>> Wm(weight_.value.data(), out_, in_);
    Eigen::Map<MatR<T>> dW(weight_.grad.data(), out_, in_);
    dW.noalias() += dY.transpose() * X;
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += dY.col(o).sum();
    Tensor<T> dx({N, in_});
    Eigen::Map<MatR<T>> dX(dx.data(), N, in_);
    dX.noalias() = dY * Wm;
    return dx;
  }
  Tensor<T> infer(const Tensor<T>& x) const override {
    if (x.rank() != 2 || x.dim(1) != in_) throw ValidationError("linear: expected {N, " + std::to_string(in_) + "}");
    const std::size_t N = x.dim(0);
    Eigen::Map<const MatR<T>> X(x.data(), N, in_);
    Eigen::Map<const MatR<T>> Wm(weight_.value.data(), out_, in_);
    Tensor<T> y({N, out_});
    Eigen::Map<MatR<T>> Y(y.data(), N, out_);
    Y.noalias() = X * Wm.transpose();
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t o = 0; o < out_; ++o) Y(n, o) += bias_.value[o];
    }
    return y;
  }
  void visit(const std::string& prefix, const ParamVisitor<T>& fn) override {
    fn(prefix + "weight", weight_);
    fn(prefix + "bias", bias_);
  }
  void visit(const std::string& prefix, const ConstParamVisitor<T>& fn) const override {
    fn(prefix + "weight", weight_);
    fn(prefix + "bias", bias_);
  }
  std::unique_ptr<Module<T>> clone() const override {
    auto c = std::make_unique<Linear>(*this);
    c->input_ = Tensor<T>();
    return c;
  }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

}  // namespace protofsl::nn
