#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oul/core/error.hpp"
#include "oul/core/rng.hpp"
#include "oul/nn/tensor.hpp"

namespace oul::nn {

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatrixMap = Eigen::Map<RowMatrix<S>>;
template <typename S>
using ConstMatrixMap = Eigen::Map<const RowMatrix<S>>;

/// Matrix product accumulated in double, rounded back to the operand type.
template <typename A, typename B>
auto product(const A& a, const B& b) {
  using S = typename A::Scalar;
  RowMatrix<double> r = a.template cast<double>() * b.template cast<double>();
  return RowMatrix<S>(r.template cast<S>());
}

/// Square 2D convolution, stride 1, zero "same" padding (odd kernel sizes).
/// Implemented as im2col followed by a matrix product per batch image.
template <typename S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, std::string name)
      : cin_(in_channels), cout_(out_channels), k_(kernel) {
    if (kernel % 2 == 0 || kernel < 1) throw ConfigError("conv kernel must be odd");
    weight.name = name + ".weight";
    bias.name = name + ".bias";
    weight.resize(static_cast<std::size_t>(cout_) * cin_ * k_ * k_);
    bias.resize(static_cast<std::size_t>(cout_));
  }

  int in_channels() const noexcept { return cin_; }
  int out_channels() const noexcept { return cout_; }
  int kernel() const noexcept { return k_; }

  /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
  void init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / (cin_ * k_ * k_));
    for (auto& v : weight.value) v = static_cast<S>(rng.normal() * stddev);
    std::fill(bias.value.begin(), bias.value.end(), S{});
  }

  Tensor4<S> forward(const Tensor4<S>& x) {
    if (x.c() != cin_)
      throw ShapeError(weight.name + ": input " + x.shape_string() + " has " +
                       std::to_string(x.c()) + " channels, expected " + std::to_string(cin_));
    input_ = x;
    const int hw = x.h() * x.w();
    Tensor4<S> y(x.n(), cout_, x.h(), x.w());
    ConstMatrixMap<S> wm(weight.value.data(), cout_, rows());
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bm(bias.value.data(), cout_);
    for (int b = 0; b < x.n(); ++b) {
      MatrixMap<S> ym(y.image(b), cout_, hw);
      if (k_ == 1) {
        ym = product(wm, ConstMatrixMap<S>(x.image(b), cin_, hw));
      } else {
        im2col(x, b);
        ym = product(wm, ConstMatrixMap<S>(col_.data(), rows(), hw));
      }
      ym.colwise() += bm;
    }
    return y;
  }

  /// Accumulates weight/bias gradients; returns the input gradient unless
  /// `need_input_grad` is false.
  Tensor4<S> backward(const Tensor4<S>& dy, bool need_input_grad = true) {
    const Tensor4<S>& x = input_;
    if (dy.n() != x.n() || dy.c() != cout_ || dy.h() != x.h() || dy.w() != x.w())
      throw ShapeError(weight.name + ": gradient shape " + dy.shape_string());
    const int hw = x.h() * x.w();
    MatrixMap<S> dw(weight.grad.data(), cout_, rows());
    ConstMatrixMap<S> wm(weight.value.data(), cout_, rows());
    Tensor4<S> dx;
    if (need_input_grad) dx = Tensor4<S>(x.n(), cin_, x.h(), x.w());
    for (int b = 0; b < x.n(); ++b) {
      ConstMatrixMap<S> dym(dy.image(b), cout_, hw);
      for (int o = 0; o < cout_; ++o) {
        double acc = 0.0;
        const S* g = dy.channel(b, o);
        for (int i = 0; i < hw; ++i) acc += g[i];
        bias.grad[static_cast<std::size_t>(o)] += static_cast<S>(acc);
      }
      if (k_ == 1) {
        ConstMatrixMap<S> xm(x.image(b), cin_, hw);
        dw += product(dym, xm.transpose());
        if (need_input_grad) MatrixMap<S>(dx.image(b), cin_, hw) = product(wm.transpose(), dym);
      } else {
        im2col(x, b);
        ConstMatrixMap<S> cm(col_.data(), rows(), hw);
        dw += product(dym, cm.transpose());
        if (need_input_grad) {
          dcol_.resize(static_cast<std::size_t>(rows()) * hw);
          MatrixMap<S>(dcol_.data(), rows(), hw) = product(wm.transpose(), dym);
          col2im(dx, b);
        }
      }
    }
    return dx;
  }

  Param<S> weight;
  Param<S> bias;

 private:
  int rows() const noexcept { return cin_ * k_ * k_; }

  void im2col(const Tensor4<S>& x, int b) {
    const int H = x.h(), W = x.w(), r = k_ / 2;
    col_.resize(static_cast<std::size_t>(rows()) * H * W);
    S* out = col_.data();
    for (int c = 0; c < cin_; ++c) {
      const S* src = x.channel(b, c);
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int dy = ky - r, dx = kx - r;
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          for (int y = 0; y < H; ++y, out += W) {
            const int sy = y + dy;
            if (sy < 0 || sy >= H) {
              std::fill(out, out + W, S{});
              continue;
            }
            std::fill(out, out + x0, S{});
            std::copy(src + sy * W + x0 + dx, src + sy * W + x1 + dx, out + x0);
            std::fill(out + x1, out + W, S{});
          }
        }
    }
  }

  void col2im(Tensor4<S>& dx, int b) const {
    const int H = dx.h(), W = dx.w(), r = k_ / 2;
    const S* in = dcol_.data();
    for (int c = 0; c < cin_; ++c) {
      S* dst = dx.channel(b, c);
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int dy = ky - r, dxo = kx - r;
          const int x0 = std::max(0, -dxo), x1 = std::min(W, W - dxo);
          for (int y = 0; y < H; ++y, in += W) {
            const int sy = y + dy;
            if (sy < 0 || sy >= H) continue;
            S* row = dst + sy * W + dxo;
            for (int xx = x0; xx < x1; ++xx) row[xx] += in[xx];
          }
        }
    }
  }

  int cin_ = 0, cout_ = 0, k_ = 1;
  Tensor4<S> input_;
  std::vector<S> col_, dcol_;
};

template <typename S>
class ReLU {
 public:
  Tensor4<S> forward(const Tensor4<S>& x) {
    Tensor4<S> y = x;
    active_.resize(x.size());
    S* d = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
      active_[i] = d[i] > S{0};
      if (!active_[i]) d[i] = S{0};
    }
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy) const {
    Tensor4<S> dx = dy;
    S* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!active_[i]) d[i] = S{0};
    return dx;
  }

  /// Active/inactive pattern of the last forward pass.
  const std::vector<std::uint8_t>& pattern() const noexcept { return active_; }

 private:
  std::vector<std::uint8_t> active_;
};

enum class DropoutMode {
  Off,     ///< identity (deterministic inference)
  Sample,  ///< draw a fresh inverted-dropout mask
  Frozen,  ///< reuse the mask drawn by the previous Sample pass
};

/// Inverted dropout: kept units are scaled by 1 / (1 - p).
template <typename S>
class Dropout {
 public:
  explicit Dropout(double p = 0.0) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1)");
  }

  double p() const noexcept { return p_; }

  Tensor4<S> forward(const Tensor4<S>& x, DropoutMode mode, Rng* rng) {
    active_ = mode != DropoutMode::Off && p_ > 0.0;
    if (!active_) return x;
    if (mode == DropoutMode::Sample) {
      if (!rng) throw ConfigError("dropout sampling requires a random stream");
      draw_mask(x.size(), *rng);
    } else if (mask_.size() != x.size()) {
      throw ShapeError("frozen dropout mask does not match input " + x.shape_string());
    }
    Tensor4<S> y = x;
    S* d = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) d[i] *= mask_[i];
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy) const {
    if (!active_) return dy;
    Tensor4<S> dx = dy;
    S* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) d[i] *= mask_[i];
    return dx;
  }

 private:
  void draw_mask(std::size_t n, Rng& rng) {
    mask_.resize(n);
    const float keep = static_cast<float>(1.0 - p_);
    const S scale = static_cast<S>(1.0 / (1.0 - p_));
    std::size_t i = 0;
    float u0, u1;
    for (; i + 1 < n; i += 2) {
      rng.uniform_pair(u0, u1);
      mask_[i] = u0 < keep ? scale : S{0};
      mask_[i + 1] = u1 < keep ? scale : S{0};
    }
    if (i < n) {
      rng.uniform_pair(u0, u1);
      mask_[i] = u0 < keep ? scale : S{0};
    }
  }

  double p_;
  bool active_ = false;
  std::vector<S> mask_;
};

/// 2x2 max pooling with stride 2; ties resolve to the first element in
/// row-major window order.
template <typename S>
class MaxPool2 {
 public:
  Tensor4<S> forward(const Tensor4<S>& x) {
    if (x.h() % 2 || x.w() % 2) throw ShapeError("maxpool input " + x.shape_string() + " not even");
    in_shape_ = x.shape();
    const int H = x.h() / 2, W = x.w() / 2;
    Tensor4<S> y(x.n(), x.c(), H, W);
    argmax_.resize(y.size());
    std::size_t o = 0;
    for (int b = 0; b < x.n(); ++b)
      for (int c = 0; c < x.c(); ++c) {
        const S* src = x.channel(b, c);
        S* dst = y.channel(b, c);
        for (int yy = 0; yy < H; ++yy)
          for (int xx = 0; xx < W; ++xx, ++o) {
            const int base = 2 * yy * x.w() + 2 * xx;
            const int idx[4] = {base, base + 1, base + x.w(), base + x.w() + 1};
            int best = idx[0];
            for (int k = 1; k < 4; ++k)
              if (src[idx[k]] > src[best]) best = idx[k];
            dst[yy * W + xx] = src[best];
            argmax_[o] = best;
          }
      }
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy) const {
    Tensor4<S> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    std::size_t o = 0;
    for (int b = 0; b < dy.n(); ++b)
      for (int c = 0; c < dy.c(); ++c) {
        const S* g = dy.channel(b, c);
        S* dst = dx.channel(b, c);
        for (std::size_t i = 0; i < dy.plane(); ++i, ++o) dst[argmax_[o]] += g[i];
      }
    return dx;
  }

  const std::vector<int>& pattern() const noexcept { return argmax_; }

 private:
  std::array<int, 4> in_shape_{};
  std::vector<int> argmax_;
};

/// Nearest-neighbour 2x upsampling.
template <typename S>
class Upsample2 {
 public:
  Tensor4<S> forward(const Tensor4<S>& x) const {
    Tensor4<S> y(x.n(), x.c(), 2 * x.h(), 2 * x.w());
    for (int b = 0; b < x.n(); ++b)
      for (int c = 0; c < x.c(); ++c) {
        const S* src = x.channel(b, c);
        S* dst = y.channel(b, c);
        for (int yy = 0; yy < y.h(); ++yy)
          for (int xx = 0; xx < y.w(); ++xx) dst[yy * y.w() + xx] = src[(yy / 2) * x.w() + xx / 2];
      }
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy) const {
    Tensor4<S> dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
    for (int b = 0; b < dy.n(); ++b)
      for (int c = 0; c < dy.c(); ++c) {
        const S* g = dy.channel(b, c);
        S* dst = dx.channel(b, c);
        for (int yy = 0; yy < dy.h(); ++yy)
          for (int xx = 0; xx < dy.w(); ++xx) dst[(yy / 2) * dx.w() + xx / 2] += g[yy * dy.w() + xx];
      }
    return dx;
  }
};

/// Channel concatenation [a, b].
template <typename S>
Tensor4<S> concat_channels(const Tensor4<S>& a, const Tensor4<S>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    throw ShapeError("concat: " + a.shape_string() + " vs " + b.shape_string());
  Tensor4<S> y(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int n = 0; n < a.n(); ++n) {
    std::copy(a.image(n), a.image(n) + a.image_stride(), y.image(n));
    std::copy(b.image(n), b.image(n) + b.image_stride(), y.image(n) + a.image_stride());
  }
  return y;
}

/// Inverse of concat_channels for gradients: first `channels_a` channels and the rest.
template <typename S>
std::pair<Tensor4<S>, Tensor4<S>> split_channels(const Tensor4<S>& y, int channels_a) {
  Tensor4<S> a(y.n(), channels_a, y.h(), y.w()), b(y.n(), y.c() - channels_a, y.h(), y.w());
  for (int n = 0; n < y.n(); ++n) {
    std::copy(y.image(n), y.image(n) + a.image_stride(), a.image(n));
    std::copy(y.image(n) + a.image_stride(), y.image(n) + y.image_stride(), b.image(n));
  }
  return {std::move(a), std::move(b)};
}

/// Softmax over channels.
template <typename S>
Tensor4<S> softmax_channels(const Tensor4<S>& logits) {
  Tensor4<S> p(logits.n(), logits.c(), logits.h(), logits.w());
  const std::size_t plane = logits.plane();
  for (int b = 0; b < logits.n(); ++b)
    for (std::size_t i = 0; i < plane; ++i) {
      S mx = -std::numeric_limits<S>::infinity();
      for (int c = 0; c < logits.c(); ++c) mx = std::max(mx, logits.channel(b, c)[i]);
      double sum = 0.0;
      for (int c = 0; c < logits.c(); ++c) sum += std::exp(double(logits.channel(b, c)[i] - mx));
      for (int c = 0; c < logits.c(); ++c)
        p.channel(b, c)[i] = static_cast<S>(std::exp(double(logits.channel(b, c)[i] - mx)) / sum);
    }
  return p;
}

/// Mean pixelwise cross-entropy -log softmax(logits)[target] and its gradient
/// with respect to the logits. `targets` holds one class index per pixel in
/// (batch, y, x) order.
template <typename S>
double softmax_cross_entropy(const Tensor4<S>& logits, std::span<const std::uint8_t> targets,
                             std::type_identity_t<Tensor4<S>>* grad_logits) {
  const std::size_t plane = logits.plane();
  const std::size_t count = plane * static_cast<std::size_t>(logits.n());
  if (targets.size() != count)
    throw ShapeError("cross-entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(count) + " pixels");
  if (grad_logits) *grad_logits = Tensor4<S>(logits.n(), logits.c(), logits.h(), logits.w());
  const double inv = 1.0 / static_cast<double>(count);
  double loss = 0.0;
  std::vector<double> e(static_cast<std::size_t>(logits.c()));
  for (int b = 0; b < logits.n(); ++b)
    for (std::size_t i = 0; i < plane; ++i) {
      const int t = targets[static_cast<std::size_t>(b) * plane + i];
      if (t >= logits.c()) throw DomainError("cross-entropy: target class out of range");
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < logits.c(); ++c) mx = std::max(mx, double(logits.channel(b, c)[i]));
      double sum = 0.0;
      for (int c = 0; c < logits.c(); ++c) sum += e[static_cast<std::size_t>(c)] = std::exp(double(logits.channel(b, c)[i]) - mx);
      loss += std::log(sum) + mx - double(logits.channel(b, t)[i]);
      if (grad_logits)
        for (int c = 0; c < logits.c(); ++c)
          grad_logits->channel(b, c)[i] =
              static_cast<S>((e[static_cast<std::size_t>(c)] / sum - (c == t ? 1.0 : 0.0)) * inv);
    }
  return loss * inv;
}

}  // namespace oul::nn
