#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "oul/core/error.hpp"

namespace oul::nn {

/// Dense (batch, channels, height, width) tensor, row-major.
template <typename S>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w, S fill = S{}) : shape_{n, c, h, w} {
    for (int d : shape_)
      if (d < 0) throw ShapeError("negative tensor dimension");
    data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
  }

  int n() const noexcept { return shape_[0]; }
  int c() const noexcept { return shape_[1]; }
  int h() const noexcept { return shape_[2]; }
  int w() const noexcept { return shape_[3]; }
  const std::array<int, 4>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }
  std::size_t image_stride() const noexcept { return plane() * static_cast<std::size_t>(shape_[1]); }

  S* data() noexcept { return data_.data(); }
  const S* data() const noexcept { return data_.data(); }
  std::vector<S>& storage() noexcept { return data_; }
  const std::vector<S>& storage() const noexcept { return data_; }

  S* image(int b) noexcept { return data_.data() + image_stride() * static_cast<std::size_t>(b); }
  const S* image(int b) const noexcept {
    return data_.data() + image_stride() * static_cast<std::size_t>(b);
  }
  S* channel(int b, int ch) noexcept { return image(b) + plane() * static_cast<std::size_t>(ch); }
  const S* channel(int b, int ch) const noexcept {
    return image(b) + plane() * static_cast<std::size_t>(ch);
  }

  S& operator()(int b, int ch, int y, int x) noexcept {
    return channel(b, ch)[static_cast<std::size_t>(y) * shape_[3] + x];
  }
  const S& operator()(int b, int ch, int y, int x) const noexcept {
    return channel(b, ch)[static_cast<std::size_t>(y) * shape_[3] + x];
  }

  bool same_shape(const Tensor4& o) const noexcept { return shape_ == o.shape_; }

  std::string shape_string() const {
    return "(" + std::to_string(shape_[0]) + ", " + std::to_string(shape_[1]) + ", " +
           std::to_string(shape_[2]) + ", " + std::to_string(shape_[3]) + ")";
  }

 private:
  std::array<int, 4> shape_{0, 0, 0, 0};
  std::vector<S> data_;
};

template <typename S>
void require_shape(const Tensor4<S>& t, const Tensor4<S>& expected, const char* where) {
  if (!t.same_shape(expected))
    throw ShapeError(std::string(where) + ": shape " + t.shape_string() + " expected " +
                     expected.shape_string());
}

/// Trainable parameter with its gradient buffer.
template <typename S>
struct Param {
  std::string name;
  std::vector<S> value;
  std::vector<S> grad;

  void resize(std::size_t n) {
    value.assign(n, S{});
    grad.assign(n, S{});
  }
  std::size_t size() const noexcept { return value.size(); }
};

}  // namespace oul::nn
