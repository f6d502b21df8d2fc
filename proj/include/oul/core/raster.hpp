#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oul/core/error.hpp"

namespace oul {

/// Row-major 2D raster. The element type distinguishes the three raster
/// roles: GrayImage (real intensities), BinaryMask (0/1 bytes) and ProbMap
/// (32-bit probabilities or entropies).
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ShapeError("negative raster dimension");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw ShapeError("negative raster dimension");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ShapeError("raster data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(width) + "x" +
                       std::to_string(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Real-valued intensities, nominally in [0, 255]; quantized only on export.
using GrayImage = Raster<double>;
/// Foreground (1) / background (0) labels.
using BinaryMask = Raster<std::uint8_t>;
/// Per-pixel probabilities or base-2 binary entropies.
using ProbMap = Raster<float>;

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const std::string& what) {
  if (!a.same_shape(b))
    throw ShapeError(what + ": dimension mismatch (" +
                     std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
}

inline std::size_t count_foreground(const BinaryMask& m) noexcept {
  std::size_t n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

}  // namespace oul
