#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/nn/tensor.hpp"

namespace oul::nn {

/// Stacks images into a (n, 1, H, W) tensor with intensities scaled by 1/255.
/// Non-finite intensities are rejected: ReLU would silently zero them.
template <typename S>
Tensor4<S> images_to_tensor(std::span<const GrayImage* const> images) {
  if (images.empty()) throw ShapeError("empty image batch");
  const int W = images[0]->width(), H = images[0]->height();
  Tensor4<S> t(static_cast<int>(images.size()), 1, H, W);
  for (std::size_t b = 0; b < images.size(); ++b) {
    require_same_shape(*images[0], *images[b], "image batch");
    S* dst = t.image(static_cast<int>(b));
    const auto src = images[b]->data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (!std::isfinite(src[i])) throw DomainError("image contains a non-finite intensity");
      dst[i] = static_cast<S>(src[i] / 255.0);
    }
  }
  return t;
}

template <typename S>
Tensor4<S> image_to_tensor(const GrayImage& image) {
  const GrayImage* p = &image;
  return images_to_tensor<S>(std::span<const GrayImage* const>(&p, 1));
}

/// Foreground-probability channel of batch item `b`.
template <typename S>
ProbMap foreground_map(const Tensor4<S>& probs, int b = 0) {
  ProbMap m(probs.w(), probs.h());
  const S* src = probs.channel(b, 1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<float>(src[i]);
  return m;
}

}  // namespace oul::nn
