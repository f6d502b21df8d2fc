#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/synthgen/params.hpp"

namespace oul::synth {

/// Test hooks for the rendering pipelines. Random parameters are always
/// drawn in the same order so disabling a stage never shifts later draws.
struct RenderHooks {
  bool blur = true;
  bool noise = true;
  std::optional<double> decay_lambda;
};

/// Random parameters drawn by a render call.
struct RenderInfo {
  double max_value = 0.0;
  double sigma = 0.0;
  double decay_lambda = 0.0;
  double noise_std = 0.0;
  std::vector<double> observer_weights;
};

/// Separable Gaussian blur with kernel radius ceil(3 sigma) and zero padding.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (auto& w : kernel) w /= sum;

  const int W = img.width(), H = img.height();
  GrayImage tmp(W, H), out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = std::max(-radius, -x); k <= std::min(radius, W - 1 - x); ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] * img(x + k, y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = std::max(-radius, -y); k <= std::min(radius, H - 1 - y); ++k)
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(x, y + k);
      out(x, y) = acc;
    }
  return out;
}

namespace detail {

/// Additive i.i.d. Gaussian noise with std = factor * (max - min), then
/// clamping to [0, 255]. Returns the noise standard deviation.
inline double add_noise_and_clamp(GrayImage& img, Rng& rng, double factor, bool enabled) {
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double stddev = factor * (*hi - *lo);
  for (auto& v : img.data()) {
    const double n = rng.normal();
    if (enabled) v += stddev * n;
    v = std::clamp(v, 0.0, 255.0);
  }
  return enabled ? stddev : 0.0;
}

}  // namespace detail

/// Low-entropy rendering: {0, M} foreground, Gaussian blur, Gaussian noise.
inline GrayImage render_unperturbed(const BinaryMask& gt, Rng& rng, const GenParams& params,
                                    const RenderHooks& hooks = {}, RenderInfo* info = nullptr) {
  if (gt.empty()) throw ShapeError("render_unperturbed: empty ground truth");
  RenderInfo drawn;
  drawn.max_value = rng.uniform(params.max_value_range.lo, params.max_value_range.hi);
  drawn.sigma = rng.uniform(params.blur_sigma_range.lo, params.blur_sigma_range.hi);

  GrayImage img(gt.width(), gt.height());
  for (std::size_t i = 0; i < gt.size(); ++i) img[i] = gt[i] ? drawn.max_value : 0.0;
  if (hooks.blur) img = gaussian_blur(img, drawn.sigma);
  drawn.noise_std = detail::add_noise_and_clamp(img, rng, params.noise_factor, hooks.noise);
  if (info) *info = drawn;
  return img;
}

/// High-entropy rendering: ground truth plus randomly weighted observer
/// masks, normalized by the maximum, rescaled to a random peak, attenuated by
/// exp(-lambda x / W) towards the right, blurred, and noised.
inline GrayImage render_perturbed(const BinaryMask& gt, const std::vector<BinaryMask>& observers,
                                  Rng& rng, const GenParams& params, const RenderHooks& hooks = {},
                                  RenderInfo* info = nullptr) {
  if (gt.empty()) throw ShapeError("render_perturbed: empty ground truth");
  for (const auto& o : observers) require_same_shape(gt, o, "render_perturbed");
  RenderInfo drawn;
  for (std::size_t k = 0; k < observers.size(); ++k)
    drawn.observer_weights.push_back(
        rng.uniform(params.obs_intensity_range.lo, params.obs_intensity_range.hi));
  drawn.max_value = rng.uniform(params.max_value_range.lo, params.max_value_range.hi);
  drawn.decay_lambda = rng.uniform(params.decay_range.lo, params.decay_range.hi);
  drawn.sigma = rng.uniform(params.blur_sigma_range.lo, params.blur_sigma_range.hi);
  if (hooks.decay_lambda) drawn.decay_lambda = *hooks.decay_lambda;

  const int W = gt.width(), H = gt.height();
  GrayImage img(W, H);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    double a = gt[i] ? 255.0 : 0.0;
    for (std::size_t k = 0; k < observers.size(); ++k)
      if (observers[k][i]) a += drawn.observer_weights[k];
    img[i] = a;
  }
  const double peak = *std::max_element(img.data().begin(), img.data().end());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double normalized = peak > 0.0 ? img(x, y) / peak : 0.0;
      img(x, y) = normalized * drawn.max_value *
                  std::exp(-drawn.decay_lambda * static_cast<double>(x) / W);
    }
  if (hooks.blur) img = gaussian_blur(img, drawn.sigma);
  drawn.noise_std = detail::add_noise_and_clamp(img, rng, params.noise_factor, hooks.noise);
  if (info) *info = drawn;
  return img;
}

}  // namespace oul::synth
