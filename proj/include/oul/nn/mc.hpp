#pragma once

#include <algorithm>
#include <vector>

#include "oul/core/entropy.hpp"
#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/nn/io.hpp"
#include "oul/nn/unet.hpp"

namespace oul::nn {

/// T dropout-sampled foreground maps with their mean and predictive entropy.
struct McPrediction {
  std::vector<ProbMap> samples;
  ProbMap mean;
  ProbMap entropy;
  int t = 0;
};

/// Mean and base-2 entropy of a set of foreground maps. Per pixel the values
/// are summed in ascending order, so the mean does not depend on the order of
/// `samples`.
inline McPrediction summarize_samples(std::vector<ProbMap> samples) {
  if (samples.empty()) throw ConfigError("Monte Carlo prediction needs t >= 1");
  for (const auto& s : samples) require_same_shape(samples[0], s, "mc samples");
  McPrediction out;
  out.t = static_cast<int>(samples.size());
  const int W = samples[0].width(), H = samples[0].height();
  out.mean = ProbMap(W, H);
  out.entropy = ProbMap(W, H);
  std::vector<float> v(samples.size());
  for (std::size_t i = 0; i < out.mean.size(); ++i) {
    for (std::size_t k = 0; k < samples.size(); ++k) v[k] = samples[k][i];
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (float x : v) sum += x;
    const auto m = static_cast<float>(sum / static_cast<double>(samples.size()));
    out.mean[i] = m;
    out.entropy[i] = static_cast<float>(binary_entropy(m));
  }
  out.samples = std::move(samples);
  return out;
}

/// Monte Carlo dropout inference: pass k samples dropout masks from
/// rng.substream(k), so passes are independent of evaluation order.
template <typename S>
McPrediction mc_predict(UNet<S>& net, const GrayImage& image, int t, const Rng& rng) {
  if (t < 1) throw ConfigError("Monte Carlo prediction needs t >= 1");
  const auto x = image_to_tensor<S>(image);
  std::vector<ProbMap> samples;
  samples.reserve(static_cast<std::size_t>(t));
  for (int k = 0; k < t; ++k) {
    Rng pass = rng.substream(static_cast<std::uint64_t>(k));
    samples.push_back(foreground_map(net.forward(x, DropoutMode::Sample, &pass)));
  }
  return summarize_samples(std::move(samples));
}

/// Deterministic (dropout-free) foreground probability.
template <typename S>
ProbMap predict_deterministic(UNet<S>& net, const GrayImage& image) {
  return foreground_map(net.forward(image_to_tensor<S>(image), DropoutMode::Off));
}

}  // namespace oul::nn
