#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oul/core/rng.hpp"
#include "oul/nn/unet.hpp"

namespace oul::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int checked = 0;
  /// Coordinates skipped because the +/- eps evaluations changed a ReLU or
  /// pooling decision, where the loss is not differentiable.
  int skipped = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference (f(x + eps) - f(x - eps)) / (2 eps) of a scalar
/// function of one coordinate; restores the coordinate.
template <typename S>
double central_difference(S& x, double eps, const std::function<double()>& f) {
  const S saved = x;
  x = static_cast<S>(saved + eps);
  const double plus = f();
  x = static_cast<S>(saved - eps);
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * eps);
}

/// Compares backpropagated parameter gradients of the cross-entropy loss with
/// central finite differences on a random sample of parameters. Dropout masks
/// are drawn once from `rng` and frozen for every evaluation.
inline GradCheckResult grad_check(UNet<double>& net, const Tensor4<double>& batch,
                                  std::span<const std::uint8_t> targets, Rng& rng,
                                  double eps = 1e-4, int samples = 200) {
  Rng dropout_rng = rng.substream("dropout");
  net.zero_grad();
  net.forward(batch, DropoutMode::Sample, &dropout_rng);
  net.backward(targets);
  const std::uint64_t signature = net.activation_signature();

  struct Coord {
    Param<double>* param;
    std::size_t index;
  };
  std::vector<Coord> coords;
  for (auto* p : net.parameters())
    for (std::size_t i = 0; i < p->size(); ++i) coords.push_back({p, i});
  Rng pick = rng.substream("pick");
  for (std::size_t i = coords.size(); i > 1; --i) std::swap(coords[i - 1], coords[pick.below(i)]);

  GradCheckResult res;
  bool kinked = false;
  auto loss = [&]() {
    net.forward(batch, DropoutMode::Frozen);
    if (net.activation_signature() != signature) kinked = true;
    return net.loss(targets);
  };
  for (const auto& c : coords) {
    if (res.checked >= samples) break;
    kinked = false;
    const double numeric = central_difference(c.param->value[c.index], eps, loss);
    if (kinked) {
      ++res.skipped;
      continue;
    }
    const double analytic = c.param->grad[c.index];
    res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric));
    res.max_abs_error = std::max(res.max_abs_error, std::abs(analytic - numeric));
    ++res.checked;
  }
  return res;
}

}  // namespace oul::nn
