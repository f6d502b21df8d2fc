#pragma once

// Finite-difference checks of every layer type in double precision. Shared by
// the unit tests and the acceptance binary.

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "oul/nn/grad_check.hpp"
#include "oul/nn/layers.hpp"
#include "oul/nn/unet.hpp"

namespace oul::test {

using DTensor = nn::Tensor4<double>;

inline DTensor random_tensor(int n, int c, int h, int w, Rng& rng, double away_from_zero = 0.0) {
  DTensor t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v;
    do v = rng.normal();
    while (std::abs(v) < away_from_zero);
    t.data()[i] = v;
  }
  return t;
}

inline double dot(const DTensor& a, const DTensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline std::vector<std::uint8_t> random_targets(std::size_t n, Rng& rng) {
  std::vector<std::uint8_t> t(n);
  for (auto& v : t) v = static_cast<std::uint8_t>(rng.below(2));
  return t;
}

/// Max relative error of d(r . f(x))/dx against central differences over
/// every input coordinate, for a random projection r.
inline double input_grad_error(DTensor x, const std::function<DTensor(const DTensor&)>& fwd,
                               const std::function<DTensor(const DTensor&)>& bwd, Rng& rng,
                               double eps = 1e-5) {
  const DTensor y = fwd(x);
  const DTensor r = random_tensor(y.n(), y.c(), y.h(), y.w(), rng);
  const DTensor dx = bwd(r);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double numeric =
        nn::central_difference(x.data()[i], eps, [&] { return dot(r, fwd(x)); });
    worst = std::max(worst, nn::relative_error(dx.data()[i], numeric));
  }
  return worst;
}

/// Same for the weights and biases of a convolution.
inline double conv_param_grad_error(nn::Conv2d<double>& conv, const DTensor& x, Rng& rng,
                                    double eps = 1e-5) {
  const DTensor y = conv.forward(x);
  const DTensor r = random_tensor(y.n(), y.c(), y.h(), y.w(), rng);
  std::fill(conv.weight.grad.begin(), conv.weight.grad.end(), 0.0);
  std::fill(conv.bias.grad.begin(), conv.bias.grad.end(), 0.0);
  conv.backward(r, false);
  double worst = 0;
  for (auto* p : {&conv.weight, &conv.bias})
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double numeric =
          nn::central_difference(p->value[i], eps, [&] { return dot(r, conv.forward(x)); });
      worst = std::max(worst, nn::relative_error(p->grad[i], numeric));
    }
  return worst;
}

/// Cross-entropy gradient of a conv + softmax toy net w.r.t. its parameters.
inline double conv_softmax_grad_error(Rng& rng, double eps = 1e-4) {
  nn::Conv2d<double> conv(1, 2, 3, "toy");
  conv.init_he(rng);
  const DTensor x = random_tensor(2, 1, 5, 5, rng);
  const auto targets = random_targets(2 * 25, rng);
  conv.weight.grad.assign(conv.weight.size(), 0.0);
  conv.bias.grad.assign(conv.bias.size(), 0.0);
  DTensor g;
  nn::softmax_cross_entropy(conv.forward(x), targets, &g);
  conv.backward(g, false);
  double worst = 0;
  for (auto* p : {&conv.weight, &conv.bias})
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double numeric = nn::central_difference(p->value[i], eps, [&] {
        return nn::softmax_cross_entropy(conv.forward(x), targets, nullptr);
      });
      worst = std::max(worst, nn::relative_error(p->grad[i], numeric));
    }
  return worst;
}

/// Cross-entropy gradient w.r.t. the logits themselves.
inline double softmax_ce_grad_error(Rng& rng, double eps = 1e-5) {
  DTensor logits = random_tensor(2, 3, 3, 2, rng);
  const auto targets = [&] {
    std::vector<std::uint8_t> t(2 * 6);
    for (auto& v : t) v = static_cast<std::uint8_t>(rng.below(3));
    return t;
  }();
  DTensor g;
  nn::softmax_cross_entropy(logits, targets, &g);
  double worst = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double numeric = nn::central_difference(logits.data()[i], eps, [&] {
      return nn::softmax_cross_entropy(logits, targets, nullptr);
    });
    worst = std::max(worst, nn::relative_error(g.data()[i], numeric));
  }
  return worst;
}

/// Every layer type, one entry each: (name, max relative error).
inline std::vector<std::pair<std::string, double>> layer_gradient_errors(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::string, double>> out;
  for (int k : {3, 1}) {
    nn::Conv2d<double> conv(2, 3, k, "c");
    conv.init_he(rng);
    for (auto& b : conv.bias.value) b = rng.normal();
    const DTensor x = random_tensor(2, 2, 5, 4, rng);
    const std::string name = "conv" + std::to_string(k) + "x" + std::to_string(k);
    out.emplace_back(name + " params", conv_param_grad_error(conv, x, rng));
    out.emplace_back(name + " input",
                     input_grad_error(
                         x, [&](const DTensor& in) { return conv.forward(in); },
                         [&](const DTensor& dy) { return conv.backward(dy); }, rng));
  }
  nn::ReLU<double> relu;
  out.emplace_back("relu", input_grad_error(
                               random_tensor(2, 2, 4, 4, rng, 1e-3),
                               [&](const DTensor& x) { return relu.forward(x); },
                               [&](const DTensor& dy) { return relu.backward(dy); }, rng));
  nn::MaxPool2<double> pool;
  out.emplace_back("maxpool2", input_grad_error(
                                   random_tensor(2, 2, 4, 6, rng),
                                   [&](const DTensor& x) { return pool.forward(x); },
                                   [&](const DTensor& dy) { return pool.backward(dy); }, rng));
  nn::Upsample2<double> up;
  out.emplace_back("upsample2", input_grad_error(
                                    random_tensor(1, 2, 3, 2, rng),
                                    [&](const DTensor& x) { return up.forward(x); },
                                    [&](const DTensor& dy) { return up.backward(dy); }, rng));
  nn::Dropout<double> drop(0.3);
  {
    const DTensor x = random_tensor(1, 2, 4, 4, rng);
    Rng mask_rng = rng.substream("mask");
    drop.forward(x, nn::DropoutMode::Sample, &mask_rng);
    out.emplace_back("dropout (frozen mask)",
                     input_grad_error(
                         x,
                         [&](const DTensor& in) {
                           return drop.forward(in, nn::DropoutMode::Frozen, nullptr);
                         },
                         [&](const DTensor& dy) { return drop.backward(dy); }, rng));
  }
  {
    const DTensor b = random_tensor(1, 2, 3, 3, rng);
    out.emplace_back("concat", input_grad_error(
                                   random_tensor(1, 1, 3, 3, rng),
                                   [&](const DTensor& a) { return nn::concat_channels(a, b); },
                                   [&](const DTensor& dy) { return nn::split_channels(dy, 1).first; },
                                   rng));
  }
  out.emplace_back("softmax cross-entropy", softmax_ce_grad_error(rng));
  out.emplace_back("conv+softmax toy net", conv_softmax_grad_error(rng));
  return out;
}

/// Parameter gradients of a depth-1, 4-filter U-Net with frozen dropout.
inline nn::GradCheckResult toy_unet_grad_check(std::uint64_t seed, double dropout_p = 0.2) {
  Rng rng(seed);
  nn::UNet<double> net(nn::NetworkConfig{.depth = 1, .base_filters = 4, .dropout_p = dropout_p},
                       rng);
  const DTensor x = random_tensor(2, 1, 8, 8, rng);
  const auto targets = random_targets(2 * 64, rng);
  Rng check = rng.substream("check");
  return nn::grad_check(net, x, targets, check);
}

}  // namespace oul::test
