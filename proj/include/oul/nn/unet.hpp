#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/rng.hpp"
#include "oul/nn/layers.hpp"
#include "oul/nn/tensor.hpp"

namespace oul::nn {

struct NetworkConfig {
  int depth = 2;
  int base_filters = 16;
  double dropout_p = 0.2;
  int in_channels = 1;
  int out_classes = 2;

  bool operator==(const NetworkConfig&) const = default;
};

inline void validate(const NetworkConfig& cfg) {
  if (cfg.depth < 1) throw ConfigError("network depth must be >= 1");
  if (cfg.depth > 12) throw ConfigError("network depth must be <= 12");
  if (cfg.base_filters < 1) throw ConfigError("base_filters must be >= 1");
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0))
    throw ConfigError("dropout_p must lie in [0, 1)");
  if (cfg.in_channels < 1) throw ConfigError("in_channels must be >= 1");
  if (cfg.out_classes < 2) throw ConfigError("out_classes must be >= 2");
}

/// conv3x3 -> ReLU -> dropout.
template <typename S>
class ConvUnit {
 public:
  ConvUnit(int cin, int cout, double p, const std::string& name)
      : conv(cin, cout, 3, name), drop(p) {}

  Tensor4<S> forward(const Tensor4<S>& x, DropoutMode mode, Rng* rng) {
    return drop.forward(relu.forward(conv.forward(x)), mode, rng);
  }
  Tensor4<S> backward(const Tensor4<S>& dy, bool need_input_grad = true) {
    return conv.backward(relu.backward(drop.backward(dy)), need_input_grad);
  }

  Conv2d<S> conv;
  ReLU<S> relu;
  Dropout<S> drop;
};

/// U-Net segmenter with dropout after every 3x3 convolution.
///
/// Level l has base_filters * 2^l channels. Each encoder level is two conv
/// units followed by 2x2 max pooling; the bottleneck is two conv units. Each
/// decoder level upsamples (nearest neighbour), applies one conv unit,
/// concatenates [upsampled, skip] and applies two conv units. A 1x1 head maps
/// to class logits and a channel softmax yields probabilities.
///
/// Parameter order (checkpoints, parameters()): encoder levels 0..depth-1
/// (a, b), bottleneck (a, b), decoder levels depth-1..0 (up, a, b), head;
/// weight before bias for each convolution.
template <typename S>
class UNet {
 public:
  explicit UNet(const NetworkConfig& cfg) : cfg_(cfg) {
    validate(cfg);
    const double p = cfg.dropout_p;
    int cin = cfg.in_channels;
    for (int l = 0; l < cfg.depth; ++l) {
      const int c = width(l);
      const std::string n = "enc" + std::to_string(l);
      enc_.push_back({ConvUnit<S>(cin, c, p, n + ".a"), ConvUnit<S>(c, c, p, n + ".b"), {}});
      cin = c;
    }
    const int cb = width(cfg.depth);
    bottleneck_a_ = std::make_unique<ConvUnit<S>>(cin, cb, p, "bottleneck.a");
    bottleneck_b_ = std::make_unique<ConvUnit<S>>(cb, cb, p, "bottleneck.b");
    for (int l = cfg.depth - 1; l >= 0; --l) {
      const int c = width(l);
      const std::string n = "dec" + std::to_string(l);
      dec_.push_back({{},
                      ConvUnit<S>(width(l + 1), c, p, n + ".up"),
                      ConvUnit<S>(2 * c, c, p, n + ".a"),
                      ConvUnit<S>(c, c, p, n + ".b")});
    }
    head_ = Conv2d<S>(width(0), cfg.out_classes, 1, "head");
  }

  /// Builds the network and draws He-normal weights from `rng`.
  UNet(const NetworkConfig& cfg, Rng& rng) : UNet(cfg) {
    for (auto* conv : convolutions()) conv->init_he(rng);
  }

  const NetworkConfig& config() const noexcept { return cfg_; }
  int width(int level) const noexcept { return cfg_.base_filters << level; }

  /// Class probabilities (batch, out_classes, H, W).
  Tensor4<S> forward(const Tensor4<S>& x, DropoutMode mode, Rng* rng = nullptr) {
    check_input(x);
    Tensor4<S> h = x;
    skips_.clear();
    for (auto& e : enc_) {
      h = e.a.forward(h, mode, rng);
      h = e.b.forward(h, mode, rng);
      skips_.push_back(h);
      h = e.pool.forward(h);
    }
    h = bottleneck_a_->forward(h, mode, rng);
    h = bottleneck_b_->forward(h, mode, rng);
    for (std::size_t i = 0; i < dec_.size(); ++i) {
      auto& d = dec_[i];
      const auto& skip = skips_[skips_.size() - 1 - i];
      h = d.up_conv.forward(d.up.forward(h), mode, rng);
      h = concat_channels(h, skip);
      h = d.a.forward(h, mode, rng);
      h = d.b.forward(h, mode, rng);
    }
    skips_.clear();
    logits_ = head_.forward(h);
    return softmax_channels(logits_);
  }

  /// Cross-entropy of the last forward pass against per-pixel class targets;
  /// accumulates parameter gradients and returns the loss.
  double backward(std::span<const std::uint8_t> targets) {
    Tensor4<S> g;
    const double loss = softmax_cross_entropy(logits_, targets, &g);
    backward_from_logits(g);
    return loss;
  }

  /// Cross-entropy of the last forward pass without touching gradients.
  double loss(std::span<const std::uint8_t> targets) const {
    return softmax_cross_entropy<S>(logits_, targets, nullptr);
  }

  void backward_from_logits(const Tensor4<S>& dlogits) {
    Tensor4<S> g = head_.backward(dlogits);
    std::vector<Tensor4<S>> skip_grads(enc_.size());
    for (std::size_t i = 0; i < dec_.size(); ++i) {
      auto& d = dec_[dec_.size() - 1 - i];
      const int level = static_cast<int>(i);
      g = d.b.backward(g);
      g = d.a.backward(g);
      auto [g_up, g_skip] = split_channels(g, width(level));
      skip_grads[static_cast<std::size_t>(level)] = std::move(g_skip);
      g = d.up.backward(d.up_conv.backward(g_up));
    }
    g = bottleneck_b_->backward(g);
    g = bottleneck_a_->backward(g);
    for (int l = static_cast<int>(enc_.size()) - 1; l >= 0; --l) {
      auto& e = enc_[static_cast<std::size_t>(l)];
      g = e.pool.backward(g);
      const auto& sg = skip_grads[static_cast<std::size_t>(l)];
      for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] += sg.data()[k];
      g = e.b.backward(g);
      g = e.a.backward(g, l > 0);
    }
  }

  void zero_grad() {
    for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), S{});
  }

  std::vector<Param<S>*> parameters() {
    std::vector<Param<S>*> out;
    for (auto* c : convolutions()) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    }
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->size();
    return n;
  }

  /// Hash of every ReLU activity pattern and pooling argmax of the last
  /// forward pass. Finite-difference checks use it to detect kink crossings.
  std::uint64_t activation_signature() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](std::uint64_t v) { h = Rng::mix(h ^ v); };
    auto units = const_cast<UNet*>(this)->conv_units();
    for (auto* u : units)
      for (auto a : u->relu.pattern()) feed(a);
    for (const auto& e : enc_)
      for (int a : e.pool.pattern()) feed(static_cast<std::uint64_t>(a));
    return h;
  }

  std::vector<Conv2d<S>*> convolutions() {
    std::vector<Conv2d<S>*> out;
    for (auto* u : conv_units()) out.push_back(&u->conv);
    out.push_back(&head_);
    return out;
  }

 private:
  struct EncoderLevel {
    ConvUnit<S> a, b;
    MaxPool2<S> pool;
  };
  struct DecoderLevel {
    Upsample2<S> up;
    ConvUnit<S> up_conv, a, b;
  };

  std::vector<ConvUnit<S>*> conv_units() {
    std::vector<ConvUnit<S>*> out;
    for (auto& e : enc_) {
      out.push_back(&e.a);
      out.push_back(&e.b);
    }
    out.push_back(bottleneck_a_.get());
    out.push_back(bottleneck_b_.get());
    for (auto& d : dec_) {
      out.push_back(&d.up_conv);
      out.push_back(&d.a);
      out.push_back(&d.b);
    }
    return out;
  }

  void check_input(const Tensor4<S>& x) const {
    const int m = 1 << cfg_.depth;
    if (x.c() != cfg_.in_channels)
      throw ShapeError("network input " + x.shape_string() + " needs " +
                       std::to_string(cfg_.in_channels) + " channels");
    if (x.h() % m || x.w() % m || x.h() == 0 || x.w() == 0)
      throw ShapeError("network input " + x.shape_string() + ": height and width must be " +
                       "positive multiples of " + std::to_string(m));
  }

  NetworkConfig cfg_;
  std::vector<EncoderLevel> enc_;
  std::unique_ptr<ConvUnit<S>> bottleneck_a_, bottleneck_b_;
  std::vector<DecoderLevel> dec_;
  Conv2d<S> head_;
  std::vector<Tensor4<S>> skips_;
  Tensor4<S> logits_;
};

}  // namespace oul::nn
