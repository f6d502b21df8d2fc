#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/rng.hpp"
#include "oul/fusion/fusion.hpp"
#include "oul/fusion/target.hpp"
#include "oul/nn/adam.hpp"
#include "oul/nn/io.hpp"
#include "oul/nn/unet.hpp"
#include "oul/synthgen/dataset.hpp"

namespace oul::nn {

using Network = UNet<float>;

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  int batch_size = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  fusion::FusionMethod fusion = fusion::FusionMethod::NoFusion;

  bool operator==(const TrainConfig&) const = default;
};

inline void validate(const TrainConfig& t) {
  if (t.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(t.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (t.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(t.adam_beta1 >= 0.0 && t.adam_beta1 < 1.0) || !(t.adam_beta2 >= 0.0 && t.adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(t.adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
}

struct TrainLog {
  std::vector<double> epoch_loss;
  /// Ids of every sample the model was trained on.
  std::vector<std::string> sample_ids;
  double seconds = 0.0;
};

/// Builds a U-Net with He-normal weights drawn from `rng`.
inline Network build_unet(const NetworkConfig& cfg, Rng& rng) { return Network(cfg, rng); }

/// Trains `net` on `samples` for tcfg.epochs shuffled passes with Adam on the
/// mean pixelwise cross-entropy. Dropout is active throughout; the final
/// epoch's weights are kept.
///
/// Streams derived from tcfg.seed: "shuffle"/epoch orders samples,
/// "target"/epoch/sample draws NoFusion observers, "dropout"/step draws
/// dropout masks.
inline TrainLog train(Network& net, const std::vector<synth::SyntheticSample>& samples,
                      synth::ImageVariant variant, const TrainConfig& tcfg,
                      const std::function<void(int, double)>& on_epoch = {}) {
  validate(tcfg);
  if (samples.empty()) throw TrainingError("training set is empty");
  const auto t0 = std::chrono::steady_clock::now();
  const Rng root(tcfg.seed);
  fusion::TargetProvider targets(tcfg.fusion);
  Adam<float> adam(net.parameters(), {tcfg.learning_rate, tcfg.adam_beta1, tcfg.adam_beta2,
                                      tcfg.adam_eps});
  TrainLog log;
  for (const auto& s : samples) log.sample_ids.push_back(s.id);

  const std::size_t n = samples.size();
  const std::size_t plane = samples[0].gt.size();
  std::vector<std::size_t> order(n);
  std::vector<const GrayImage*> images;
  std::vector<std::uint8_t> labels;
  long step = 0;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = root.substream("shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    const Rng target_stream = root.substream("target", static_cast<std::uint64_t>(epoch));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(tcfg.batch_size));
      images.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = samples[order[k]];
        images.push_back(&synth::image_of(s, variant));
        Rng pick = target_stream.substream(order[k]);
        const BinaryMask& t = targets.target(s.id, s.observers, pick);
        if (t.size() != plane) throw ShapeError("sample " + s.id + ": target size mismatch");
        labels.insert(labels.end(), t.data().begin(), t.data().end());
      }
      const auto x = images_to_tensor<float>(images);
      Rng drop = root.substream("dropout", static_cast<std::uint64_t>(step++));
      net.zero_grad();
      net.forward(x, DropoutMode::Sample, &drop);
      const double loss = net.backward(labels);
      if (!std::isfinite(loss))
        throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
      adam.step();
      loss_sum += loss * static_cast<double>(end - start);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    log.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace oul::nn
