// Full-size training check: 100 epochs on 100 unperturbed samples.

#include <gtest/gtest.h>

#include "oul/metrics/metrics.hpp"
#include "oul/nn/mc.hpp"
#include "oul/nn/train.hpp"
#include "oul/synthgen/dataset.hpp"

namespace oul::nn {
namespace {

TEST(TrainSlow, MajorityTargetsReachTrainingDice) {
  synth::GenParams g;
  g.image_size = 64;
  g.seed = 1001;
  const auto samples = synth::generate_samples(g);
  Rng init = Rng(1002).substream("init");
  auto net = build_unet(NetworkConfig{}, init);
  TrainConfig tcfg;
  tcfg.seed = 1002;
  tcfg.fusion = fusion::FusionMethod::Majority;
  const auto log = train(net, samples, synth::ImageVariant::Unperturbed, tcfg);
  std::printf("trained in %.1f s, final loss %.6f\n", log.seconds, log.epoch_loss.back());

  double dice = 0;
  for (const auto& s : samples) {
    const auto prob = predict_deterministic(net, s.image_unperturbed);
    dice += metrics::dice(metrics::threshold(prob), fusion::majority_vote(s.observers));
  }
  dice /= static_cast<double>(samples.size());
  std::printf("mean training Dice %.4f\n", dice);
  EXPECT_GE(dice, 0.95);
}

}  // namespace
}  // namespace oul::nn
