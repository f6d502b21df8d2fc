#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "metric_properties.hpp"
#include "oul/metrics/metrics.hpp"

namespace oul::metrics {
namespace {

std::vector<BinaryMask> split(int fg, int k) {
  std::vector<BinaryMask> obs;
  for (int j = 0; j < k; ++j) obs.emplace_back(1, 1, j < fg ? 1 : 0);
  return obs;
}

ProbMap map_of(std::vector<float> v) {
  const int n = static_cast<int>(v.size());
  return ProbMap(n, 1, std::move(v));
}

TEST(ExpertEntropy, Examples) {
  EXPECT_EQ(expert_entropy(split(5, 5))[0], 0.0f);
  EXPECT_EQ(expert_entropy(split(0, 5))[0], 0.0f);
  EXPECT_EQ(expert_entropy(split(2, 4))[0], 1.0f);
  EXPECT_NEAR(expert_entropy(split(2, 5))[0], 0.9710, 1e-4);
  EXPECT_THROW(expert_entropy(split(1, 1)), ShapeError);
  std::vector<BinaryMask> mismatched = {BinaryMask(1, 1), BinaryMask(2, 1)};
  EXPECT_THROW(expert_entropy(mismatched), ShapeError);
}

TEST(Wme, Examples) {
  EXPECT_NEAR(wme(map_of({0.3f, 0.3f, 0.3f}), map_of({0.2f, 0.0f, 1.0f})), 0.3, 1e-7);
  EXPECT_NEAR(wme(map_of({0.8f, 0.1f}), map_of({1.0f, 0.0f})), 0.8, 1e-7);
  const float h = static_cast<float>(binary_entropy(0.4));
  const auto hhat = map_of({h, 0.0f, h, h});
  const double expected = (3.0 * h * h) / (3.0 * h);
  EXPECT_NEAR(wme(hhat, hhat), expected, 1e-7);
}

TEST(Wme, UndefinedWeights) {
  EXPECT_THROW(wme(map_of({0.5f, 0.5f}), map_of({0.0f, 0.0f})), UndefinedWeightError);
  EXPECT_DOUBLE_EQ(wme(map_of({0.5f, 0.5f}), map_of({0.0f, 0.0f}), WmeNormalization::PixelCount),
                   0.0);
  EXPECT_NEAR(wme(map_of({0.8f, 0.1f}), map_of({1.0f, 0.0f}), WmeNormalization::PixelCount), 0.4,
              1e-7);
  EXPECT_THROW(wme(map_of({0.5f}), map_of({0.5f, 0.5f})), ShapeError);
}

TEST(MeanEntropy, Examples) {
  EXPECT_EQ(mean_entropy(ProbMap(4, 4, 0.0f)), 0.0);
  EXPECT_EQ(mean_entropy(ProbMap(3, 3, static_cast<float>(binary_entropy(0.5)))), 1.0);
  EXPECT_EQ(mean_entropy(map_of({1, 0, 1, 0})), 0.5);
}

TEST(Dice, Examples) {
  BinaryMask a(10, 1), b(10, 1);
  for (int i = 0; i < 4; ++i) a[static_cast<std::size_t>(i)] = 1;
  for (int i = 1; i < 7; ++i) b[static_cast<std::size_t>(i)] = 1;
  EXPECT_DOUBLE_EQ(dice(a, b), 0.6);
  EXPECT_EQ(dice(a, a), 1.0);
  BinaryMask c(10, 1);
  c[9] = 1;
  EXPECT_EQ(dice(a, c), 0.0);
  EXPECT_EQ(dice(BinaryMask(3, 3), BinaryMask(3, 3)), 1.0);
  EXPECT_THROW(dice(BinaryMask(3, 3), BinaryMask(3, 2)), ShapeError);
}

synth::SyntheticSample sample_with_split() {
  synth::SyntheticSample s;
  s.id = "s000";
  s.gt = BinaryMask(4, 1);
  s.gt[0] = s.gt[1] = 1;
  for (int j = 0; j < 5; ++j) {
    BinaryMask o = s.gt;
    if (j < 2) o[2] = 1;  // 2/5 split at pixel 2
    s.observers.push_back(o);
  }
  return s;
}

TEST(EvaluateSample, PerfectPrediction) {
  const auto s = sample_with_split();
  ProbMap prob(4, 1);
  for (std::size_t i = 0; i < 4; ++i) prob[i] = s.gt[i];
  const auto r = evaluate_maps(prob, ProbMap(4, 1, 0.0f), s);
  EXPECT_EQ(r.dice, 1.0);
  EXPECT_EQ(r.me, 0.0);
  EXPECT_EQ(r.wme, 0.0);
  EXPECT_EQ(r.n_pixels, 4u);
  EXPECT_NEAR(r.disagreement_mass, binary_entropy(0.4), 1e-6);

  auto unanimous = s;
  unanimous.observers.assign(5, s.gt);
  EXPECT_THROW(evaluate_maps(prob, ProbMap(4, 1, 0.0f), unanimous), UndefinedWeightError);
}

TEST(EvaluateSample, UniformPrediction) {
  const auto s = sample_with_split();
  const auto r = evaluate_maps(ProbMap(4, 1, 0.5f), ProbMap(4, 1, 1.0f), s);
  EXPECT_EQ(r.me, 1.0);
  EXPECT_EQ(r.wme, 1.0);
  EXPECT_DOUBLE_EQ(r.dice, 2.0 * 2 / (4 + 2));  // everything thresholds to foreground
}

TEST(EvaluateSample, McPredictionOverload) {
  const auto s = sample_with_split();
  nn::McPrediction pred;
  pred.mean = ProbMap(4, 1, 0.9f);
  pred.entropy = ProbMap(4, 1, static_cast<float>(binary_entropy(0.9)));
  const auto r = evaluate_sample(pred, s);
  EXPECT_NEAR(r.wme, binary_entropy(0.9), 1e-6);
  EXPECT_GE(r.me, 0.0);
  EXPECT_LE(r.me, 1.0);
}

TEST(MetricLaws, RandomizedProperties) {
  for (const auto& r : test::run_metric_properties(1000, 20240501)) {
    EXPECT_EQ(r.failures, 0) << r.name;
    EXPECT_EQ(r.cases, 1000) << r.name;
  }
}

}  // namespace
}  // namespace oul::metrics
