#pragma once

#include <span>
#include <string>
#include <vector>

#include "oul/core/entropy.hpp"
#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/fusion/fusion.hpp"
#include "oul/nn/mc.hpp"
#include "oul/synthgen/dataset.hpp"

namespace oul::metrics {

/// Per-pixel base-2 entropy of the observer vote fraction.
inline ProbMap expert_entropy(std::span<const BinaryMask> observers) {
  if (observers.size() < 2) throw ShapeError("expert_entropy: needs at least 2 observers");
  for (const auto& o : observers) require_same_shape(observers[0], o, "expert_entropy");
  const double k = static_cast<double>(observers.size());
  ProbMap out(observers[0].width(), observers[0].height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int votes = 0;
    for (const auto& o : observers) votes += o[i] != 0;
    out[i] = static_cast<float>(binary_entropy(votes / k));
  }
  return out;
}

enum class WmeNormalization {
  /// sum(Hhat * H) / sum(Hhat): a weighted mean, in [min H, max H].
  DisagreementMass,
  /// sum(Hhat * H) / N over all N pixels.
  PixelCount,
};

/// Predictive entropy averaged with expert-disagreement entropy as weights.
inline double wme(const ProbMap& pred_entropy, const ProbMap& expert,
                  WmeNormalization norm = WmeNormalization::DisagreementMass) {
  require_same_shape(pred_entropy, expert, "wme");
  if (pred_entropy.empty()) throw ShapeError("wme: empty maps");
  double num = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < expert.size(); ++i) {
    num += double(expert[i]) * double(pred_entropy[i]);
    mass += expert[i];
  }
  if (norm == WmeNormalization::PixelCount) return num / static_cast<double>(expert.size());
  if (!(mass > 0.0))
    throw UndefinedWeightError("wme: expert entropy is zero everywhere, weights undefined");
  return num / mass;
}

inline double mean_entropy(const ProbMap& pred_entropy) {
  if (pred_entropy.empty()) throw ShapeError("mean_entropy: empty map");
  double s = 0.0;
  for (float v : pred_entropy.data()) s += v;
  return s / static_cast<double>(pred_entropy.size());
}

/// 2|A & B| / (|A| + |B|); two empty masks score 1.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "dice");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    inter += x && y;
    na += x;
    nb += y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

inline BinaryMask threshold(const ProbMap& prob, float level = 0.5f) {
  BinaryMask m(prob.width(), prob.height());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = prob[i] >= level ? 1 : 0;
  return m;
}

struct MetricsReport {
  std::string sample_id;
  double wme = 0.0;
  double me = 0.0;
  double dice = 0.0;
  std::size_t n_pixels = 0;
  double disagreement_mass = 0.0;
};

/// Scores one prediction against a sample's ground truth and observers from
/// its mean foreground probability and predictive entropy maps.
inline MetricsReport evaluate_maps(const ProbMap& mean_prob, const ProbMap& pred_entropy,
                                   const synth::SyntheticSample& sample,
                                   WmeNormalization norm = WmeNormalization::DisagreementMass) {
  require_same_shape(mean_prob, sample.gt, "evaluate_sample");
  require_same_shape(pred_entropy, sample.gt, "evaluate_sample");
  const ProbMap hhat = expert_entropy(sample.observers);
  MetricsReport r;
  r.sample_id = sample.id;
  r.n_pixels = sample.gt.size();
  for (float v : hhat.data()) r.disagreement_mass += v;
  r.wme = wme(pred_entropy, hhat, norm);
  r.me = mean_entropy(pred_entropy);
  r.dice = dice(threshold(mean_prob), sample.gt);
  return r;
}

inline MetricsReport evaluate_sample(const nn::McPrediction& pred,
                                     const synth::SyntheticSample& sample,
                                     WmeNormalization norm = WmeNormalization::DisagreementMass) {
  return evaluate_maps(pred.mean, pred.entropy, sample, norm);
}

}  // namespace oul::metrics
