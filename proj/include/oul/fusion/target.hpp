#pragma once

#include <map>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/fusion/fusion.hpp"
#include "oul/fusion/staple.hpp"

namespace oul::fusion {

/// Fuses observer masks with one of the four deterministic methods.
inline BinaryMask fuse(std::span<const BinaryMask> observers, FusionMethod method) {
  switch (method) {
    case FusionMethod::Majority: return majority_vote(observers);
    case FusionMethod::Staple: return staple(observers).first;
    case FusionMethod::Union: return union_of(observers);
    case FusionMethod::Intersection: return intersection_of(observers);
    case FusionMethod::NoFusion: break;
  }
  throw FusionError("fuse: nofusion has no single fused mask");
}

/// Training targets for one label policy. Fused targets are computed once
/// per sample and cached; NoFusion draws a uniformly random observer from the
/// caller's stream on every call.
class TargetProvider {
 public:
  explicit TargetProvider(FusionMethod method) : method_(method) {}

  FusionMethod method() const noexcept { return method_; }

  const BinaryMask& target(const std::string& sample_id,
                           const std::vector<BinaryMask>& observers, Rng& rng) {
    if (observers.empty()) throw FusionError("training_target: sample has no observers");
    if (method_ == FusionMethod::NoFusion)
      return observers[static_cast<std::size_t>(rng.below(observers.size()))];
    auto it = cache_.find(sample_id);
    if (it == cache_.end()) it = cache_.emplace(sample_id, fuse(observers, method_)).first;
    return it->second;
  }

 private:
  FusionMethod method_;
  std::map<std::string, BinaryMask> cache_;
};

}  // namespace oul::fusion
