#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"

namespace oul::fusion {

/// Label policy used to derive a training target from observer annotations.
enum class FusionMethod { NoFusion, Majority, Staple, Union, Intersection };

inline constexpr std::array<FusionMethod, 5> kAllMethods = {
    FusionMethod::NoFusion, FusionMethod::Majority, FusionMethod::Staple, FusionMethod::Union,
    FusionMethod::Intersection};

inline std::string_view to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::NoFusion: return "nofusion";
    case FusionMethod::Majority: return "majority";
    case FusionMethod::Staple: return "staple";
    case FusionMethod::Union: return "union";
    case FusionMethod::Intersection: return "intersection";
  }
  return "unknown";
}

inline FusionMethod parse_method(std::string_view s) {
  for (auto m : kAllMethods)
    if (to_string(m) == s) return m;
  throw ConfigError("unknown fusion method '" + std::string(s) +
                    "' (expected nofusion|majority|staple|union|intersection)");
}

namespace detail {

inline void check_masks(std::span<const BinaryMask> masks, std::size_t min_count,
                        const char* op) {
  if (masks.size() < min_count)
    throw FusionError(std::string(op) + ": needs at least " + std::to_string(min_count) +
                      " masks, got " + std::to_string(masks.size()));
  for (const auto& m : masks) require_same_shape(masks[0], m, op);
}

/// Per-pixel foreground vote counts.
inline std::vector<int> vote_counts(std::span<const BinaryMask> masks) {
  std::vector<int> votes(masks[0].size(), 0);
  for (const auto& m : masks)
    for (std::size_t i = 0; i < m.size(); ++i) votes[i] += m[i] != 0;
  return votes;
}

template <typename Pred>
BinaryMask threshold_votes(std::span<const BinaryMask> masks, Pred keep) {
  const auto votes = vote_counts(masks);
  BinaryMask out(masks[0].width(), masks[0].height());
  for (std::size_t i = 0; i < votes.size(); ++i) out[i] = keep(votes[i]) ? 1 : 0;
  return out;
}

}  // namespace detail

/// Foreground iff at least ceil((k+1)/2) of k masks vote foreground; exact
/// ties with even k resolve to background.
inline BinaryMask majority_vote(std::span<const BinaryMask> masks) {
  detail::check_masks(masks, 1, "majority_vote");
  const int k = static_cast<int>(masks.size());
  const int needed = (k + 2) / 2;
  return detail::threshold_votes(masks, [needed](int v) { return v >= needed; });
}

inline BinaryMask union_of(std::span<const BinaryMask> masks) {
  detail::check_masks(masks, 1, "union");
  return detail::threshold_votes(masks, [](int v) { return v > 0; });
}

inline BinaryMask intersection_of(std::span<const BinaryMask> masks) {
  detail::check_masks(masks, 1, "intersection");
  const int k = static_cast<int>(masks.size());
  return detail::threshold_votes(masks, [k](int v) { return v == k; });
}

}  // namespace oul::fusion
