#pragma once

#include <cstdint>
#include <string>

#include "oul/core/error.hpp"

namespace oul::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

/// Parameters of the synthetic multi-observer dataset. Angles in degrees,
/// lengths in pixels, intensities on the 0..255 scale.
struct GenParams {
  int image_size = 128;
  int count = 100;
  int observers = 5;
  double gt_angle_jitter = 15.0;
  Range gt_radius_range{0.75, 1.5};
  double obs_angle_jitter = 10.0;
  /// Additive radius offset, as a fraction of the point's distance to center.
  double obs_radius_jitter = 0.4;
  Range max_value_range{30.0, 255.0};
  Range blur_sigma_range{2.0, 8.0};
  double noise_factor = 0.15;
  Range obs_intensity_range{50.0, 255.0};
  Range decay_range{0.5, 6.5};
  std::uint64_t seed = 0;

  double base_radius() const { return image_size / 4.0; }
  double center() const { return image_size / 2.0; }

  bool operator==(const GenParams&) const = default;
};

inline void validate(const GenParams& p) {
  auto range_ok = [](const Range& r, double min, double max) {
    return r.lo <= r.hi && r.lo >= min && r.hi <= max;
  };
  if (p.image_size < 32) throw ConfigError("image_size must be >= 32");
  if (p.count < 0) throw ConfigError("count must be >= 0");
  if (p.observers < 1) throw ConfigError("observers must be >= 1");
  if (p.gt_angle_jitter < 0.0 || p.gt_angle_jitter >= 22.5)
    throw ConfigError("gt_angle_jitter must lie in [0, 22.5) degrees");
  if (!range_ok(p.gt_radius_range, 0.1, 1.9)) throw ConfigError("bad gt_radius_range");
  if (p.obs_angle_jitter < 0.0 || p.obs_angle_jitter >= 22.5)
    throw ConfigError("obs_angle_jitter must lie in [0, 22.5) degrees");
  if (p.obs_radius_jitter < 0.0 || p.obs_radius_jitter >= 1.0)
    throw ConfigError("obs_radius_jitter must lie in [0, 1)");
  if (!range_ok(p.max_value_range, 0.0, 255.0)) throw ConfigError("bad max_value_range");
  if (!range_ok(p.blur_sigma_range, 0.0, 64.0)) throw ConfigError("bad blur_sigma_range");
  if (p.noise_factor < 0.0) throw ConfigError("noise_factor must be >= 0");
  if (!range_ok(p.obs_intensity_range, 0.0, 255.0)) throw ConfigError("bad obs_intensity_range");
  if (!range_ok(p.decay_range, 0.0, 50.0)) throw ConfigError("bad decay_range");
}

}  // namespace oul::synth
