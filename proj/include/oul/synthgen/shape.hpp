#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/synthgen/params.hpp"

namespace oul::synth {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct ControlPoint {
  double angle_deg = 0.0;
  double radius_factor = 1.0;
};

/// Eight perimeter points around a center, in polar form relative to
/// base_radius. Image coordinates: x to the right, y downwards.
struct ShapeSpec {
  static constexpr int kPoints = 8;

  Point center;
  double base_radius = 0.0;
  std::array<ControlPoint, kPoints> control_points{};

  Point position(int i) const {
    const auto& c = control_points[static_cast<std::size_t>(i)];
    const double a = c.angle_deg * std::numbers::pi / 180.0;
    const double r = base_radius * c.radius_factor;
    return {center.x + r * std::cos(a), center.y + r * std::sin(a)};
  }

  /// Angles strictly increasing around the circle (one full turn at most).
  bool angles_ordered() const {
    for (int i = 0; i < kPoints; ++i) {
      const double a = control_points[static_cast<std::size_t>(i)].angle_deg;
      const double b = i + 1 < kPoints ? control_points[static_cast<std::size_t>(i + 1)].angle_deg
                                       : control_points[0].angle_deg + 360.0;
      if (!(b > a)) return false;
    }
    return true;
  }
};

/// Catmull-Rom tangents m_i = (P_{i+1} - P_{i-1}) / 2 of the closed point loop.
inline std::array<Point, ShapeSpec::kPoints> catmull_rom_tangents(const ShapeSpec& spec) {
  constexpr int n = ShapeSpec::kPoints;
  std::array<Point, n> m;
  for (int i = 0; i < n; ++i) {
    const Point a = spec.position((i + n - 1) % n), b = spec.position((i + 1) % n);
    m[static_cast<std::size_t>(i)] = {0.5 * (b.x - a.x), 0.5 * (b.y - a.y)};
  }
  return m;
}

/// Closed cubic Hermite curve through the control points with the given
/// tangents, sampled `samples_per_segment` times per segment. Vertex k*s is
/// control point k.
inline std::vector<Point> sample_hermite(const ShapeSpec& spec,
                                         const std::array<Point, ShapeSpec::kPoints>& tangents,
                                         int samples_per_segment = 256) {
  constexpr int n = ShapeSpec::kPoints;
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n * samples_per_segment));
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    const Point p0 = spec.position(i), p1 = spec.position(j);
    const Point m0 = tangents[static_cast<std::size_t>(i)], m1 = tangents[static_cast<std::size_t>(j)];
    for (int k = 0; k < samples_per_segment; ++k) {
      const double t = static_cast<double>(k) / samples_per_segment;
      const double t2 = t * t, t3 = t2 * t;
      const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
      const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
      out.push_back({h00 * p0.x + h10 * m0.x + h01 * p1.x + h11 * m1.x,
                     h00 * p0.y + h10 * m0.y + h01 * p1.y + h11 * m1.y});
    }
  }
  return out;
}

/// Closed uniform Catmull-Rom spline through the control points.
inline std::vector<Point> sample_outline(const ShapeSpec& spec, int samples_per_segment = 256) {
  return sample_hermite(spec, catmull_rom_tangents(spec), samples_per_segment);
}

namespace detail {

inline double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool segments_intersect(Point a, Point b, Point c, Point d) {
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.y, b.y) < std::min(c.y, d.y) || std::max(c.y, d.y) < std::min(a.y, b.y))
    return false;
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

/// Polar angle strictly increasing by exactly one turn: the polygon is
/// star-shaped around `center` and therefore simple.
inline bool star_shaped(const std::vector<Point>& poly, Point center) {
  double total = 0.0;
  double prev = std::atan2(poly.front().y - center.y, poly.front().x - center.x);
  for (std::size_t i = 1; i <= poly.size(); ++i) {
    const Point& q = poly[i % poly.size()];
    const double a = std::atan2(q.y - center.y, q.x - center.x);
    double step = a - prev;
    if (step <= -std::numbers::pi) step += 2.0 * std::numbers::pi;
    if (step > std::numbers::pi) step -= 2.0 * std::numbers::pi;
    if (!(step > 0.0)) return false;
    total += step;
    prev = a;
  }
  return std::abs(total - 2.0 * std::numbers::pi) < 1e-9;
}

}  // namespace detail

/// True when no two non-adjacent edges of the closed polygon cross.
inline bool is_simple_polygon(const std::vector<Point>& poly, Point center) {
  if (poly.size() < 3) return false;
  if (detail::star_shaped(poly, center)) return true;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (detail::segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Even-odd scanline fill sampled at pixel centers (x + 0.5, y + 0.5).
inline BinaryMask rasterize(const std::vector<Point>& poly, int width, int height) {
  BinaryMask mask(width, height);
  std::vector<double> xs;
  const std::size_t n = poly.size();
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = poly[i], b = poly[(i + 1) % n];
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
        xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int x1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
      for (int x = x0; x < x1; ++x) mask(x, y) = 1;
    }
  }
  return mask;
}

/// Number of 4-connected foreground components.
inline int count_components(const BinaryMask& mask) {
  std::vector<int> label(mask.size(), 0);
  std::vector<std::pair<int, int>> stack;
  int components = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const auto idx = static_cast<std::size_t>(y) * mask.width() + x;
      if (!mask[idx] || label[idx]) continue;
      ++components;
      stack.assign(1, {x, y});
      label[idx] = components;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        constexpr int dx[] = {1, -1, 0, 0};
        constexpr int dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= mask.width() || ny >= mask.height()) continue;
          const auto nidx = static_cast<std::size_t>(ny) * mask.width() + nx;
          if (mask[nidx] && !label[nidx]) {
            label[nidx] = components;
            stack.push_back({nx, ny});
          }
        }
      }
    }
  }
  return components;
}

/// Splines and rasterizes a shape. Returns false for outlines that are
/// degenerate: unordered angles, self-intersection, or a foreground that is
/// not one 4-connected component.
inline bool try_render_shape(const ShapeSpec& spec,
                             const std::array<Point, ShapeSpec::kPoints>& tangents, int size,
                             BinaryMask& out) {
  if (!spec.angles_ordered()) return false;
  const auto outline = sample_hermite(spec, tangents);
  if (!is_simple_polygon(outline, spec.center)) return false;
  out = rasterize(outline, size, size);
  return count_components(out) == 1;
}

inline constexpr int kMaxRetries = 10;

inline ShapeSpec circle_spec(const GenParams& params) {
  ShapeSpec spec;
  spec.center = {params.center(), params.center()};
  spec.base_radius = params.base_radius();
  for (int i = 0; i < ShapeSpec::kPoints; ++i)
    spec.control_points[static_cast<std::size_t>(i)] = {45.0 * i, 1.0};
  return spec;
}

/// Random ground-truth shape: equidistant circle points jittered in angle and
/// radius factor, splined and filled.
inline std::pair<ShapeSpec, BinaryMask> generate_gt(Rng& rng, const GenParams& params) {
  validate(params);
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    ShapeSpec spec = circle_spec(params);
    for (auto& cp : spec.control_points) {
      cp.angle_deg += rng.uniform(-params.gt_angle_jitter, params.gt_angle_jitter);
      cp.radius_factor = rng.uniform(params.gt_radius_range.lo, params.gt_radius_range.hi);
    }
    BinaryMask mask;
    if (try_render_shape(spec, catmull_rom_tangents(spec), params.image_size, mask))
      return {spec, std::move(mask)};
  }
  throw GenerationError("ground truth outline degenerate after " +
                        std::to_string(kMaxRetries) + " retries");
}

/// Observer disagreement is confined to pixel centers at x >= this limit.
inline double locality_limit(const ShapeSpec& gt) { return gt.center.x - gt.base_radius / 2.0; }

inline bool agrees_left_of(const BinaryMask& a, const BinaryMask& b, double limit) {
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width() && x + 0.5 < limit; ++x)
      if (a(x, y) != b(x, y)) return false;
  return true;
}

/// Indices of the three control points with the largest x coordinate.
inline std::array<int, 3> rightmost_points(const ShapeSpec& spec) {
  std::array<int, ShapeSpec::kPoints> idx{};
  for (int i = 0; i < ShapeSpec::kPoints; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return spec.position(a).x > spec.position(b).x; });
  return {idx[0], idx[1], idx[2]};
}

/// One simulated annotation: the three rightmost points of `gt` move by an
/// angle jitter and an additive radius offset proportional to their distance
/// from the center.
inline std::pair<ShapeSpec, BinaryMask> generate_observer(const ShapeSpec& gt, Rng& rng,
                                                          const GenParams& params) {
  BinaryMask gt_mask;
  if (!try_render_shape(gt, catmull_rom_tangents(gt), params.image_size, gt_mask))
    throw GenerationError("observer: ground-truth outline is degenerate");
  const auto movers = rightmost_points(gt);
  const auto gt_tangents = catmull_rom_tangents(gt);
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    ShapeSpec spec = gt;
    for (int i : movers) {
      auto& cp = spec.control_points[static_cast<std::size_t>(i)];
      cp.angle_deg += rng.uniform(-params.obs_angle_jitter, params.obs_angle_jitter);
      const double d = gt.base_radius * cp.radius_factor;
      const double offset = rng.uniform(-params.obs_radius_jitter * d, params.obs_radius_jitter * d);
      cp.radius_factor = (d + offset) / gt.base_radius;
    }
    // Unmoved points keep their ground-truth tangents, so the outline only
    // changes on segments adjacent to a moved point.
    auto tangents = gt_tangents;
    const auto moved_tangents = catmull_rom_tangents(spec);
    for (int i : movers) tangents[static_cast<std::size_t>(i)] = moved_tangents[static_cast<std::size_t>(i)];
    BinaryMask mask;
    if (try_render_shape(spec, tangents, params.image_size, mask) &&
        agrees_left_of(mask, gt_mask, locality_limit(gt)))
      return {spec, std::move(mask)};
  }
  throw GenerationError("observer outline degenerate after " + std::to_string(kMaxRetries) +
                        " retries");
}

inline std::vector<BinaryMask> generate_observers(const ShapeSpec& gt, Rng& rng,
                                                  const GenParams& params) {
  validate(params);
  std::vector<BinaryMask> out;
  out.reserve(static_cast<std::size_t>(params.observers));
  for (int k = 0; k < params.observers; ++k) {
    Rng sub = rng.substream(static_cast<std::uint64_t>(k));
    out.push_back(generate_observer(gt, sub, params).second);
  }
  return out;
}

}  // namespace oul::synth
