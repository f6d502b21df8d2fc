#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/pgm.hpp"
#include "oul/core/raster.hpp"

namespace oul {

/// Grayscale PFM: "Pf\n<w> <h>\n-1.0\n" followed by little-endian float32
/// rows, bottom row first.
inline std::vector<std::uint8_t> encode_pfm(const ProbMap& map) {
  if (map.empty()) throw DomainError("cannot encode an empty map as PFM");
  for (float v : map.data())
    if (!std::isfinite(v)) throw DomainError("PFM export rejects non-finite value");
  const std::string header = "Pf\n" + std::to_string(map.width()) + " " +
                             std::to_string(map.height()) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + map.size() * 4);
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      const auto bits = std::bit_cast<std::uint32_t>(map(x, y));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  return out;
}

inline ProbMap decode_pfm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  detail::HeaderReader h(bytes, name);
  if (h.token() != "Pf") h.fail("not a grayscale PFM (expected magic Pf)");
  const long w = h.integer();
  const long ht = h.integer();
  const std::string scale_tok = h.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    h.fail("bad scale field '" + scale_tok + "'");
  }
  if (w <= 0 || ht <= 0) h.fail("empty raster");
  if (w > (1L << 20) || ht > (1L << 20)) h.fail("raster too large");
  if (scale == 0.0 || !std::isfinite(scale)) h.fail("bad scale field '" + scale_tok + "'");
  const bool little = scale < 0.0;
  const std::size_t start = h.end_of_header();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(ht);
  if (bytes.size() - start < 4 * n) h.fail("truncated float data");
  ProbMap map(static_cast<int>(w), static_cast<int>(ht));
  std::size_t pos = start;
  for (long y = ht - 1; y >= 0; --y) {
    for (long x = 0; x < w; ++x, pos += 4) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(b)]) << shift;
      }
      map(static_cast<int>(x), static_cast<int>(y)) = std::bit_cast<float>(bits);
    }
  }
  return map;
}

inline void write_pfm(const ProbMap& map, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_pfm(map));
}

inline ProbMap read_pfm(const std::filesystem::path& path) {
  return decode_pfm(detail::read_file_bytes(path), path.string());
}

}  // namespace oul
