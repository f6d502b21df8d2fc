#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/raster.hpp"

namespace oul {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Cursor over a Netpbm-style ASCII header ('#' comments allowed).
class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out += static_cast<char>(bytes_[pos_++]);
    if (out.empty()) fail("unexpected end of header");
    return out;
  }

  long integer() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      fail("expected non-negative integer, got '" + t + "'");
    try {
      return std::stol(t);
    } catch (const std::exception&) {
      fail("integer out of range: '" + t + "'");
    }
  }

  /// Consumes the single whitespace byte that terminates the header.
  std::size_t end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing whitespace after header");
    return ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(name_ + ": " + why);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

struct PgmPayload {
  int width;
  int height;
  std::vector<std::uint8_t> pixels;
};

inline PgmPayload decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  HeaderReader h(bytes, name);
  if (h.token() != "P5") h.fail("not a binary PGM (expected magic P5)");
  const long w = h.integer();
  const long ht = h.integer();
  const long maxval = h.integer();
  if (w <= 0 || ht <= 0) h.fail("empty raster " + std::to_string(w) + "x" + std::to_string(ht));
  if (w > (1L << 20) || ht > (1L << 20)) h.fail("raster too large");
  if (maxval != 255) h.fail("unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  const std::size_t start = h.end_of_header();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(ht);
  if (bytes.size() - start < n) h.fail("truncated pixel data");
  return {static_cast<int>(w), static_cast<int>(ht),
          std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                    bytes.begin() + static_cast<std::ptrdiff_t>(start + n))};
}

inline std::vector<std::uint8_t> encode_pgm(int width, int height,
                                            const std::vector<std::uint8_t>& pixels) {
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

}  // namespace detail

/// Export rule for real intensities: round half away from zero, then clamp
/// to [0, 255].
inline std::uint8_t quantize_intensity(double v) {
  if (std::isnan(v)) throw DomainError("cannot quantize NaN intensity");
  const double r = std::round(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  auto p = detail::decode_pgm(detail::read_file_bytes(path), path.string());
  std::vector<double> data(p.pixels.begin(), p.pixels.end());
  return GrayImage(p.width, p.height, std::move(data));
}

/// Reads a mask stored as 0/255; any other gray level is a domain error.
inline BinaryMask read_mask(const std::filesystem::path& path) {
  auto p = detail::decode_pgm(detail::read_file_bytes(path), path.string());
  for (auto& v : p.pixels) {
    if (v != 0 && v != 255)
      throw DomainError(path.string() + ": mask pixel value " + std::to_string(v) +
                        " is neither 0 nor 255");
    v = v ? 1 : 0;
  }
  return BinaryMask(p.width, p.height, std::move(p.pixels));
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  std::vector<std::uint8_t> px(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) px[i] = quantize_intensity(img[i]);
  return detail::encode_pgm(img.width(), img.height(), px);
}

inline std::vector<std::uint8_t> encode_pgm(const BinaryMask& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  return detail::encode_pgm(mask.width(), mask.height(), px);
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_pgm(img));
}

inline void write_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_pgm(mask));
}

}  // namespace oul
