#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/core/pgm.hpp"
#include "oul/nn/unet.hpp"

namespace oul::nn {

/// Checkpoint layout, all integers and floats little-endian:
///
///   "OULM"                      4-byte magic
///   u32 version                 kCheckpointVersion
///   i32 depth, i32 base_filters, i32 in_channels, i32 out_classes
///   f64 dropout_p
///   u32 tensor_count
///   tensor_count x { u32 length; length x f32 }   in UNet parameter order
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'O', 'U', 'L', 'M'};

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto b = std::bit_cast<std::uint64_t>(v);
    u32(static_cast<std::uint32_t>(b));
    u32(static_cast<std::uint32_t>(b >> 32));
  }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& b, std::string name) : b_(b), name_(std::move(name)) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError(name_ + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return std::bit_cast<double>(lo | (hi << 32));
  }
  bool at_end() const noexcept { return pos_ == b_.size(); }
  const std::string& name() const noexcept { return name_; }
  std::size_t position() const noexcept { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& b_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename S>
std::vector<std::uint8_t> encode_checkpoint(UNet<S>& net) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  const auto& cfg = net.config();
  w.i32(cfg.depth);
  w.i32(cfg.base_filters);
  w.i32(cfg.in_channels);
  w.i32(cfg.out_classes);
  w.f64(cfg.dropout_p);
  const auto params = net.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.u32(static_cast<std::uint32_t>(p->size()));
    for (S v : p->value) w.f32(static_cast<float>(v));
  }
  return std::move(w.bytes);
}

template <typename S = float>
UNet<S> decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  detail::ByteReader r(bytes, name);
  r.need(4);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError(name + ": bad magic (not an OULM checkpoint)");
  r.skip(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError(name + ": checkpoint version " + std::to_string(version) +
                      " is not supported (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
  NetworkConfig cfg;
  cfg.depth = r.i32();
  cfg.base_filters = r.i32();
  cfg.in_channels = r.i32();
  cfg.out_classes = r.i32();
  cfg.dropout_p = r.f64();
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    throw FormatError(name + ": invalid network config: " + e.what());
  }
  UNet<S> net(cfg);
  auto params = net.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size())
    throw FormatError(name + ": " + std::to_string(count) + " tensors, architecture needs " +
                      std::to_string(params.size()));
  for (auto* p : params) {
    const std::uint32_t len = r.u32();
    if (len != p->size())
      throw FormatError(name + ": tensor " + p->name + " has " + std::to_string(len) +
                        " values, expected " + std::to_string(p->size()));
    r.need(4 * static_cast<std::size_t>(len));
    for (auto& v : p->value) v = static_cast<S>(r.f32());
  }
  if (!r.at_end()) throw FormatError(name + ": trailing bytes after last tensor");
  return net;
}

template <typename S>
void save_model(UNet<S>& net, const std::filesystem::path& path) {
  oul::detail::write_file_bytes(path, encode_checkpoint(net));
}

template <typename S = float>
UNet<S> load_model(const std::filesystem::path& path) {
  return decode_checkpoint<S>(oul::detail::read_file_bytes(path), path.string());
}

}  // namespace oul::nn
