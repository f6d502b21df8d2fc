#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"

namespace oul::test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("oul_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline BinaryMask random_mask(int w, int h, Rng& rng, double p = 0.5) {
  BinaryMask m(w, h);
  for (auto& v : m.data()) v = rng.uniform() < p ? 1 : 0;
  return m;
}

}  // namespace oul::test
