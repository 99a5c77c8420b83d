#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "divswap/feature_map.hpp"

namespace divswap::testing {

inline FeatureMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h,
                             std::size_t w, bool relu = false) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(c * h * w);
  for (float& x : v) {
    x = normal(rng);
    if (relu && x < 0.0f) x = 0.0f;
  }
  return FeatureMap(c, h, w, std::move(v));
}

inline FeatureMap scaled(const FeatureMap& m, float lambda) {
  std::vector<float> v(m.values().begin(), m.values().end());
  for (float& x : v) x *= lambda;
  return FeatureMap(m.channels(), m.height(), m.width(), std::move(v));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("divswap_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace divswap::testing
