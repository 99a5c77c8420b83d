#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace divswap {

/// Dense C x H x W activation tensor, channel-major then row-major.
///
/// Values are immutable after construction and always finite; construction
/// throws ValidationError otherwise.
class FeatureMap {
 public:
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
             std::vector<float> values);

  /// All-zero map.
  static FeatureMap zeros(std::size_t channels, std::size_t height,
                          std::size_t width);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }

  std::span<const float> values() const { return values_; }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(values_).subspan(c * height_ * width_,
                                                   height_ * width_);
  }

  float at(std::size_t c, std::size_t h, std::size_t w) const {
    return values_[(c * height_ + h) * width_ + w];
  }

  bool same_shape(const FeatureMap& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  /// Throws ValidationError if any value is negative. Only meaningful for
  /// maps the caller knows to be post-ReLU activations.
  void require_non_negative() const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<float> values_;
};

/// H x W plane of doubles, row-major.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t h, std::size_t w) const { return values[h * width + w]; }
};

/// Per-location Euclidean norm across channels.
Plane channel_l2_map(const FeatureMap& map);

// .dsfm file format: "DSFM", version byte 0x01, little-endian u32 C, H, W,
// then C*H*W little-endian binary32 values in channel-major order.
inline constexpr std::size_t kDsfmHeaderSize = 17;

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& map);
FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes);

FeatureMap load_feature_map(const std::filesystem::path& path);
void save_feature_map(const FeatureMap& map, const std::filesystem::path& path);

}  // namespace divswap
