#include "divswap/feature_map.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "divswap/error.hpp"
#include "divswap/file_util.hpp"

namespace divswap {
namespace {

constexpr char kMagic[4] = {'D', 'S', 'F', 'M'};
constexpr std::uint8_t kVersion = 0x01;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

}  // namespace

FeatureMap::FeatureMap(std::size_t channels, std::size_t height,
                       std::size_t width, std::vector<float> values)
    : channels_(channels), height_(height), width_(width),
      values_(std::move(values)) {
  if (channels_ == 0 || height_ == 0 || width_ == 0) {
    throw DimensionError("feature map dimensions must be positive");
  }
  if (values_.size() / channels_ / height_ != width_ ||
      values_.size() != channels_ * height_ * width_) {
    throw DimensionError("feature map payload has " +
                         std::to_string(values_.size()) + " values, expected " +
                         std::to_string(channels_ * height_ * width_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("non-finite feature value at index " +
                            std::to_string(i));
    }
  }
}

FeatureMap FeatureMap::zeros(std::size_t channels, std::size_t height,
                             std::size_t width) {
  return FeatureMap(channels, height, width,
                    std::vector<float>(channels * height * width, 0.0f));
}

void FeatureMap::require_non_negative() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < 0.0f) {
      throw ValidationError("negative value in post-ReLU map at index " +
                            std::to_string(i));
    }
  }
}

Plane channel_l2_map(const FeatureMap& map) {
  Plane plane{map.height(), map.width(),
              std::vector<double>(map.height() * map.width(), 0.0)};
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const auto ch = map.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const double v = ch[i];
      plane.values[i] += v * v;
    }
  }
  for (double& v : plane.values) v = std::sqrt(v);
  return plane;
}

std::vector<std::uint8_t> encode_feature_map(const FeatureMap& map) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (map.channels() > kMax || map.height() > kMax || map.width() > kMax) {
    throw DimensionError("feature map dimension exceeds 32-bit range");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kDsfmHeaderSize + 4 * map.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  for (float v : map.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureMap decode_feature_map(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDsfmHeaderSize) {
    throw FormatError("dsfm: file shorter than the 17-byte header");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw FormatError("dsfm: bad magic");
  }
  if (bytes[4] != kVersion) {
    throw FormatError("dsfm: unsupported version " + std::to_string(bytes[4]));
  }
  const std::uint64_t c = get_u32(bytes, 5);
  const std::uint64_t h = get_u32(bytes, 9);
  const std::uint64_t w = get_u32(bytes, 13);
  if (c == 0 || h == 0 || w == 0) {
    throw FormatError("dsfm: zero dimension in header");
  }
  const std::uint64_t payload_bytes = bytes.size() - kDsfmHeaderSize;
  const std::uint64_t n_values = payload_bytes / 4;
  // c*h fits in 64 bits; bound w before forming the full product.
  if (payload_bytes % 4 != 0 || c * h > n_values ||
      w > n_values / (c * h) || c * h * w != n_values) {
    throw FormatError("dsfm: payload size does not match header dimensions");
  }
  std::vector<float> values(static_cast<std::size_t>(c * h * w));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kDsfmHeaderSize + 4 * i));
  }
  return FeatureMap(c, h, w, std::move(values));
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_feature_map(bytes);
}

void save_feature_map(const FeatureMap& map, const std::filesystem::path& path) {
  const auto bytes = encode_feature_map(map);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                           bytes.size()));
}

}  // namespace divswap
