#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "divswap/feature_map.hpp"

namespace divswap {

/// 8-bit RGB image, row-major, interleaved.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t channel) const {
    return pixels[(y * width + x) * 3 + channel];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Mean of |a - b| / 255 over all channel values, in [0, 1].
double pixel_distance(const RgbImage& a, const RgbImage& b);

/// 1 - cosine similarity of the flattened maps, in [0, 2]. Two all-zero maps
/// are at distance 0; a zero map against a non-zero one is at distance 1.
double feature_distance(const FeatureMap& a, const FeatureMap& b);

enum class DistanceKind { kPixel, kFeature };

struct DiversityReport {
  DistanceKind kind = DistanceKind::kFeature;
  std::size_t n_outputs = 0;
  std::size_t n_pairs = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;  // population standard deviation over pairs
};

/// Aggregates over every unordered pair. `workers` = 0 uses the hardware
/// concurrency; the result does not depend on it.
DiversityReport pairwise_report(std::span<const RgbImage> images, unsigned workers = 0);
DiversityReport pairwise_report(std::span<const FeatureMap> maps, unsigned workers = 0);

/// Builds a report from already computed pair distances.
DiversityReport summarize_distances(DistanceKind kind, std::size_t n_outputs,
                                    std::span<const double> distances);

std::string format_report_text(const DiversityReport& report);
std::string format_report_json(const DiversityReport& report);

/// Channel-norm heat map: min-max scaled to [0, 255] (a flat map scales to
/// zero), bilinearly resized, replicated into grey RGB.
RgbImage heatmap(const FeatureMap& map, std::size_t out_width, std::size_t out_height);

RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace divswap
