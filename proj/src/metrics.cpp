#include "divswap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <string>

#include "divswap/error.hpp"
#include "parallel.hpp"

namespace divswap {
namespace {

const char* kind_name(DistanceKind kind) {
  return kind == DistanceKind::kPixel ? "pixel" : "feature";
}

template <class Item, class Distance>
DiversityReport pairwise(DistanceKind kind, std::span<const Item> items,
                         unsigned workers, Distance distance) {
  if (items.size() < 2) {
    throw ArgumentError("diversity needs at least two outputs, got " +
                        std::to_string(items.size()));
  }
  const std::size_t n = items.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> distances(pairs.size());
  detail::parallel_for(pairs.size(), workers, [&](std::size_t p, unsigned) {
    distances[p] = distance(items[pairs[p].first], items[pairs[p].second]);
  });
  return summarize_distances(kind, n, distances);
}

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace

RgbImage::RgbImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (width == 0 || height == 0) throw DimensionError("image dimensions must be positive");
  if (pixels.size() != 3 * width * height) {
    throw DimensionError("image payload does not hold 3*width*height bytes");
  }
}

double pixel_distance(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionError("pixel_distance: images differ in size (" +
                         std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    total += static_cast<std::uint64_t>(std::abs(int{a.pixels[i]} - int{b.pixels[i]}));
  }
  return static_cast<double>(total) / (255.0 * static_cast<double>(a.pixels.size()));
}

double feature_distance(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) throw DimensionError("feature_distance: map shapes differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double x = va[i];
    const double y = vb[i];
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 && bb == 0.0) return 0.0;
  if (aa == 0.0 || bb == 0.0) return 1.0;
  const double cosine = std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
  // Exact equality must give exactly zero despite rounding in the cosine.
  if (std::equal(va.begin(), va.end(), vb.begin())) return 0.0;
  return 1.0 - cosine;
}

DiversityReport pairwise_report(std::span<const RgbImage> images, unsigned workers) {
  return pairwise(DistanceKind::kPixel, images, workers,
                  [](const RgbImage& a, const RgbImage& b) { return pixel_distance(a, b); });
}

DiversityReport pairwise_report(std::span<const FeatureMap> maps, unsigned workers) {
  return pairwise(DistanceKind::kFeature, maps, workers,
                  [](const FeatureMap& a, const FeatureMap& b) {
                    return feature_distance(a, b);
                  });
}

DiversityReport summarize_distances(DistanceKind kind, std::size_t n_outputs,
                                    std::span<const double> distances) {
  if (distances.size() != n_outputs * (n_outputs - 1) / 2 || distances.empty()) {
    throw ArgumentError("distance count does not match C(n_outputs, 2)");
  }
  DiversityReport report;
  report.kind = kind;
  report.n_outputs = n_outputs;
  report.n_pairs = distances.size();
  report.mean = compensated_sum(distances) / static_cast<double>(distances.size());
  const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
  report.min = *lo;
  report.max = *hi;
  std::vector<double> squares(distances.size());
  std::transform(distances.begin(), distances.end(), squares.begin(),
                 [&](double d) { return (d - report.mean) * (d - report.mean); });
  report.stddev = std::sqrt(compensated_sum(squares) / static_cast<double>(squares.size()));
  return report;
}

std::string format_report_text(const DiversityReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "kind       %s\n"
                "n_outputs  %zu\n"
                "n_pairs    %zu\n"
                "mean       %.9g\n"
                "min        %.9g\n"
                "max        %.9g\n"
                "stddev     %.9g\n",
                kind_name(r.kind), r.n_outputs, r.n_pairs, r.mean, r.min, r.max,
                r.stddev);
  return buf;
}

std::string format_report_json(const DiversityReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(r.kind);
  j["n_outputs"] = r.n_outputs;
  j["n_pairs"] = r.n_pairs;
  j["mean"] = r.mean;
  j["min"] = r.min;
  j["max"] = r.max;
  j["stddev"] = r.stddev;
  return j.dump();
}

RgbImage heatmap(const FeatureMap& map, std::size_t out_width, std::size_t out_height) {
  if (out_width == 0 || out_height == 0) {
    throw ArgumentError("heat map output size must be positive");
  }
  Plane plane = channel_l2_map(map);
  const auto [lo_it, hi_it] = std::minmax_element(plane.values.begin(), plane.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  for (double& v : plane.values) v = hi > lo ? (v - lo) / (hi - lo) * 255.0 : 0.0;

  // Bilinear with pixel-centre alignment, edges clamped.
  auto source_coord = [](std::size_t dst, std::size_t n_dst, std::size_t n_src,
                         std::size_t& i0, std::size_t& i1, double& t) {
    double x = (static_cast<double>(dst) + 0.5) * static_cast<double>(n_src) /
                   static_cast<double>(n_dst) - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(n_src - 1));
    i0 = static_cast<std::size_t>(std::floor(x));
    i1 = std::min(i0 + 1, n_src - 1);
    t = x - static_cast<double>(i0);
  };

  std::vector<std::uint8_t> pixels(3 * out_width * out_height);
  for (std::size_t y = 0; y < out_height; ++y) {
    std::size_t y0, y1;
    double ty;
    source_coord(y, out_height, plane.height, y0, y1, ty);
    for (std::size_t x = 0; x < out_width; ++x) {
      std::size_t x0, x1;
      double tx;
      source_coord(x, out_width, plane.width, x0, x1, tx);
      const double top = plane.at(y0, x0) * (1.0 - tx) + plane.at(y0, x1) * tx;
      const double bottom = plane.at(y1, x0) * (1.0 - tx) + plane.at(y1, x1) * tx;
      const double v = std::clamp(std::round(top * (1.0 - ty) + bottom * ty), 0.0, 255.0);
      const auto g = static_cast<std::uint8_t>(v);
      std::uint8_t* px = pixels.data() + 3 * (y * out_width + x);
      px[0] = px[1] = px[2] = g;
    }
  }
  return RgbImage(out_width, out_height, std::move(pixels));
}

}  // namespace divswap
