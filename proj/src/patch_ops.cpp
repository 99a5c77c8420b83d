#include "divswap/patch_ops.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "divswap/error.hpp"
#include "match_internal.hpp"

namespace divswap {

PatchLayout PatchLayout::of(std::size_t channels, std::size_t height,
                            std::size_t width, int patch_size, int stride) {
  if (patch_size < 1) throw ArgumentError("patch size must be >= 1");
  if (stride < 1) throw ArgumentError("stride must be >= 1");
  const auto k = static_cast<std::size_t>(patch_size);
  const auto s = static_cast<std::size_t>(stride);
  if (k > height || k > width) {
    throw DimensionError("patch size " + std::to_string(k) +
                         " exceeds map extent " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  return PatchLayout{k, s, (height - k) / s + 1, (width - k) / s + 1,
                     channels, height, width};
}

PatchGrid::PatchGrid(PatchLayout layout, std::vector<float> rows)
    : layout_(layout), data_(std::move(rows)) {
  if (layout_.n_patches() == 0 || layout_.dim() == 0) {
    throw ArgumentError("patch grid must be non-empty");
  }
  if (data_.size() != layout_.n_patches() * layout_.dim()) {
    throw DimensionError("patch grid payload does not match its layout");
  }
}

PatchGrid extract_patches(const FeatureMap& map, int patch_size, int stride) {
  const auto layout = PatchLayout::of(map.channels(), map.height(), map.width(),
                                      patch_size, stride);
  const std::size_t k = layout.patch_size;
  std::vector<float> rows;
  rows.reserve(layout.n_patches() * layout.dim());
  for (std::size_t gr = 0; gr < layout.grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < layout.grid_cols; ++gc) {
      const std::size_t y0 = gr * layout.stride;
      const std::size_t x0 = gc * layout.stride;
      for (std::size_t c = 0; c < layout.channels; ++c) {
        const auto plane = map.channel(c);
        for (std::size_t dy = 0; dy < k; ++dy) {
          const float* src = plane.data() + (y0 + dy) * map.width() + x0;
          rows.insert(rows.end(), src, src + k);
        }
      }
    }
  }
  return PatchGrid(layout, std::move(rows));
}

std::vector<double> patch_norms(const PatchGrid& grid) {
  std::vector<double> norms(grid.n_patches());
  for (std::size_t i = 0; i < norms.size(); ++i) {
    double acc = 0.0;
    for (float v : grid.row(i)) acc += static_cast<double>(v) * v;
    norms[i] = std::sqrt(acc);
  }
  return norms;
}

namespace detail {

double dot_sequential(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return acc;
}

}  // namespace detail

MatchResult ncc_match_oracle(const PatchGrid& content,
                             const PatchGrid& style_normalized) {
  if (content.dim() != style_normalized.dim()) {
    throw DimensionError("content and style patch dimensions differ");
  }
  const std::size_t n_c = content.n_patches();
  const std::size_t n_s = style_normalized.n_patches();
  const std::size_t d = content.dim();
  const float* c_data = content.data().data();
  const float* s_data = style_normalized.data().data();

  MatchResult result;
  result.assignments.resize(n_c);
  result.scores.resize(n_c);
  for (std::size_t i = 0; i < n_c; ++i) {
    std::uint32_t best_j = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < n_s; ++j) {
      double score = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        score += static_cast<double>(c_data[i * d + k]) *
                 static_cast<double>(s_data[j * d + k]);
      }
      if (j == 0 || score > best) {
        best = score;
        best_j = static_cast<std::uint32_t>(j);
      }
    }
    result.assignments[i] = best_j;
    result.scores[i] = best;
  }
  return result;
}

FeatureMap reconstruct(const MatchResult& match, const PatchGrid& style_original,
                       const PatchLayout& layout,
                       const ReconstructOptions& options) {
  if (match.assignments.size() != layout.n_patches() ||
      match.scores.size() != match.assignments.size()) {
    throw DimensionError("match has " + std::to_string(match.assignments.size()) +
                         " entries but the content layout has " +
                         std::to_string(layout.n_patches()) + " patches");
  }
  if (style_original.layout().channels != layout.channels ||
      style_original.layout().patch_size != layout.patch_size) {
    throw DimensionError("style patches do not match the content layout");
  }
  const FeatureMap* fill = options.uncovered_fill;
  if (fill != nullptr &&
      (fill->channels() != layout.channels || fill->height() != layout.height ||
       fill->width() != layout.width)) {
    throw DimensionError("uncovered-fill map does not match the content layout");
  }
  for (std::uint32_t j : match.assignments) {
    if (j >= style_original.n_patches()) {
      throw ConsistencyError("style index " + std::to_string(j) +
                             " out of range (" +
                             std::to_string(style_original.n_patches()) + " patches)");
    }
  }

  const std::size_t k = layout.patch_size;
  const std::size_t hw = layout.height * layout.width;
  std::vector<double> sums(layout.channels * hw, 0.0);
  std::vector<std::uint32_t> counts(hw, 0);

  for (std::size_t i = 0; i < layout.n_patches(); ++i) {
    const std::size_t y0 = (i / layout.grid_cols) * layout.stride;
    const std::size_t x0 = (i % layout.grid_cols) * layout.stride;
    const auto patch = style_original.row(match.assignments[i]);
    std::size_t p = 0;
    for (std::size_t c = 0; c < layout.channels; ++c) {
      double* plane = sums.data() + c * hw;
      for (std::size_t dy = 0; dy < k; ++dy) {
        double* dst = plane + (y0 + dy) * layout.width + x0;
        for (std::size_t dx = 0; dx < k; ++dx) dst[dx] += patch[p++];
      }
    }
    for (std::size_t dy = 0; dy < k; ++dy) {
      for (std::size_t dx = 0; dx < k; ++dx) {
        ++counts[(y0 + dy) * layout.width + x0 + dx];
      }
    }
  }

  std::vector<float> out(sums.size());
  for (std::size_t c = 0; c < layout.channels; ++c) {
    for (std::size_t p = 0; p < hw; ++p) {
      const std::size_t idx = c * hw + p;
      if (counts[p] == 0) {
        out[idx] = fill != nullptr ? fill->values()[idx] : 0.0f;
      } else if (options.overlap == OverlapMode::kAverage) {
        out[idx] = static_cast<float>(sums[idx] / counts[p]);
      } else {
        out[idx] = static_cast<float>(sums[idx]);
      }
    }
  }
  return FeatureMap(layout.channels, layout.height, layout.width, std::move(out));
}

void write_match_csv(const MatchResult& match, std::ostream& out) {
  out << "content_index,style_index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < match.assignments.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g", match.scores[i]);
    out << i << ',' << match.assignments[i] << ',' << buf << '\n';
  }
}

}  // namespace divswap
