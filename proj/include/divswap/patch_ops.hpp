#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "divswap/feature_map.hpp"

namespace divswap {

/// Geometry of a sliding-window decomposition of a C x H x W map.
struct PatchLayout {
  std::size_t patch_size = 0;
  std::size_t stride = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  static PatchLayout of(std::size_t channels, std::size_t height,
                        std::size_t width, int patch_size, int stride);

  std::size_t n_patches() const { return grid_rows * grid_cols; }
  std::size_t dim() const { return channels * patch_size * patch_size; }

  /// True when every location of the source lies in some window.
  bool full_coverage() const {
    return stride <= patch_size && (grid_rows - 1) * stride + patch_size == height &&
           (grid_cols - 1) * stride + patch_size == width;
  }

  friend bool operator==(const PatchLayout&, const PatchLayout&) = default;
};

/// Matrix of flattened patches; row i is the window at grid position
/// (i / grid_cols, i % grid_cols), flattened channel-major.
class PatchGrid {
 public:
  PatchGrid(PatchLayout layout, std::vector<float> rows);

  const PatchLayout& layout() const { return layout_; }
  std::size_t n_patches() const { return layout_.n_patches(); }
  std::size_t dim() const { return layout_.dim(); }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim(), dim());
  }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

 private:
  PatchLayout layout_;
  std::vector<float> data_;
};

/// Winning style index and score for every content patch.
struct MatchResult {
  std::vector<std::uint32_t> assignments;
  std::vector<double> scores;

  std::size_t size() const { return assignments.size(); }
  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

PatchGrid extract_patches(const FeatureMap& map, int patch_size, int stride);

/// Euclidean norm of every row, accumulated in double.
std::vector<double> patch_norms(const PatchGrid& grid);

/// argmax_j <content_i, style_j> for every content row, smallest j on ties.
///
/// A blocked single-precision product screens candidates; every row whose
/// single-precision score lies within a rigorous rounding bound of the leader
/// is rescored with a sequential double-precision dot product, and the final
/// decision and reported score come from that rescoring. Results are
/// therefore identical for any `workers` value. `workers` = 0 uses the
/// hardware concurrency.
MatchResult ncc_match(const PatchGrid& content, const PatchGrid& style_normalized,
                      unsigned workers = 0);

/// Straightforward triple loop with the same contract as ncc_match.
/// Kept as a verification oracle.
MatchResult ncc_match_oracle(const PatchGrid& content,
                             const PatchGrid& style_normalized);

enum class OverlapMode {
  kAverage,  // sum overlapping contributions, divide by overlap count
  kSum,      // plain transposed-convolution sum
};

struct ReconstructOptions {
  OverlapMode overlap = OverlapMode::kAverage;
  /// Source for locations no window covers (stride not tiling the map).
  /// Those locations are zero when null.
  const FeatureMap* uncovered_fill = nullptr;
};

/// Folds style rows back into a map with the content layout: row
/// assignments[i] of `style_original` lands at content grid position i.
FeatureMap reconstruct(const MatchResult& match, const PatchGrid& style_original,
                       const PatchLayout& content_layout,
                       const ReconstructOptions& options = {});

/// CSV with header `content_index,style_index,score`, scores at 9
/// significant digits.
void write_match_csv(const MatchResult& match, std::ostream& out);

}  // namespace divswap
