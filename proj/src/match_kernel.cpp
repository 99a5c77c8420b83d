// Blocked single-precision screening plus double-precision rescoring for
// ncc_match. Compiled with host-specific flags when DIVSWAP_NATIVE is on.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "divswap/error.hpp"
#include "divswap/patch_ops.hpp"
#include "match_internal.hpp"
#include "parallel.hpp"

namespace divswap {
namespace {

typedef float v8f __attribute__((vector_size(32)));

constexpr std::size_t kLanes = 8;
constexpr std::size_t kTile = 4;        // rows per micro-kernel side
constexpr std::size_t kChunkRows = 64;  // content rows per task

// Rows padded with zeros to a multiple of kLanes and the row count padded to a
// multiple of kTile. Zero padding contributes exact zeros to every product.
struct PackedRows {
  std::size_t rows = 0;
  std::size_t vecs_per_row = 0;
  std::vector<v8f> data;

  const v8f* row(std::size_t r) const { return data.data() + r * vecs_per_row; }
};

PackedRows pack(const PatchGrid& grid) {
  PackedRows p;
  const std::size_t d = grid.dim();
  p.vecs_per_row = (d + kLanes - 1) / kLanes;
  p.rows = (grid.n_patches() + kTile - 1) / kTile * kTile;
  p.data.assign(p.rows * p.vecs_per_row, v8f{});
  for (std::size_t r = 0; r < grid.n_patches(); ++r) {
    std::memcpy(p.data.data() + r * p.vecs_per_row, grid.row(r).data(),
                d * sizeof(float));
  }
  return p;
}

inline float hsum(v8f v) {
  const float a = (v[0] + v[4]) + (v[1] + v[5]);
  const float b = (v[2] + v[6]) + (v[3] + v[7]);
  return a + b;
}

// out[r * stride + c] = <a_r, b_c> for r, c in [0, 4).
inline void micro_kernel(const v8f* a, const v8f* b, std::size_t n_vecs,
                         float* out, std::size_t out_stride) {
  v8f acc[kTile][kTile] = {};
  const v8f* a0 = a;
  const v8f* a1 = a + n_vecs;
  const v8f* a2 = a + 2 * n_vecs;
  const v8f* a3 = a + 3 * n_vecs;
  for (std::size_t k = 0; k < n_vecs; ++k) {
    const v8f x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
    for (std::size_t c = 0; c < kTile; ++c) {
      const v8f y = b[c * n_vecs + k];
      acc[0][c] += x0 * y;
      acc[1][c] += x1 * y;
      acc[2][c] += x2 * y;
      acc[3][c] += x3 * y;
    }
  }
  for (std::size_t r = 0; r < kTile; ++r) {
    for (std::size_t c = 0; c < kTile; ++c) out[r * out_stride + c] = hsum(acc[r][c]);
  }
}

}  // namespace

MatchResult ncc_match(const PatchGrid& content, const PatchGrid& style,
                      unsigned workers) {
  if (content.dim() != style.dim()) {
    throw DimensionError("content and style patch dimensions differ (" +
                         std::to_string(content.dim()) + " vs " +
                         std::to_string(style.dim()) + ")");
  }
  const std::size_t n_c = content.n_patches();
  const std::size_t n_s = style.n_patches();
  const std::size_t d = content.dim();

  const PackedRows packed_c = pack(content);
  const PackedRows packed_s = pack(style);
  const std::vector<double> content_norms = patch_norms(content);
  const std::vector<double> style_norms = patch_norms(style);

  // |float_dot - exact_dot| <= gamma * sum|a_k b_k| <= gamma * |a| |b|, with
  // gamma covering any summation order of d terms (FMA or not), plus an
  // absolute term for products that fall into the subnormal range.
  const double gamma = 2.0 * static_cast<double>(d + kLanes) * 0x1p-24;
  const double tiny = static_cast<double>(d + kLanes) *
                      static_cast<double>(std::numeric_limits<float>::denorm_min());

  MatchResult result;
  result.assignments.resize(n_c);
  result.scores.resize(n_c);

  const std::size_t n_chunks = (n_c + kChunkRows - 1) / kChunkRows;
  const unsigned n_workers = std::min<unsigned>(
      detail::resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n_chunks, 1)));
  std::vector<std::vector<float>> buffers(n_workers);
  std::vector<std::vector<std::uint32_t>> candidate_lists(n_workers);

  detail::parallel_for(n_chunks, n_workers, [&](std::size_t chunk, unsigned w) {
    std::vector<float>& scores = buffers[w];
    std::vector<std::uint32_t>& candidates = candidate_lists[w];
    scores.resize(kChunkRows * packed_s.rows);

    const std::size_t row_begin = chunk * kChunkRows;
    const std::size_t row_end = std::min(n_c, row_begin + kChunkRows);
    const std::size_t tile_end = std::min(packed_c.rows, row_begin + kChunkRows);

    for (std::size_t sb = 0; sb < packed_s.rows; sb += kTile) {
      for (std::size_t cb = row_begin; cb < tile_end; cb += kTile) {
        micro_kernel(packed_c.row(cb), packed_s.row(sb), packed_c.vecs_per_row,
                     scores.data() + (cb - row_begin) * packed_s.rows + sb,
                     packed_s.rows);
      }
    }

    for (std::size_t i = row_begin; i < row_end; ++i) {
      const float* f = scores.data() + (i - row_begin) * packed_s.rows;
      const double cn = content_norms[i];

      bool finite = true;
      double lower = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n_s; ++j) {
        if (!std::isfinite(f[j])) {
          finite = false;
          break;
        }
        lower = std::max(lower, f[j] - (gamma * cn * style_norms[j] + tiny));
      }

      candidates.clear();
      for (std::size_t j = 0; j < n_s; ++j) {
        if (!finite || f[j] + (gamma * cn * style_norms[j] + tiny) >= lower) {
          candidates.push_back(static_cast<std::uint32_t>(j));
        }
      }

      std::uint32_t best_j = candidates.front();
      double best = detail::dot_sequential(content.row(i), style.row(best_j));
      for (std::size_t q = 1; q < candidates.size(); ++q) {
        const double s = detail::dot_sequential(content.row(i), style.row(candidates[q]));
        if (s > best) {
          best = s;
          best_j = candidates[q];
        }
      }
      result.assignments[i] = best_j;
      result.scores[i] = best;
    }
  });
  return result;
}

}  // namespace divswap
