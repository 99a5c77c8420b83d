#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "divswap/feature_map.hpp"
#include "divswap/patch_ops.hpp"

namespace divswap {

enum class Distribution { kUniform, kNormal, kNone };

Distribution parse_distribution(std::string_view name);
std::string_view to_string(Distribution d);

/// sigma_max of the named operating points: cnnmrf 1e3, style-swap 1e5,
/// avatar-net and wct 5e3. Empty for unknown names.
std::optional<double> preset_sigma_max(std::string_view name);

struct SwapConfig {
  int patch_size = 3;
  int stride = 1;
  double sigma_max = 0.0;
  Distribution distribution = Distribution::kNone;
  std::uint64_t seed = 0;
  double epsilon = 1e-9;
  /// Worker threads for matching; 0 = hardware concurrency. Never affects
  /// results.
  unsigned workers = 0;

  void validate() const;
};

/// Per-style-patch norm shifts.
struct SigmaVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const SigmaVector&, const SigmaVector&) = default;
};

/// Stateless counter-based generator: a 64-bit hash of (seed, stream,
/// counter) built from SplitMix64 finalizer rounds. Exposed for tests.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter);

/// Draws sigma_j as a pure function of (config.seed, output_index, j).
///
/// uniform: sigma_max * (1 - u), u in [0, 1), so values lie in (0, sigma_max].
/// normal:  |z| * sigma_max / 2 with z standard normal (Box-Muller), redrawn
///          on an exact zero.
/// none:    all zeros.
SigmaVector sample_sigmas(std::int64_t n_patches, const SwapConfig& config,
                          std::uint64_t output_index = 0);

/// row_j / (|row_j| + sigma_j), with epsilon added to the denominator only
/// where sigma_j == 0.
PatchGrid shifted_normalize(const PatchGrid& style, const SigmaVector& sigmas,
                            double epsilon);

/// Nearest-NCC match (sigma = 0), the deterministic style-swap reference.
MatchResult baseline_match(const PatchGrid& content, const PatchGrid& style,
                           double epsilon, unsigned workers = 0);

struct SwapResult {
  FeatureMap output;
  MatchResult match;
  SigmaVector sigmas;
};

/// Extract, shift-normalize, match, and reconstruct from the original style
/// patches. `output_index` selects an independent sigma stream so that N
/// outputs from one seed differ.
SwapResult div_swap(const FeatureMap& content, const FeatureMap& style,
                    const SwapConfig& config, std::uint64_t output_index = 0);

struct FlipAuditReport {
  std::size_t n_flipped = 0;
  /// Flipped patches whose baseline cosine ordering is strict.
  std::size_t n_audited = 0;
  std::size_t inequality_violations = 0;
  std::size_t higher_norm_count = 0;
  double higher_norm_fraction = 0.0;

  FlipAuditReport& operator+=(const FlipAuditReport& other);
};

/// Relative tolerance of the flip inequality check.
inline constexpr double kFlipSlack = 1e-6;

/// Checks every flip against the norm-shift inequality
///   <c,s_b> sigma_a - <c,s_a> sigma_b > <c,s_a> |s_b| - <c,s_b> |s_a| > 0
/// where a is the baseline and b the shifted assignment, and tallies whether
/// the new patch has the larger norm.
FlipAuditReport flip_audit(const PatchGrid& content, const PatchGrid& style,
                           const MatchResult& baseline, const MatchResult& shifted,
                           const SigmaVector& sigmas);

}  // namespace divswap
