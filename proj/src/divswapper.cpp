#include "divswap/divswapper.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "divswap/error.hpp"
#include "match_internal.hpp"

namespace divswap {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSeedSalt = 0x6A09E667F3BCC909ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// [0, 1) with 53 random bits.
double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1p-53;
}

// Low byte of the counter indexes draws belonging to one patch.
std::uint64_t draw_counter(std::uint64_t patch, std::uint64_t sub) {
  return (patch << 8) | sub;
}

constexpr int kMaxNormalAttempts = 128;

}  // namespace

Distribution parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::kUniform;
  if (name == "normal") return Distribution::kNormal;
  if (name == "none") return Distribution::kNone;
  throw ArgumentError("unknown distribution '" + std::string(name) + "'");
}

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::kUniform: return "uniform";
    case Distribution::kNormal: return "normal";
    case Distribution::kNone: return "none";
  }
  return "?";
}

std::optional<double> preset_sigma_max(std::string_view name) {
  if (name == "cnnmrf") return 1e3;
  if (name == "style-swap") return 1e5;
  if (name == "avatar-net" || name == "wct") return 5e3;
  return std::nullopt;
}

void SwapConfig::validate() const {
  if (patch_size < 1) throw ArgumentError("patch size must be >= 1");
  if (stride < 1) throw ArgumentError("stride must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("epsilon must be positive and finite");
  }
  if (distribution != Distribution::kNone &&
      (!(sigma_max > 0.0) || !std::isfinite(sigma_max))) {
    throw ArgumentError("sigma_max must be positive and finite for the " +
                        std::string(to_string(distribution)) + " distribution");
  }
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter) {
  std::uint64_t key = mix64(seed ^ kSeedSalt);
  key = mix64(key + kGolden * (stream + 1));
  return mix64(key + kGolden * (counter + 1));
}

SigmaVector sample_sigmas(std::int64_t n_patches, const SwapConfig& config,
                          std::uint64_t output_index) {
  if (n_patches <= 0) throw ArgumentError("sigma count must be positive");
  config.validate();
  const auto n = static_cast<std::size_t>(n_patches);
  SigmaVector sigmas{std::vector<double>(n, 0.0)};
  const std::uint64_t seed = config.seed;

  switch (config.distribution) {
    case Distribution::kNone:
      break;
    case Distribution::kUniform:
      for (std::size_t j = 0; j < n; ++j) {
        const double u = to_unit(counter_hash(seed, output_index, draw_counter(j, 0)));
        sigmas.values[j] = config.sigma_max * (1.0 - u);
      }
      break;
    case Distribution::kNormal:
      for (std::size_t j = 0; j < n; ++j) {
        double sigma = 0.0;
        for (int attempt = 0; attempt < kMaxNormalAttempts && sigma == 0.0; ++attempt) {
          const auto sub = static_cast<std::uint64_t>(2 * attempt);
          const double u1 = 1.0 - to_unit(counter_hash(seed, output_index, draw_counter(j, sub)));
          const double u2 = to_unit(counter_hash(seed, output_index, draw_counter(j, sub + 1)));
          const double z = std::sqrt(-2.0 * std::log(u1)) *
                           std::cos(2.0 * std::numbers::pi * u2);
          sigma = std::abs(z) * config.sigma_max / 2.0;
        }
        if (sigma == 0.0) throw Error("normal sigma draw failed to leave zero");
        sigmas.values[j] = sigma;
      }
      break;
  }
  return sigmas;
}

PatchGrid shifted_normalize(const PatchGrid& style, const SigmaVector& sigmas,
                            double epsilon) {
  if (sigmas.size() != style.n_patches()) {
    throw DimensionError("sigma vector has " + std::to_string(sigmas.size()) +
                         " entries for " + std::to_string(style.n_patches()) +
                         " style patches");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  const auto norms = patch_norms(style);
  const std::size_t d = style.dim();
  std::vector<float> rows(style.data().begin(), style.data().end());
  for (std::size_t j = 0; j < style.n_patches(); ++j) {
    const double sigma = sigmas.values[j];
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw ValidationError("sigma " + std::to_string(j) + " is negative or non-finite");
    }
    const double denom = norms[j] + sigma + (sigma == 0.0 ? epsilon : 0.0);
    float* row = rows.data() + j * d;
    for (std::size_t k = 0; k < d; ++k) {
      row[k] = static_cast<float>(static_cast<double>(row[k]) / denom);
    }
  }
  return PatchGrid(style.layout(), std::move(rows));
}

MatchResult baseline_match(const PatchGrid& content, const PatchGrid& style,
                           double epsilon, unsigned workers) {
  const SigmaVector zeros{std::vector<double>(style.n_patches(), 0.0)};
  return ncc_match(content, shifted_normalize(style, zeros, epsilon), workers);
}

SwapResult div_swap(const FeatureMap& content, const FeatureMap& style,
                    const SwapConfig& config, std::uint64_t output_index) {
  config.validate();
  if (content.channels() != style.channels()) {
    throw DimensionError("content has " + std::to_string(content.channels()) +
                         " channels, style has " + std::to_string(style.channels()));
  }
  const PatchGrid content_grid = extract_patches(content, config.patch_size, config.stride);
  const PatchGrid style_grid = extract_patches(style, config.patch_size, config.stride);

  SigmaVector sigmas = sample_sigmas(static_cast<std::int64_t>(style_grid.n_patches()),
                                     config, output_index);
  const PatchGrid normalized = shifted_normalize(style_grid, sigmas, config.epsilon);
  MatchResult match = ncc_match(content_grid, normalized, config.workers);

  ReconstructOptions options;
  options.uncovered_fill = &content;
  FeatureMap output = reconstruct(match, style_grid, content_grid.layout(), options);
  return SwapResult{std::move(output), std::move(match), std::move(sigmas)};
}

FlipAuditReport& FlipAuditReport::operator+=(const FlipAuditReport& other) {
  n_flipped += other.n_flipped;
  n_audited += other.n_audited;
  inequality_violations += other.inequality_violations;
  higher_norm_count += other.higher_norm_count;
  higher_norm_fraction =
      n_audited == 0 ? 0.0 : static_cast<double>(higher_norm_count) / n_audited;
  return *this;
}

FlipAuditReport flip_audit(const PatchGrid& content, const PatchGrid& style,
                           const MatchResult& baseline, const MatchResult& shifted,
                           const SigmaVector& sigmas) {
  if (content.dim() != style.dim()) {
    throw ConsistencyError("content and style patch dimensions differ");
  }
  if (baseline.size() != content.n_patches() || shifted.size() != content.n_patches()) {
    throw ConsistencyError("match results do not cover the content grid");
  }
  if (sigmas.size() != style.n_patches()) {
    throw ConsistencyError("sigma vector does not cover the style grid");
  }
  const auto content_norms = patch_norms(content);
  const auto style_norms = patch_norms(style);

  FlipAuditReport report;
  for (std::size_t i = 0; i < content.n_patches(); ++i) {
    const std::uint32_t a = baseline.assignments[i];
    const std::uint32_t b = shifted.assignments[i];
    if (a >= style.n_patches() || b >= style.n_patches()) {
      throw ConsistencyError("style index out of range in match result");
    }
    if (a == b) continue;
    ++report.n_flipped;

    const double ca = detail::dot_sequential(content.row(i), style.row(a));
    const double cb = detail::dot_sequential(content.row(i), style.row(b));
    const double na = style_norms[a];
    const double nb = style_norms[b];
    const double cn = content_norms[i];
    const double cos_a = cn > 0.0 && na > 0.0 ? ca / (cn * na) : 0.0;
    const double cos_b = cn > 0.0 && nb > 0.0 ? cb / (cn * nb) : 0.0;
    if (!(cos_a > cos_b)) continue;
    ++report.n_audited;

    const double sa = sigmas.values[a];
    const double sb = sigmas.values[b];
    const double lhs = cb * sa - ca * sb;
    const double rhs = ca * nb - cb * na;
    const double slack = kFlipSlack * (std::abs(cb * sa) + std::abs(ca * sb) +
                                       std::abs(ca * nb) + std::abs(cb * na));
    if (lhs <= rhs - slack || lhs <= -slack) ++report.inequality_violations;
    if (nb > na) ++report.higher_norm_count;
  }
  report.higher_norm_fraction =
      report.n_audited == 0 ? 0.0
                            : static_cast<double>(report.higher_norm_count) / report.n_audited;
  return report;
}

}  // namespace divswap
