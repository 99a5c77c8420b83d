#pragma once

#include <span>

namespace divswap::detail {

// Sequential double-precision dot product, index order 0..n-1. The matcher's
// final scores come from this function.
double dot_sequential(std::span<const float> a, std::span<const float> b);

}  // namespace divswap::detail
