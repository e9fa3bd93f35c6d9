#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace acrkit {

struct RansacOptions {
  double threshold_px = 1.0;
  std::size_t max_iterations = 2000;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

/// Stable 64-bit mixing (splitmix64 finalizer); used to derive per-trial and
/// per-step seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Draws `k` distinct indices from [0, n) without replacement.
void sample_distinct(std::mt19937_64& rng, std::size_t n, std::size_t k,
                     std::vector<std::size_t>& out);

/// Iterations needed to draw one all-inlier minimal sample with the given
/// confidence, capped at `cap`.
std::size_t adaptive_iterations(double inlier_ratio, std::size_t sample_size,
                                double confidence, std::size_t cap);

}  // namespace acrkit
