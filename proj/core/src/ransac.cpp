#include "acrkit/ransac.hpp"

#include <algorithm>
#include <cmath>

namespace acrkit {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void sample_distinct(std::mt19937_64& rng, std::size_t n, std::size_t k,
                     std::vector<std::size_t>& out) {
  out.clear();
  while (out.size() < k) {
    // Plain modulo keeps the draw sequence identical across standard libraries.
    const std::size_t idx = static_cast<std::size_t>(rng() % n);
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
}

std::size_t adaptive_iterations(double inlier_ratio, std::size_t sample_size,
                                double confidence, std::size_t cap) {
  if (inlier_ratio >= 1.0) return 1;
  if (inlier_ratio <= 0.0) return cap;
  const double p_good = std::pow(inlier_ratio, static_cast<double>(sample_size));
  if (p_good <= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n > static_cast<double>(cap)) return cap;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n)));
}

}  // namespace acrkit
