#include "luders/random.hpp"

#include <algorithm>
#include <cmath>

#include "luders/error.hpp"

namespace luders {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (task + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::RangeError, "percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace luders
