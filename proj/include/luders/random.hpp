#pragma once

#include <cstdint>
#include <vector>

namespace luders {

/// Independent seed for sub-task `task` of a run seeded with `seed`
/// (splitmix64 finalizer). Results never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task);

/// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

}  // namespace luders
