#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace mbs {

using Rng = std::mt19937_64;

/// Seed of the independent stream `index` derived from `seed` (splitmix64).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) { return Rng(stream_seed(seed, index)); }

/// Resampled indices, one vector per group.
using ResampleIndices = std::vector<std::vector<std::size_t>>;
using Statistic = std::function<double(const ResampleIndices&)>;

/// Bootstrap replicates of `statistic`, resampling each group with
/// replacement. Replicate r draws from stream r of `seed`, so the output does
/// not depend on the thread count.
std::vector<double> bootstrap_replicates(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                                         const Statistic& statistic);

/// Sample standard deviation of the replicates.
double bootstrap_std_err(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                         const Statistic& statistic);

double sample_std_dev(std::span<const double> values);

namespace serial {
std::vector<double> bootstrap_replicates(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                                         const Statistic& statistic);
}  // namespace serial

}  // namespace mbs
