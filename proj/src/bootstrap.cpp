#include "mbs/bootstrap.hpp"

#include <cmath>
#include <stdexcept>

namespace mbs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ResampleIndices draw(std::span<const std::size_t> group_sizes, std::uint64_t seed, int r) {
  Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
  ResampleIndices idx(group_sizes.size());
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    std::uniform_int_distribution<std::size_t> pick(0, group_sizes[g] - 1);
    idx[g].resize(group_sizes[g]);
    for (auto& i : idx[g]) i = pick(rng);
  }
  return idx;
}

void check(std::span<const std::size_t> group_sizes, int resamples) {
  if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  for (auto n : group_sizes) {
    if (n == 0) throw std::invalid_argument("bootstrap group is empty");
  }
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::vector<double> bootstrap_replicates(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                                         const Statistic& statistic) {
  check(group_sizes, resamples);
  std::vector<double> out(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < resamples; ++r) out[static_cast<std::size_t>(r)] = statistic(draw(group_sizes, seed, r));
  return out;
}

double bootstrap_std_err(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                         const Statistic& statistic) {
  const auto reps = bootstrap_replicates(group_sizes, resamples, seed, statistic);
  return sample_std_dev(reps);
}

double sample_std_dev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace serial {

std::vector<double> bootstrap_replicates(std::span<const std::size_t> group_sizes, int resamples, std::uint64_t seed,
                                         const Statistic& statistic) {
  check(group_sizes, resamples);
  std::vector<double> out(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) out[static_cast<std::size_t>(r)] = statistic(draw(group_sizes, seed, r));
  return out;
}

}  // namespace serial

}  // namespace mbs
