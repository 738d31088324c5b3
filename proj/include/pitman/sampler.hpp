#pragma once

// Seedable two-parameter Chinese restaurant process and Monte Carlo
// estimators built on it.
//
// Seed derivation (stable public contract): the stream for
// (root_seed, stream_index) is std::mt19937_64 seeded with
//   std::seed_seq{lo32(root_seed), hi32(root_seed), lo32(stream_index), hi32(stream_index)}.
// Both std::mt19937_64 and std::seed_seq are fully specified by the C++
// standard, so streams are identical across platforms. Uniforms on [0, 1)
// use the top 53 bits of one engine output: (x >> 11) * 2^-53.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "pitman/combinatorics.hpp"
#include "pitman/errors.hpp"
#include "pitman/params.hpp"

namespace pitman {

struct SeedSpec {
  std::uint64_t root_seed = 0;
  std::uint64_t stream_index = 0;
};

using Engine = std::mt19937_64;

inline Engine make_engine(const SeedSpec& seed) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.root_seed), hi(seed.root_seed), lo(seed.stream_index), hi(seed.stream_index)};
  return Engine(seq);
}

inline double uniform01(Engine& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

/// Parameters converted once to double for the sampling loops.
struct SamplerParams {
  std::uint64_t n;
  double alpha;
  double theta;

  template <class Scalar>
  static SamplerParams from(const PitmanParams<Scalar>& p) {
    p.validate();
    return {p.n, to_double(p.alpha), to_double(p.theta)};
  }
};

/// One partition of n. Customer m+1 joins an existing block of size s with
/// probability (s - alpha)/(m + theta) and opens a new block with probability
/// (theta + k alpha)/(m + theta), k the current number of blocks. Blocks are
/// tracked as a size -> count multiset, so a step costs O(distinct sizes).
inline PartitionCounts crp_sample(const SamplerParams& p, Engine& engine) {
  std::map<std::uint64_t, std::uint64_t> blocks{{1, 1}};
  std::uint64_t k = 1;
  for (std::uint64_t m = 1; m < p.n; ++m) {
    double total = static_cast<double>(m) + p.theta;
    double u = uniform01(engine) * total;
    double open = p.theta + static_cast<double>(k) * p.alpha;
    if (u < open) {
      ++blocks[1];
      ++k;
      continue;
    }
    u -= open;
    // Pick a size class with weight count * (size - alpha).
    auto chosen = blocks.end();
    for (auto it = blocks.begin(); it != blocks.end(); ++it) {
      double w = static_cast<double>(it->second) * (static_cast<double>(it->first) - p.alpha);
      chosen = it;
      if (u < w) break;
      u -= w;
    }
    std::uint64_t size = chosen->first;
    if (--chosen->second == 0) blocks.erase(chosen);
    ++blocks[size + 1];
  }
  PartitionCounts counts{std::vector<std::uint64_t>(p.n, 0)};
  for (const auto& [size, count] : blocks) counts.counts[size - 1] = count;
  return counts;
}

template <class Scalar>
PartitionCounts crp_sample(const PitmanParams<Scalar>& params, const SeedSpec& seed) {
  Engine engine = make_engine(seed);
  return crp_sample(SamplerParams::from(params), engine);
}

/// K of one draw. The block count alone is a Markov chain (a new block opens
/// with probability (theta + k alpha)/(m + theta)), so sizes are not tracked.
inline std::uint64_t sample_k(const SamplerParams& p, Engine& engine) {
  std::uint64_t k = 1;
  for (std::uint64_t m = 1; m < p.n; ++m) {
    double u = uniform01(engine) * (static_cast<double>(m) + p.theta);
    if (u < p.theta + static_cast<double>(k) * p.alpha) ++k;
  }
  return k;
}

template <class Scalar>
std::uint64_t sample_k(const PitmanParams<Scalar>& params, const SeedSpec& seed) {
  Engine engine = make_engine(seed);
  return sample_k(SamplerParams::from(params), engine);
}

/// Running mean / unbiased variance (Welford), mergeable across streams.
struct SampleStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t moment_order = 1;

  void add(double x) {
    ++count;
    double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  /// Chan et al. pairwise combination.
  void merge(const SampleStats& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    double total = static_cast<double>(count + other.count);
    double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) / total;
    count += other.count;
  }

  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double standard_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

/// Statistics of f(K) over `replicates` draws from the stream `seed`.
template <class Statistic>
SampleStats mc_statistic(const SamplerParams& p, std::uint64_t replicates, const SeedSpec& seed, Statistic&& f) {
  require(replicates >= 2, "at least 2 replicates are needed for a variance");
  Engine engine = make_engine(seed);
  SampleStats stats;
  for (std::uint64_t j = 0; j < replicates; ++j) stats.add(f(sample_k(p, engine)));
  return stats;
}

/// Replicates split over `streams` consecutive stream indices starting at
/// seed.stream_index, run on worker threads and merged in stream-index order
/// so the floating summation order, and hence the result, is fixed.
template <class Statistic>
SampleStats mc_statistic_parallel(const SamplerParams& p, std::uint64_t replicates, const SeedSpec& seed,
                                  std::uint64_t streams, Statistic f) {
  require(streams >= 1, "at least one stream is needed");
  require(replicates >= 2 * streams, "each stream needs at least 2 replicates");
  std::vector<SampleStats> parts(streams);
  std::vector<std::thread> workers;
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (std::uint64_t s = 0; s < streams; ++s) {
    std::uint64_t share = replicates / streams + (s < replicates % streams ? 1 : 0);
    SeedSpec stream{seed.root_seed, seed.stream_index + s};
    workers.emplace_back([&, s, share, stream] { parts[s] = mc_statistic(p, share, stream, f); });
    if (workers.size() >= hw) {
      for (auto& w : workers) w.join();
      workers.clear();
    }
  }
  for (auto& w : workers) w.join();
  SampleStats merged;
  for (const SampleStats& part : parts) merged.merge(part);
  return merged;
}

/// Mean and standard error of K^r.
template <class Scalar>
SampleStats mc_moments(const PitmanParams<Scalar>& params, std::uint64_t r, std::uint64_t replicates,
                       const SeedSpec& seed, std::uint64_t streams = 1) {
  require(r >= 1, "moment order r must be at least 1");
  SamplerParams p = SamplerParams::from(params);
  auto power = [r](std::uint64_t k) { return std::pow(static_cast<double>(k), static_cast<double>(r)); };
  SampleStats stats = streams == 1 ? mc_statistic(p, replicates, seed, power)
                                   : mc_statistic_parallel(p, replicates, seed, streams, power);
  stats.moment_order = r;
  return stats;
}

/// Empirical frequencies of K = 1..n over `replicates` draws.
template <class Scalar>
std::vector<std::uint64_t> sample_k_histogram(const PitmanParams<Scalar>& params, std::uint64_t replicates,
                                              const SeedSpec& seed) {
  SamplerParams p = SamplerParams::from(params);
  Engine engine = make_engine(seed);
  std::vector<std::uint64_t> hist(p.n, 0);
  for (std::uint64_t j = 0; j < replicates; ++j) ++hist[sample_k(p, engine) - 1];
  return hist;
}

}  // namespace pitman
