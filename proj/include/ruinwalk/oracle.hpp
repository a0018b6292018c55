#pragma once

// Independent checks of the analytic pipeline: Monte Carlo of the walk's
// running maximum and exact lattice enumeration of phi(u, T).

#include <cstdint>
#include <vector>

#include "ruinwalk/model.hpp"

namespace ruinwalk {

inline constexpr std::uint64_t kDefaultSeed = 20240229;

struct SimConfig {
  long n_paths = 1000000;
  int horizon_T = 200;
  std::uint64_t seed = kDefaultSeed;
  std::vector<int> u_values{0};
  // Paths are split into this many seed-derived substreams; the result depends
  // on (seed, shards) but not on how many threads run them.
  int shards = 8;
  int threads = 0;  // 0: hardware concurrency
};

struct SimResult {
  std::vector<int> u_values;
  std::vector<double> estimate;  // P(max_{n <= T} S_n < u)
  std::vector<double> se;        // sqrt(p (1 - p) / n)
  long paths = 0;
};

// Steps are drawn by inverse-cdf lookup (binary search in the cumulative
// table) from SplitMix64 uniforms. Throws DomainError for invalid configs.
SimResult simulate(const RiskModel& model, const SimConfig& cfg);

// Resolves the default seed, honouring RUINWALK_SEED when set.
std::uint64_t default_seed();

inline constexpr long kLatticeBudget = 10'000'000;

// Exact phi(u, T) by forward propagation of the partial-sum distribution,
// discarding mass that reaches u. Throws ResourceError if the lattice would
// exceed kLatticeBudget cells.
double enumerate_finite(const RiskModel& model, int u, int T);

}  // namespace ruinwalk
