#include "ruinwalk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/rng.hpp"

namespace ruinwalk {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RUINWALK_SEED")) {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw DomainError(std::string("RUINWALK_SEED is not an unsigned integer: ") + env);
    }
  }
  return kDefaultSeed;
}

namespace {

// Histogram of max(S_1..S_T), clamped to [lo, hi]; survival for u counts maxima < u.
struct Shard {
  std::vector<long> hist;
};

void run_shard(const RiskModel& model, const std::vector<double>& cum, int T, long paths,
               std::uint64_t seed, int lo, int hi, Shard& out) {
  SplitMix64 rng(seed);
  const int offset = model.step().offset();
  out.hist.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (long p = 0; p < paths; ++p) {
    long sum = 0;
    long best = std::numeric_limits<long>::min();
    for (int t = 0; t < T; ++t) {
      const double x = rng.uniform();
      // First index whose cumulative weight exceeds x; mass lost to the
      // materialised tail lands on the top point.
      auto it = std::upper_bound(cum.begin(), cum.end(), x);
      const long k = it == cum.end() ? static_cast<long>(cum.size()) - 1 : it - cum.begin();
      sum += offset + k;
      best = std::max(best, sum);
    }
    const long clamped = std::clamp<long>(best, lo, hi);
    ++out.hist[static_cast<std::size_t>(clamped - lo)];
  }
}

}  // namespace

SimResult simulate(const RiskModel& model, const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw DomainError("simulation needs at least one path");
  if (cfg.horizon_T < 1) throw DomainError("simulation horizon must be >= 1");
  if (cfg.shards < 1) throw DomainError("simulation needs at least one shard");
  if (cfg.u_values.empty()) throw DomainError("simulation needs at least one u value");

  const auto& w = model.step().weights();
  std::vector<double> cum(w.size());
  double run = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) cum[k] = (run += w[k]);

  // Maxima below min(u) all survive every u, maxima >= max(u) survive none.
  const auto [umin, umax] = std::minmax_element(cfg.u_values.begin(), cfg.u_values.end());
  const int lo = *umin - 1;
  const int hi = *umax;

  std::vector<Shard> shards(static_cast<std::size_t>(cfg.shards));
  auto shard_paths = [&](int s) {
    return cfg.n_paths / cfg.shards + (s < cfg.n_paths % cfg.shards ? 1 : 0);
  };
  auto work = [&](int s) {
    run_shard(model, cum, cfg.horizon_T, shard_paths(s),
              SplitMix64::substream_seed(cfg.seed, static_cast<std::uint64_t>(s)), lo, hi,
              shards[s]);
  };

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, cfg.shards);
  if (threads == 1) {
    for (int s = 0; s < cfg.shards; ++s) work(s);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int s = t; s < cfg.shards; s += threads) work(s);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<long> hist(static_cast<std::size_t>(hi - lo + 1), 0);
  for (const Shard& sh : shards)
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += sh.hist[i];

  SimResult res;
  res.u_values = cfg.u_values;
  res.paths = cfg.n_paths;
  for (int u : cfg.u_values) {
    long alive = 0;
    for (int v = lo; v < u; ++v) alive += hist[static_cast<std::size_t>(v - lo)];
    const double p = static_cast<double>(alive) / static_cast<double>(cfg.n_paths);
    res.estimate.push_back(p);
    res.se.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.n_paths)));
  }
  return res;
}

double enumerate_finite(const RiskModel& model, int u, int T) {
  if (T < 1) throw DomainError("horizon T must be >= 1");
  const Pmf& step = model.step();
  const int lo_step = step.offset();
  const int hi_step = step.max_support();
  // Partial sums that are still alive live in [T * lo_step, u - 1].
  const long floor = static_cast<long>(T) * std::min(lo_step, 0);
  const long width = static_cast<long>(u) - 1 - floor + 1;
  if (width <= 0) return 0.0;
  if (width * static_cast<long>(T) > kLatticeBudget)
    throw ResourceError("enumeration lattice of " + std::to_string(width) + " x " +
                        std::to_string(T) + " cells exceeds the budget");

  // mass[s - floor] = P(S_n = s, S_1..S_n < u).
  std::vector<double> mass(static_cast<std::size_t>(width), 0.0);
  std::vector<double> next(mass.size());
  bool first = true;
  for (int n = 1; n <= T; ++n) {
    std::fill(next.begin(), next.end(), 0.0);
    if (first) {
      for (int j = lo_step; j <= hi_step; ++j)
        if (j < u) next[static_cast<std::size_t>(j - floor)] += step.at(j);
      first = false;
    } else {
      for (long idx = 0; idx < width; ++idx) {
        const double p = mass[idx];
        if (p == 0.0) continue;
        const long s = idx + floor;
        for (int j = lo_step; j <= hi_step; ++j) {
          const long t = s + j;
          if (t >= u) break;
          next[static_cast<std::size_t>(t - floor)] += p * step.at(j);
        }
      }
    }
    mass.swap(next);
  }
  double alive = 0.0;
  for (double p : mass) alive += p;
  return alive;
}

}  // namespace ruinwalk
