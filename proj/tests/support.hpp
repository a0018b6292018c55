#pragma once

// Shared fixtures: the worked examples as models and a generator of random
// admissible models (mass at 0 for X, at m for c*theta, negative drift).

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ruinwalk/model.hpp"
#include "ruinwalk/model_io.hpp"

namespace testing {

using namespace ruinwalk;

inline std::string model_path(const std::string& name) {
  return std::string(RUINWALK_MODELS_DIR) + "/" + name + ".json";
}

inline BuiltModel load_model(const std::string& name) {
  return build_model(load_model_spec(model_path(name)));
}

// X in {0, 1} with equal mass, c*theta = 2*theta with theta distributed as X.
inline RiskModel example1() { return RiskModel(Pmf(0, {0.5, 0.5}), Pmf(0, {0.5, 0.0, 0.5})); }

// X geometric(1/2), c*theta binomial(4, 1/2).
inline RiskModel example2() {
  return RiskModel(materialize(Geometric{0.5}), materialize(Binomial{4, 0.5}));
}

// c*theta in {1, 3}; claim chosen so that G(s) = 1 has a double root.
inline RiskModel example3(double p) {
  const double x0 = (-1.0 + p + std::sqrt(1.0 - p)) / (2.0 * p);
  return RiskModel(Pmf(0, {x0, 1.0 - x0}), Pmf(1, {p, 0.0, 1.0 - p}));
}

inline double example3_alpha(double p) { return -(1.0 - p) / (1.0 - p + std::sqrt(1.0 - p)); }

// X Poisson(1), c*theta Poisson(1.01) truncated at m.
inline RiskModel example4(int m) {
  return RiskModel(materialize(Poisson{1.0}), truncate(Poisson{1.01}, m));
}

// Random weights on 0..n-1 summing to one: floor + U(0, 1) each, then normalised.
inline std::vector<double> random_weights(std::mt19937_64& rng, int n, double floor = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& x : w) total += (x = floor + u(rng));
  for (double& x : w) x /= total;
  return w;
}

// Claim on {0..k}, interarrival on {0..m} (or {1..m}), both with positive
// mass at the ends that matter, redrawn until the drift is safely negative.
inline RiskModel random_model(std::mt19937_64& rng, int m_min, int m_max) {
  std::uniform_int_distribution<int> pick_m(m_min, m_max);
  for (;;) {
    const int m = pick_m(rng);
    std::uniform_int_distribution<int> pick_k(0, m + 1);
    const int k = pick_k(rng);
    std::vector<double> claim = random_weights(rng, k + 1, 0.05);
    std::vector<double> inter = random_weights(rng, m + 1, 0.05);
    RiskModel model(Pmf(0, claim), Pmf(0, inter));
    if (model.drift() < -0.05 && model.step_bound() == m) return model;
  }
}

// P(max_{n <= T} S_n < u) by walking every step sequence of length T.
inline double path_survival(const RiskModel& model, int u, int T) {
  const Pmf& step = model.step();
  std::function<double(long, int)> rec = [&](long s, int left) -> double {
    if (left == 0) return 1.0;
    double total = 0.0;
    for (std::size_t k = 0; k < step.size(); ++k) {
      const long next = s + step.offset() + static_cast<long>(k);
      if (next < u) total += step.weights()[k] * rec(next, left - 1);
    }
    return total;
  };
  return rec(0, T);
}

}  // namespace testing
