#pragma once

// Discrete distributions on the integer lattice and the renewal risk model
// built from them: claim X, premium-scaled interarrival time c*theta, and the
// step X - c*theta of the associated random walk.

#include <cstddef>
#include <variant>
#include <vector>

namespace ruinwalk {

inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kDefaultTailEps = 1e-15;
// Interarrival support points at or below this weight are treated as dust.
inline constexpr double kSupportDust = 1e-14;

// Finitely supported pmf: weights[k] = P(V = offset + k).
class Pmf {
 public:
  Pmf() = default;
  // Validates and trims leading/trailing zero weights. Throws DomainError.
  Pmf(int offset, std::vector<double> weights, double tail_mass = 0.0);

  static Pmf point(int at) { return Pmf(at, {1.0}); }

  int offset() const { return offset_; }
  int max_support() const { return offset_ + static_cast<int>(weights_.size()) - 1; }
  const std::vector<double>& weights() const { return weights_; }
  double tail_mass() const { return tail_mass_; }
  std::size_t size() const { return weights_.size(); }

  // P(V = v), zero outside the stored range.
  double at(int v) const;
  // P(V <= v) over the stored weights.
  double cdf(int v) const;
  double mass() const;
  double mean() const;

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  int offset_ = 0;
  std::vector<double> weights_{1.0};
  double tail_mass_ = 0.0;
};

struct Geometric {
  double p;  // P(V = k) = (1-p)^k p
};
struct Poisson {
  double lambda;
};
struct Binomial {
  int n;
  double p;
};

using ParametricDist = std::variant<Geometric, Poisson, Binomial, Pmf>;

// Throws DomainError if parameters are outside their domain.
void validate(const ParametricDist& dist);

// Single-point probability P(V = k) straight from the family formula.
double probability(const ParametricDist& dist, int k);
double mean(const ParametricDist& dist);

// Lays out an (possibly infinite-support) family as a finite Pmf whose
// discarded right tail is at most tail_eps. Finite families are exact.
Pmf materialize(const ParametricDist& dist, double tail_eps = kDefaultTailEps);

// Law of X - c*theta: weight at j is sum_k P(X = j+k) P(c*theta = k).
Pmf step_pmf(const Pmf& claim, const Pmf& interarrival);

// Caps the distribution at m: P(V_m = m) = P(V >= m).
Pmf truncate(const ParametricDist& dist, int m);
Pmf truncate(const Pmf& pmf, int m);

// sum_{i>=1} i P(V = m + i), the mean removed by truncate(dist, m).
double truncated_mean_excess(const ParametricDist& dist, int m);

// Moves Delta = (1/l) sum_{i>=1} i P(c*theta = m+i) of claim mass from l to 0
// so that E(X_m - c*theta_m) = E(X - c*theta). Throws InfeasibleRebalanceError.
Pmf rebalance_claim(const ParametricDist& claim, const ParametricDist& interarrival, int m,
                    int l, double tail_eps = kDefaultTailEps);

// P(X - c*theta <= -(m+1)) for the untruncated pair.
double lower_tail_beyond(const ParametricDist& claim, const ParametricDist& interarrival,
                         int m, double tail_eps = kDefaultTailEps);

// Renewal risk model with finite interarrival support {0..m}.
class RiskModel {
 public:
  // Trims interarrival dust above the last weight > kSupportDust (folding it
  // into the new top point), then builds the step pmf. Throws DomainError.
  RiskModel(Pmf claim, Pmf interarrival);

  const Pmf& claim() const { return claim_; }
  const Pmf& interarrival() const { return interarrival_; }
  const Pmf& step() const { return step_; }

  // Largest interarrival support point.
  int m() const { return m_; }
  // Largest downward step of the walk: -min support of X - c*theta.
  // Equals m() unless the claim has no mass at 0.
  int step_bound() const { return -step_.offset(); }

  // E(X - c*theta) over the step pmf.
  double drift() const { return drift_; }
  bool net_profit() const { return drift_ < 0.0; }

  // f(j) = P(X - c*theta = j), F(j) = P(X - c*theta <= j).
  double f(int j) const { return step_.at(j); }
  double F(int j) const { return step_.cdf(j); }

  // Throws NetProfitError unless drift < 0.
  void require_net_profit() const;

 private:
  Pmf claim_;
  Pmf interarrival_;
  Pmf step_;
  int m_;
  double drift_;
};

}  // namespace ruinwalk
