#include "ruinwalk/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/kernels.hpp"

namespace ruinwalk {

NetProfitError::NetProfitError(double drift)
    : DomainError([drift] {
        std::ostringstream os;
        os.precision(17);
        os << "refusing to solve: E(X - c*theta) = " << drift
           << " >= 0, so survival is zero for every u; the solver requires that "
              "the net profit condition holds (E(X - c*theta) < 0)";
        return os.str();
      }()),
      drift_(drift) {}

// ---------------------------------------------------------------------------
// Pmf

Pmf::Pmf(int offset, std::vector<double> weights, double tail_mass)
    : offset_(offset), weights_(std::move(weights)), tail_mass_(tail_mass) {
  if (!(tail_mass_ >= 0.0) || !std::isfinite(tail_mass_))
    throw DomainError("pmf tail mass must be a finite non-negative number");
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0)
      throw DomainError("pmf weights must be finite and non-negative");
  }
  auto first = std::find_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
  if (first == weights_.end()) throw DomainError("pmf has no positive weight");
  auto last = std::find_if(weights_.rbegin(), weights_.rend(), [](double w) { return w > 0.0; });
  offset_ += static_cast<int>(first - weights_.begin());
  weights_.erase(last.base(), weights_.end());
  weights_.erase(weights_.begin(), first);

  const double total = mass() + tail_mass_;
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "pmf mass " << total << " differs from 1 by more than " << kMassTolerance;
    throw DomainError(os.str());
  }
}

double Pmf::at(int v) const {
  const long idx = static_cast<long>(v) - offset_;
  if (idx < 0 || idx >= static_cast<long>(weights_.size())) return 0.0;
  return weights_[static_cast<std::size_t>(idx)];
}

double Pmf::cdf(int v) const {
  const long idx = static_cast<long>(v) - offset_;
  if (idx < 0) return 0.0;
  const auto end = std::min<long>(idx + 1, static_cast<long>(weights_.size()));
  return std::accumulate(weights_.begin(), weights_.begin() + end, 0.0);
}

double Pmf::mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double Pmf::mean() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k)
    acc += static_cast<double>(offset_ + static_cast<int>(k)) * weights_[k];
  return acc;
}

// ---------------------------------------------------------------------------
// Parametric families

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// p_0..p_kmax by forward recurrence (log form when e^{-lambda} underflows).
std::vector<double> poisson_terms(double lambda, int kmax) {
  std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
  if (lambda < 700.0) {
    p[0] = std::exp(-lambda);
    for (int k = 1; k <= kmax; ++k) p[k] = p[k - 1] * lambda / k;
  } else {
    for (int k = 0; k <= kmax; ++k)
      p[k] = std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
  }
  return p;
}

// Index past which Poisson terms are below 1e-30 of the requested tail scale.
int poisson_horizon(double lambda, double scale) {
  int k = static_cast<int>(std::ceil(lambda));
  double logp = -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
  const double stop = std::log(scale) - 30.0 * std::log(10.0);
  while (logp > stop || k <= lambda) {
    ++k;
    logp += std::log(lambda) - std::log(static_cast<double>(k));
  }
  return k;
}

std::vector<double> binomial_terms(int n, double p) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0) {
    w[0] = 1.0;
    return w;
  }
  if (p == 1.0) {
    w[static_cast<std::size_t>(n)] = 1.0;
    return w;
  }
  const double q = 1.0 - p;
  const double q_n = std::pow(q, n);
  if (q_n > 0.0) {
    w[0] = q_n;
    for (int k = 1; k <= n; ++k) w[k] = w[k - 1] * (n - k + 1) / k * (p / q);
  } else {
    for (int k = 0; k <= n; ++k)
      w[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      k * std::log(p) + (n - k) * std::log(q));
  }
  return w;
}

// Suffix sums computed from the top, so small tails keep full relative precision.
std::vector<double> suffix_sums(const std::vector<double>& w) {
  std::vector<double> s(w.size() + 1, 0.0);
  for (std::size_t k = w.size(); k-- > 0;) s[k] = s[k + 1] + w[k];
  return s;
}

}  // namespace

void validate(const ParametricDist& dist) {
  std::visit(overloaded{
                 [](const Geometric& g) {
                   if (!(g.p > 0.0 && g.p <= 1.0))
                     throw DomainError("geometric parameter p must lie in (0, 1]");
                 },
                 [](const Poisson& p) {
                   if (!(p.lambda > 0.0) || !std::isfinite(p.lambda))
                     throw DomainError("poisson parameter lambda must be positive");
                 },
                 [](const Binomial& b) {
                   if (b.n < 0) throw DomainError("binomial parameter n must be >= 0");
                   if (!(b.p >= 0.0 && b.p <= 1.0))
                     throw DomainError("binomial parameter p must lie in [0, 1]");
                 },
                 [](const Pmf&) {},
             },
             dist);
}

double probability(const ParametricDist& dist, int k) {
  validate(dist);
  if (k < 0 && !std::holds_alternative<Pmf>(dist)) return 0.0;
  return std::visit(
      overloaded{
          [k](const Geometric& g) { return g.p * std::pow(1.0 - g.p, k); },
          [k](const Poisson& p) { return poisson_terms(p.lambda, k)[static_cast<std::size_t>(k)]; },
          [k](const Binomial& b) {
            return k > b.n ? 0.0 : binomial_terms(b.n, b.p)[static_cast<std::size_t>(k)];
          },
          [k](const Pmf& pmf) { return pmf.at(k); },
      },
      dist);
}

double mean(const ParametricDist& dist) {
  validate(dist);
  return std::visit(overloaded{
                        [](const Geometric& g) { return (1.0 - g.p) / g.p; },
                        [](const Poisson& p) { return p.lambda; },
                        [](const Binomial& b) { return b.n * b.p; },
                        [](const Pmf& pmf) { return pmf.mean(); },
                    },
                    dist);
}

Pmf materialize(const ParametricDist& dist, double tail_eps) {
  if (!(tail_eps > 0.0 && tail_eps <= 1e-6))
    throw DomainError("tail_eps must lie in (0, 1e-6]");
  validate(dist);
  return std::visit(
      overloaded{
          [tail_eps](const Geometric& g) {
            if (g.p == 1.0) return Pmf::point(0);
            const double q = 1.0 - g.p;
            // Smallest K with q^{K+1} <= eps.
            int K = std::max(0, static_cast<int>(std::floor(std::log(tail_eps) / std::log(q))) - 2);
            while (std::pow(q, K + 1) > tail_eps) ++K;
            std::vector<double> w(static_cast<std::size_t>(K) + 1);
            for (int k = 0; k <= K; ++k) w[k] = g.p * std::pow(q, k);
            return Pmf(0, std::move(w), std::pow(q, K + 1));
          },
          [tail_eps](const Poisson& p) {
            const int horizon = poisson_horizon(p.lambda, tail_eps);
            const auto terms = poisson_terms(p.lambda, horizon);
            const auto tail = suffix_sums(terms);
            std::size_t K = 0;
            while (tail[K + 1] > tail_eps) ++K;
            return Pmf(0, std::vector<double>(terms.begin(), terms.begin() + K + 1), tail[K + 1]);
          },
          [](const Binomial& b) { return Pmf(0, binomial_terms(b.n, b.p)); },
          [](const Pmf& pmf) { return pmf; },
      },
      dist);
}

Pmf step_pmf(const Pmf& claim, const Pmf& interarrival) {
  std::vector<double> reversed(interarrival.weights().rbegin(), interarrival.weights().rend());
  std::vector<double> w(claim.size() + reversed.size() - 1);
  kernels::convolve(claim.weights(), reversed, w);
  const double tail = 1.0 - (1.0 - claim.tail_mass()) * (1.0 - interarrival.tail_mass());
  return Pmf(claim.offset() - interarrival.max_support(), std::move(w), std::max(0.0, tail));
}

namespace {

// P(V >= m) and sum_{i>=1} i P(V = m+i), summed directly over the tail.
struct TailMoments {
  double mass;
  double mean_excess;
};

TailMoments tail_moments(const ParametricDist& dist, int m) {
  validate(dist);
  return std::visit(
      overloaded{
          [m](const Geometric& g) {
            const double q = 1.0 - g.p;
            if (q == 0.0) return TailMoments{m <= 0 ? 1.0 : 0.0, 0.0};
            return TailMoments{std::pow(q, m), std::pow(q, m + 1) / g.p};
          },
          [m](const Poisson& p) {
            const int horizon = std::max(m, poisson_horizon(p.lambda, 1e-300));
            const auto terms = poisson_terms(p.lambda, horizon);
            TailMoments t{0.0, 0.0};
            for (int k = horizon; k >= m; --k) {
              t.mass += terms[k];
              t.mean_excess += (k - m) * terms[k];
            }
            return t;
          },
          [m](const Binomial& b) {
            const auto w = binomial_terms(b.n, b.p);
            TailMoments t{0.0, 0.0};
            for (int k = b.n; k >= std::max(m, 0); --k) {
              t.mass += w[k];
              t.mean_excess += (k - m) * w[k];
            }
            return t;
          },
          [m](const Pmf& pmf) {
            TailMoments t{0.0, 0.0};
            for (int k = pmf.max_support(); k >= std::max(m, pmf.offset()); --k) {
              t.mass += pmf.at(k);
              t.mean_excess += (k - m) * pmf.at(k);
            }
            return t;
          },
      },
      dist);
}

}  // namespace

Pmf truncate(const ParametricDist& dist, int m) {
  if (m <= 0) throw DomainError("truncation point m must be >= 1");
  if (const auto* pmf = std::get_if<Pmf>(&dist)) return truncate(*pmf, m);
  validate(dist);
  std::vector<double> w(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k < m; ++k) w[k] = probability(dist, k);
  w[m] = tail_moments(dist, m).mass;
  return Pmf(0, std::move(w));
}

Pmf truncate(const Pmf& pmf, int m) {
  if (m <= 0) throw DomainError("truncation point m must be >= 1");
  if (pmf.offset() < 0) throw DomainError("only non-negative variables can be truncated");
  if (pmf.max_support() <= m && pmf.tail_mass() == 0.0) return pmf;
  std::vector<double> w(static_cast<std::size_t>(m) + 1, 0.0);
  for (int k = pmf.offset(); k < m; ++k) w[k] = pmf.at(k);
  // Unlocated tail mass lies above the stored support; it is folded into m.
  w[m] = tail_moments(pmf, m).mass + pmf.tail_mass();
  return Pmf(0, std::move(w));
}

double truncated_mean_excess(const ParametricDist& dist, int m) {
  return tail_moments(dist, m).mean_excess;
}

Pmf rebalance_claim(const ParametricDist& claim, const ParametricDist& interarrival, int m,
                    int l, double tail_eps) {
  if (m <= 0) throw DomainError("truncation point m must be >= 1");
  if (l <= 0) throw DomainError("rebalance value l must be a positive integer");
  const Pmf x = materialize(claim, tail_eps);
  const double excess = truncated_mean_excess(interarrival, m);
  if (excess == 0.0) return x;

  const double delta = excess / l;
  const int top = std::max(x.max_support(), l);
  std::vector<double> w(static_cast<std::size_t>(top) + 1, 0.0);
  for (int k = x.offset(); k <= x.max_support(); ++k) w[k] = x.at(k);
  if (w[l] - delta < 0.0) {
    int feasible = -1;
    for (int k = 1; k <= x.max_support(); ++k) {
      if (x.at(k) - excess / k >= 0.0) {
        feasible = k;
        break;
      }
    }
    std::ostringstream os;
    os.precision(17);
    os << "rebalance at l=" << l << " needs P(X=l) >= " << delta << " but P(X=l) = " << w[l]
       << "; ";
    if (feasible > 0)
      os << "minimal feasible l is " << feasible;
    else
      os << "no support point of X can absorb the shift";
    throw InfeasibleRebalanceError(os.str(), feasible);
  }
  w[0] += delta;
  w[l] -= delta;
  return Pmf(0, std::move(w), x.tail_mass());
}

double lower_tail_beyond(const ParametricDist& claim, const ParametricDist& interarrival, int m,
                         double tail_eps) {
  const Pmf x = materialize(claim, tail_eps);
  const Pmf v = materialize(interarrival, 1e-300);
  // P(X - V <= -(m+1)) = sum_{k >= m+1} P(V = k) P(X <= k - m - 1).
  double acc = 0.0;
  for (int k = v.max_support(); k >= m + 1; --k) acc += v.at(k) * x.cdf(k - m - 1);
  return acc;
}

// ---------------------------------------------------------------------------
// RiskModel

namespace {

Pmf trim_dust(const Pmf& interarrival) {
  const auto& w = interarrival.weights();
  std::size_t last = w.size() - 1;
  while (last > 0 && w[last] <= kSupportDust) --last;
  if (last == w.size() - 1) return interarrival;
  std::vector<double> kept(w.begin(), w.begin() + last + 1);
  for (std::size_t k = last + 1; k < w.size(); ++k) kept[last] += w[k];
  return Pmf(interarrival.offset(), std::move(kept), interarrival.tail_mass());
}

}  // namespace

RiskModel::RiskModel(Pmf claim, Pmf interarrival)
    : claim_(std::move(claim)), interarrival_(trim_dust(interarrival)) {
  if (claim_.offset() < 0) throw DomainError("claim X must be non-negative");
  if (interarrival_.offset() < 0) throw DomainError("interarrival c*theta must be non-negative");
  if (interarrival_.tail_mass() > 0.0)
    throw DomainError(
        "interarrival c*theta must have finite support; truncate it at some m first");
  m_ = interarrival_.max_support();
  if (m_ < 1) throw DomainError("interarrival c*theta must put mass on some m >= 1");
  step_ = step_pmf(claim_, interarrival_);
  drift_ = step_.mean();
}

void RiskModel::require_net_profit() const {
  if (!(drift_ < 0.0)) throw NetProfitError(drift_);
}

}  // namespace ruinwalk
