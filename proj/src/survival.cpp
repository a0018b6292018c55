#include "ruinwalk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/kernels.hpp"

namespace ruinwalk {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<double> reversed_step(const RiskModel& model) {
  const auto& w = model.step().weights();
  return {w.rbegin(), w.rend()};
}

// Runs phi(., t) for t = 1..T over the widening lattice and hands the first
// u_max+1 values of every level to `visit`. Levels above `cap` are taken as 1.
template <class Visit>
void finite_levels(const RiskModel& model, int u_max, int T, Visit&& visit,
                   long cap = std::numeric_limits<long>::max()) {
  if (T < 1) throw DomainError("finite horizon T must be >= 1");
  if (u_max < 0) throw DomainError("u_max must be >= 0");
  const int m = model.step_bound();
  const int L = static_cast<int>(model.step().size());
  const int kmax = model.step().max_support();
  const long climb = std::max(kmax, 0);
  const auto taps = reversed_step(model);

  // Level t is needed on [0, u_max + (T - t) m]; above t * climb it is exactly 1.
  auto range = [&](int t) { return static_cast<long>(u_max) + static_cast<long>(T - t) * m; };
  std::vector<double> prev(static_cast<std::size_t>(range(1)) + 1);
  for (long v = 0; v <= range(1); ++v) prev[v] = model.F(static_cast<int>(v) - 1);
  visit(1, std::span<const double>(prev.data(), static_cast<std::size_t>(u_max) + 1));

  std::vector<double> padded;
  std::vector<double> next;
  for (int t = 2; t <= T; ++t) {
    const long top = range(t);
    const long live = std::min({top, static_cast<long>(t) * climb, cap});
    // padded[idx] = phi(idx - kmax, t-1), zero for arguments <= 0.
    padded.assign(static_cast<std::size_t>(top + L), 0.0);
    for (long idx = 0; idx < top + L; ++idx) {
      const long v = idx - kmax;
      if (v >= 1) padded[idx] = prev[v];
    }
    next.assign(static_cast<std::size_t>(top) + 1, 1.0);
    const std::size_t n_live = static_cast<std::size_t>(std::max(live, -1L) + 1);
    kernels::correlate(std::span<const double>(padded.data(), n_live + L - 1), taps,
                       std::span<double>(next.data(), n_live));
    prev.swap(next);
    visit(t, std::span<const double>(prev.data(), static_cast<std::size_t>(u_max) + 1));
  }
}

// Rough multiply-add count of finite_levels, used to refuse hopeless fallbacks.
double finite_cost(const RiskModel& model, int u_max, int T, double cap) {
  const double m = model.step_bound();
  const double climb = std::max(model.step().max_support(), 0);
  const double L = static_cast<double>(model.step().size());
  double cells = 0.0;
  for (int t = 2; t <= T; ++t)
    cells += std::min({u_max + (T - t) * m, t * climb, cap}) + 1.0;
  return cells * L;
}

// Exponent r > 0 with E exp(r (X - c*theta)) < 1, just under the adjustment
// coefficient, so that 1 - phi(v, t) <= 1 - phi(v) <= exp(-r v). Infinity
// when the walk cannot move up.
double lundberg_exponent(const RiskModel& model) {
  const Pmf& step = model.step();
  if (step.max_support() <= 0) return std::numeric_limits<double>::infinity();
  auto g = [&](double r) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < step.size(); ++k)
      acc += step.weights()[k] * std::exp(static_cast<long double>(r) * (step.offset() + static_cast<int>(k)));
    return static_cast<double>(acc - 1.0L);
  };
  double hi = 1e-3;
  while (g(hi) <= 0.0 && hi < 64.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.999 * lo;
}

// Levels above the returned cap satisfy 1 - phi(v, t) < 1e-18, so treating
// them as 1 costs at most T * 1e-18.
long survival_cap(const RiskModel& model, int u_max) {
  const double r = lundberg_exponent(model);
  if (!(r > 0.0)) return std::numeric_limits<long>::max();
  const double v = std::ceil(41.5 / r);
  if (v > 1e12) return std::numeric_limits<long>::max();
  return std::max(static_cast<long>(u_max), static_cast<long>(v));
}

std::vector<double> capped_survival(const RiskModel& model, int u_max, int T, long cap) {
  std::vector<double> phi;
  finite_levels(
      model, u_max, T,
      [&](int t, std::span<const double> row) {
        if (t == T) phi.assign(row.begin(), row.end());
      },
      cap);
  return phi;
}

}  // namespace

SurvivalTable finite_survival(const RiskModel& model, int u_max, int T) {
  SurvivalTable table;
  table.kind = SurvivalTable::Kind::finite;
  table.horizon_T = T;
  finite_levels(model, u_max, T, [&](int t, std::span<const double> row) {
    if (t == T) table.phi.assign(row.begin(), row.end());
  });
  table.residual = 0.0;
  return table;
}

std::vector<SurvivalTable> finite_survival_grid(const RiskModel& model, int u_max, int T_max) {
  std::vector<SurvivalTable> grid;
  finite_levels(model, u_max, T_max, [&](int t, std::span<const double> row) {
    SurvivalTable table;
    table.kind = SurvivalTable::Kind::finite;
    table.horizon_T = t;
    table.phi.assign(row.begin(), row.end());
    grid.push_back(std::move(table));
  });
  return grid;
}

double recurrence_residual(const RiskModel& model, const std::vector<double>& phi) {
  const int m = model.step_bound();
  const int kmax = model.step().max_support();
  const auto wr = reversed_step(model);
  const int u_max = static_cast<int>(phi.size()) - 1;
  double worst = 0.0;
  for (int u = 0; u <= u_max - m; ++u) {
    const int lo = std::max(1, u - kmax);
    const std::size_t len = static_cast<std::size_t>(u + m - lo + 1);
    const double s = kernels::dot(std::span<const double>(phi.data() + lo, len),
                                  std::span<const double>(wr.data() + (kmax - u + lo), len));
    worst = std::max(worst, std::abs(phi[u] - s));
  }
  return worst;
}

int stability_horizon(const RiskModel& model, std::span<const double> initial_error, int u_max,
                      double horizon_tol) {
  const int m = model.step_bound();
  if (static_cast<int>(initial_error.size()) != m + 1)
    throw DomainError("initial error estimates must cover phi(0) .. phi(m)");
  if (u_max <= m) return u_max;
  const double fm = model.f(-m);
  const int kmax = model.step().max_support();
  // Worst-case absolute error of the recurrence, one rounding per step.
  std::vector<double> err(initial_error.begin(), initial_error.end());
  err.resize(static_cast<std::size_t>(u_max) + 1);
  for (int u = m + 1; u <= u_max; ++u) {
    double acc = err[u - m] + kEps;
    for (int i = std::max(1, u - m - kmax); i <= u - 1; ++i) acc += err[i] * model.f(u - m - i);
    err[u] = acc / fm;
    if (err[u] > horizon_tol) return u - 1;
  }
  return u_max;
}

int stability_horizon(const RiskModel& model, int u_max, double horizon_tol) {
  const std::vector<double> err(static_cast<std::size_t>(model.step_bound()) + 1, 4.0 * kEps);
  return stability_horizon(model, err, u_max, horizon_tol);
}

SurvivalTable ultimate_survival(const RiskModel& model, const InitialValues& init, int u_max,
                                const UltimateOptions& opts) {
  model.require_net_profit();
  if (u_max < 0) throw DomainError("u_max must be >= 0");
  const int m = model.step_bound();
  if (static_cast<int>(init.pi.size()) != m)
    throw DomainError("initial values do not match the model's step bound");
  const double fm = model.f(-m);
  const int kmax = model.step().max_support();

  std::vector<double> phi(static_cast<std::size_t>(std::max(u_max, m)) + 1, 0.0);
  std::vector<double> err(static_cast<std::size_t>(m) + 1, 4.0 * kEps);
  double run = 0.0, run_err = 0.0;
  for (int i = 0; i < m; ++i) {
    run += init.pi[i];
    if (i < static_cast<int>(init.error.size())) run_err += init.error[i];
    phi[i + 1] = run;
    err[i + 1] = run_err + 4.0 * kEps;
  }
  for (int i = 1; i <= m; ++i) {
    phi[0] += phi[i] * model.f(-i);
    err[0] += err[i] * model.f(-i);
  }

  auto violates = [&](int u) {
    if (phi[u] < -opts.check_tol || phi[u] > 1.0 + opts.check_tol) return true;
    return u > 0 && phi[u] < phi[u - 1] - opts.check_tol;
  };
  const int horizon = stability_horizon(model, err, u_max, opts.horizon_tol);
  for (int u = 0; u <= m; ++u) {
    if (violates(u)) {
      std::ostringstream os;
      os.precision(17);
      os << "initial values give phi(" << u << ") = " << phi[u]
         << " outside [0, 1] or below phi(" << u - 1 << ")";
      throw BlowupError(os.str(), u);
    }
  }

  SurvivalTable table;
  table.kind = SurvivalTable::Kind::ultimate;
  const auto wr = reversed_step(model);
  const int L = static_cast<int>(wr.size());

  int u = m + 1;
  for (; u <= std::min(u_max, horizon); ++u) {
    const int lo = std::max(1, u - m - kmax);
    const std::size_t len = static_cast<std::size_t>(u - lo);
    const double s = kernels::dot(std::span<const double>(phi.data() + lo, len),
                                  std::span<const double>(wr.data() + (L - 1 - u + lo), len));
    phi[u] = (phi[u - m] - s) / fm;
    if (violates(u)) break;
  }

  if (u <= u_max) {
    if (!opts.allow_fallback) {
      std::ostringstream os;
      os << "phi(u) is not reliable from u = " << u << " (predicted error above "
         << opts.horizon_tol << "; the recurrence divides by f(-m) = " << fm << " each step)";
      throw BlowupError(os.str(), u);
    }
    table.fallback_from = u;
    const long cap = survival_cap(model, u_max);
    int T = 64;
    std::vector<double> prev = capped_survival(model, u_max, T, cap);
    for (;;) {
      if (2 * T > opts.max_T ||
          finite_cost(model, u_max, 2 * T, static_cast<double>(cap)) > 4e9) {
        std::ostringstream os;
        os << "finite-time fallback did not settle to " << opts.bracket_tol << " by T = " << T
           << " for u >= " << u;
        throw BlowupError(os.str(), u);
      }
      std::vector<double> next = capped_survival(model, u_max, 2 * T, cap);
      double gap = 0.0;
      for (int v = u; v <= u_max; ++v) gap = std::max(gap, std::abs(prev[v] - next[v]));
      T *= 2;
      prev.swap(next);
      if (gap < opts.bracket_tol) break;
    }
    table.horizon_T = T;
    for (int v = u; v <= u_max; ++v) phi[v] = prev[v];
    for (int v = u; v <= u_max; ++v) {
      if (violates(v)) {
        std::ostringstream os;
        os.precision(17);
        os << "fallback value phi(" << v << ") = " << phi[v] << " violates bounds or monotonicity";
        throw BlowupError(os.str(), v);
      }
    }
  }

  phi.resize(static_cast<std::size_t>(u_max) + 1);
  table.phi = std::move(phi);
  table.residual = recurrence_residual(model, table.phi);
  return table;
}

XiRational xi_rational(const RiskModel& model, const InitialValues& init) {
  const int m = model.step_bound();
  XiRational x;
  x.numerator.assign(static_cast<std::size_t>(m), 0.0);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i <= k; ++i) x.numerator[k] += init.pi[i] * model.F(-m + k - i);
  x.denominator = char_poly(model).coeffs;
  return x;
}

std::vector<double> xi_series(const std::vector<double>& num, const std::vector<double>& den, int n) {
  if (den.empty() || den[0] == 0.0)
    throw DomainError("malformed model: denominator of Xi vanishes at s = 0");
  std::vector<double> c(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  for (int k = 0; k < n; ++k) {
    double acc = k < static_cast<int>(num.size()) ? num[k] : 0.0;
    const int top = std::min<int>(k, static_cast<int>(den.size()) - 1);
    for (int j = 1; j <= top; ++j) acc -= den[j] * c[k - j];
    c[k] = acc / den[0];
  }
  return c;
}

namespace {

// Divides (s - alpha) out of p, highest power first; the remainder is dropped.
std::vector<cplx> deflate(const std::vector<cplx>& p, cplx alpha) {
  if (p.size() <= 1) return p;
  std::vector<cplx> q(p.size() - 1);
  q.back() = p.back();
  for (std::size_t k = q.size() - 1; k >= 1; --k) q[k - 1] = p[k] + alpha * q[k];
  return q;
}

}  // namespace

std::vector<double> xi_coeffs(const RiskModel& model, const InitialValues& init,
                              const RootSet& roots, int n) {
  model.require_net_profit();
  const XiRational x = xi_rational(model, init);
  std::vector<cplx> num(x.numerator.begin(), x.numerator.end());
  std::vector<cplx> den(x.denominator.begin(), x.denominator.end());
  auto alpha = roots.expanded();
  // Smallest moduli first keeps forward deflation stable.
  std::stable_sort(alpha.begin(), alpha.end(),
                   [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  for (const cplx& a : alpha) {
    num = deflate(num, a);
    den = deflate(den, a);
  }
  std::vector<double> rn(num.size()), rd(den.size());
  for (std::size_t k = 0; k < num.size(); ++k) rn[k] = num[k].real();
  for (std::size_t k = 0; k < den.size(); ++k) rd[k] = den[k].real();
  return xi_series(rn, rd, n);
}

TruncationBounds truncation_bounds(const RiskModel& truncated, double original_tail,
                                   const SurvivalTable& table) {
  if (table.phi.empty()) throw DomainError("truncation bounds need a non-empty table");
  // phi is nondecreasing, so any phi(u) with u <= m+1 keeps the lower bound valid.
  const int u = std::min(truncated.step_bound() + 1, table.u_max());
  return {table.phi[static_cast<std::size_t>(u)] * original_tail, original_tail};
}

}  // namespace ruinwalk
