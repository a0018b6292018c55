#pragma once

// Survival probabilities: ultimate time phi(u) from the initial values, finite
// time phi(u, T) by convolution, and the generating function Xi(s) of phi(u+1).

#include <span>
#include <vector>

#include "ruinwalk/initial_values.hpp"
#include "ruinwalk/model.hpp"
#include "ruinwalk/pgf.hpp"

namespace ruinwalk {

struct SurvivalTable {
  enum class Kind { ultimate, finite };

  std::vector<double> phi;  // phi(0) .. phi(u_max)
  Kind kind = Kind::ultimate;
  int horizon_T = 0;       // T for finite tables and for the ultimate fallback
  double residual = 0.0;   // max |phi(u) - sum_i phi(i) f(u-i)| over checkable u
  int fallback_from = -1;  // first u taken from the finite-time fallback, -1 if none

  int u_max() const { return static_cast<int>(phi.size()) - 1; }
  bool used_fallback() const { return fallback_from >= 0; }
};

struct UltimateOptions {
  // Beyond the stability horizon phi(u) comes from phi(u, T) with T doubled
  // until phi(u, T) - phi(u, 2T) < bracket_tol. Without it, BlowupError.
  bool allow_fallback = true;
  double bracket_tol = 1e-10;
  int max_T = 1 << 16;
  // Predicted recurrence error above which the horizon ends.
  double horizon_tol = 1e-10;
  // Bounds and monotonicity slack.
  double check_tol = 1e-9;
};

// phi(i+1) = pi_0 + .. + pi_i for i < m; phi(0) = sum_{i=1}^m phi(i) f(-i);
// phi(u) for u > m from
//   phi(u) = (phi(u-m) - sum_{i=1}^{u-1} phi(i) f(u-m-i)) / f(-m).
// The recurrence divides by f(-m) each step; once its predicted error passes
// horizon_tol, or a value leaves [0, 1] or breaks monotonicity, the remaining
// entries come from the finite-time fallback (flagged) or BlowupError.
SurvivalTable ultimate_survival(const RiskModel& model, const InitialValues& init, int u_max,
                                const UltimateOptions& opts = {});

// Last u the recurrence can reach before its predicted error passes
// horizon_tol, starting from error estimates for phi(0) .. phi(m). Values up
// to m come straight from the initial values and are always returned. The
// second form assumes initial values accurate to rounding.
int stability_horizon(const RiskModel& model, std::span<const double> initial_error, int u_max,
                      double horizon_tol = 1e-10);
int stability_horizon(const RiskModel& model, int u_max, double horizon_tol = 1e-10);

// phi(u, 1) = F(u-1); phi(u, T) = sum_{k=-m}^{u-1} phi(u-k, T-1) f(k).
SurvivalTable finite_survival(const RiskModel& model, int u_max, int T);

// Rows T = 1..T_max of the same recurrence.
std::vector<SurvivalTable> finite_survival_grid(const RiskModel& model, int u_max, int T_max);

// max |phi(u) - sum_{i=1}^{u+m} phi(i) f(u-i)| for u <= u_max - m.
double recurrence_residual(const RiskModel& model, const std::vector<double>& phi);

// Numerator N(s) = sum_i pi_i sum_j s^{j+i} F(-m+j) and denominator
// P(s) = s^m (G(s) - 1) of Xi(s), ascending coefficients.
struct XiRational {
  std::vector<double> numerator;
  std::vector<double> denominator;
};
XiRational xi_rational(const RiskModel& model, const InitialValues& init);

// First n Taylor coefficients of num/den by long division.
std::vector<double> xi_series(const std::vector<double>& num, const std::vector<double>& den, int n);

// Taylor coefficients of Xi(s) up to order n-1 (coefficient k is phi(k+1)).
// The unit-disk roots are common zeros of N and P; they are divided out of
// both before the long division, otherwise rounding in pi excites the modes
// alpha^{-k} and the series drifts.
std::vector<double> xi_coeffs(const RiskModel& model, const InitialValues& init,
                              const RootSet& roots, int n);

struct TruncationBounds {
  double lower;
  double upper;
};

// Bounds on phi(0) - sum_{i=1}^m phi(i) f(-i) for the untruncated model:
// [phi(m+1) * tail, tail] with tail = P(X - c*theta <= -(m+1)). Tables that
// stop short of m+1 use their last entry, a smaller but still valid lower end.
TruncationBounds truncation_bounds(const RiskModel& truncated, double original_tail,
                                   const SurvivalTable& table);

}  // namespace ruinwalk
