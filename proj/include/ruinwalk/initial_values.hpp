#pragma once

// Initial values pi_i = P(M = i), i < m, of the walk's maximum M, from the
// linear system that pairs one row per unit-disk root (or per derivative
// order of a multiple root) with the mean row.

#include <string>
#include <utility>
#include <vector>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/model.hpp"
#include "ruinwalk/pgf.hpp"

namespace ruinwalk {

struct RowKind {
  enum class Kind { root, derivative, mean };
  Kind kind = Kind::mean;
  cplx alpha{};
  int order = 0;  // derivative order (0 for plain root rows)

  std::string label() const;
};

// Row-major m x m complex system A * pi = B.
struct InitSystem {
  int m = 0;
  std::vector<cplx> matrix;
  std::vector<cplx> rhs;
  std::vector<RowKind> row_kinds;

  cplx& operator()(int r, int c) { return matrix[static_cast<std::size_t>(r * m + c)]; }
  const cplx& operator()(int r, int c) const { return matrix[static_cast<std::size_t>(r * m + c)]; }
};

struct InitialValues {
  std::vector<double> pi;  // pi_0 .. pi_{m-1}
  double drift_pos = 0.0;  // c E(theta) - E(X)
  double residual = 0.0;   // max |A pi - B|
  double max_imag = 0.0;   // largest imaginary part stripped from pi
  // Per-component error estimate: the change in pi_i when every root moves by
  // a few ulps, plus the stripped imaginary part. Components whose every
  // coefficient is tiny (large i when f(-m) is small) are poorly determined.
  std::vector<double> error;
};

inline constexpr double kImagDust = 1e-9;
inline constexpr double kPivotFloor = 1e-13;

// Root rows sum_j alpha^{j+i} F(-m+j); a root of multiplicity r adds the
// derivative rows of orders 1..r-1 (scaled by 1/n!); the last row is the mean
// row sum_{j>i} (j-i) f(-j) with right-hand side E(c*theta - X).
InitSystem build_system(const RiskModel& model, const RootSet& roots);

// Complex Gaussian elimination with partial pivoting after column
// and row equilibration. Throws SingularSystemError (with row kinds) if a
// scaled pivot falls below kPivotFloor, NumericalError if the equilibrated
// solution is not real to kImagDust.
InitialValues solve_linear(const InitSystem& sys);

// Assembles and solves the system in quad precision (113-bit significand)
// from the double roots and step weights. Rounding in double would cost
// several digits when f(-m) is small. The double system is still screened
// against kPivotFloor.
InitialValues solve_linear(const RiskModel& model, const RootSet& roots);

// Closed-form route for simple roots: pi~_k from the elementary symmetric
// polynomials of the roots and a cascade over earlier pi~ (which divides by
// f(-m) at each step, so it runs in quad precision as well). Throws
// NotApplicableError when a multiple root is present.
InitialValues solve_closed_form(const RiskModel& model, const RootSet& roots);

class NotApplicableError : public DomainError {
 public:
  using DomainError::DomainError;
};

// e_0 = 1, e_1, .., e_n of the given values.
std::vector<cplx> elementary_symmetric(std::span<const cplx> values);

// Determinant of the assembled matrix and the product formula
// (-1)^{m-1} f(-m)^m prod(alpha_j - 1) prod_{i<j}(alpha_j - alpha_i).
std::pair<cplx, cplx> determinant_identity(const RiskModel& model, const RootSet& roots);

// Determinant by LU with partial pivoting.
cplx determinant(const InitSystem& sys);

// max over roots of |sum_i pi_i sum_{j=i+1}^m (1 - alpha^{i-j}) f(-j)|.
double root_equation_residual(const RiskModel& model, const RootSet& roots,
                              const InitialValues& init);

// max |A pi - B| for a real pi.
double system_residual(const InitSystem& sys, std::span<const double> pi);

}  // namespace ruinwalk
