#pragma once

// Generating functions of the walk and the roots of G_{X - c*theta}(s) = 1
// inside the closed unit disk.

#include <complex>
#include <span>
#include <vector>

#include "ruinwalk/model.hpp"

namespace ruinwalk {

using cplx = std::complex<double>;

// Sum_k weight[k] s^{offset+k}. Throws DomainError for s = 0 with a negative offset.
cplx pgf_eval(const Pmf& p, cplx s);

// P(s) = s^m (G_{X-c*theta}(s) - 1) with m the step bound, coefficients in
// ascending powers. Equals G_X(s) * sum_k P(c*theta=k) s^{m-k} - s^m when the
// claim has mass at 0.
struct CharPoly {
  std::vector<double> coeffs;
  int m = 0;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  cplx operator()(cplx s) const;
};

CharPoly char_poly(const RiskModel& model);

// Value and derivatives of a real-coefficient polynomial at s:
// result[k] = p^{(k)}(s), k = 0..order.
std::vector<cplx> poly_derivatives(std::span<const double> coeffs, cplx s, int order);

// Every root of the polynomial (companion-matrix eigenvalues), unpolished.
std::vector<cplx> all_roots(std::span<const double> coeffs);

// Aberth-Ehrlich iteration on all roots at once. The mutual repulsion keeps
// tightly packed roots from collapsing onto one another.
void refine_roots(std::span<const double> coeffs, std::vector<cplx>& roots, int max_iter = 100);

struct Root {
  cplx value;
  int multiplicity = 1;
  double residual = 0.0;  // |G_{X-c*theta}(value) - 1|
};

struct RootSet {
  std::vector<Root> roots;
  int m = 0;

  int total_multiplicity() const;
  bool all_simple() const;
  // Each root repeated according to its multiplicity.
  std::vector<cplx> expanded() const;
};

struct RootOptions {
  double cluster_tol = 1e-6;       // roots closer than this merge into one multiple root
  double exclusion_radius = 1e-7;  // ball around s = 1 that is discarded
  double boundary_tol = 1e-9;      // |s| <= 1 + boundary_tol counts as inside
  double residual_tol = 1e-8;      // max |G(root) - 1| after polishing
  double max_polish_shift = 1e-6;  // polishing may not move a root further
  double real_tol = 1e-10;         // |Im| below this snaps to the real axis
};

// The m-1 roots of G_{X-c*theta}(s) = 1 in 0 < |s| <= 1, s != 1, with
// multiplicities. Requires the net profit condition.
// Throws RootCountError / RootQualityError.
RootSet unit_disk_roots(const RiskModel& model, const RootOptions& opts = {});

}  // namespace ruinwalk
