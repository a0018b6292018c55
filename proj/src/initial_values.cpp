#include "ruinwalk/initial_values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include "ruinwalk/errors.hpp"

namespace ruinwalk {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

using qreal = boost::multiprecision::cpp_bin_float_quad;
using qcplx = boost::multiprecision::cpp_complex_quad;

// Relative shift applied to every root for the sensitivity estimate.
constexpr double kRootJitter = 8.0 * kEps;

double mag(const qcplx& z) {
  return std::abs(static_cast<double>(z.real())) + std::abs(static_cast<double>(z.imag()));
}

// The initial-value system in quad precision, roots scaled by (1 + jitter).
struct QuadSystem {
  int m;
  std::vector<qcplx> a;  // row-major
  std::vector<qcplx> b;
};

QuadSystem assemble_quad(const RiskModel& model, const RootSet& roots, double jitter) {
  const int m = model.step_bound();
  const Pmf& step = model.step();
  // F(-m+j) and f(-j) summed exactly from the double weights.
  std::vector<qreal> F(static_cast<std::size_t>(m));
  qreal run = 0;
  for (int j = 0; j < m; ++j) {
    run += qreal(step.at(-m + j));
    F[j] = run;
  }
  QuadSystem q{m, std::vector<qcplx>(static_cast<std::size_t>(m) * m),
               std::vector<qcplx>(static_cast<std::size_t>(m))};
  int row = 0;
  for (const Root& root : roots.roots) {
    const qreal scale = qreal(1) + qreal(jitter);
    const qcplx a(qreal(root.value.real()) * scale, qreal(root.value.imag()) * scale);
    std::vector<qcplx> pw(static_cast<std::size_t>(m) + 1);
    pw[0] = qcplx(1);
    for (int k = 1; k <= m; ++k) pw[k] = pw[k - 1] * a;
    for (int n = 0; n < root.multiplicity; ++n, ++row) {
      for (int i = 0; i < m; ++i) {
        qcplx acc(0);
        for (int j = 0; j <= m - i - 1; ++j) {
          const int power = j + i;
          if (power < n) continue;
          double binom = 1.0;
          for (int t = 0; t < n; ++t) binom = binom * (power - t) / (t + 1);
          acc += pw[power - n] * (qreal(binom) * F[j]);
        }
        q.a[static_cast<std::size_t>(row * m + i)] = acc;
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    qreal acc = 0;
    for (int j = i + 1; j <= m; ++j) acc += qreal(j - i) * qreal(step.at(-j));
    q.a[static_cast<std::size_t>((m - 1) * m + i)] = qcplx(acc);
  }
  qreal drift = 0;
  for (std::size_t k = 0; k < step.size(); ++k)
    drift += qreal(step.offset() + static_cast<int>(k)) * qreal(step.weights()[k]);
  q.b[static_cast<std::size_t>(m - 1)] = qcplx(-drift);
  return q;
}

std::vector<qcplx> lu_solve_quad(QuadSystem q) {
  const int m = q.m;
  auto at = [&](int r, int c) -> qcplx& { return q.a[static_cast<std::size_t>(r * m + c)]; };
  for (int k = 0; k < m; ++k) {
    int p = k;
    for (int r = k + 1; r < m; ++r)
      if (mag(at(r, k)) > mag(at(p, k))) p = r;
    if (mag(at(p, k)) == 0.0) throw SingularSystemError("initial-value system is exactly singular");
    if (p != k) {
      for (int c = 0; c < m; ++c) std::swap(at(k, c), at(p, c));
      std::swap(q.b[k], q.b[p]);
    }
    for (int r = k + 1; r < m; ++r) {
      const qcplx factor = at(r, k) / at(k, k);
      for (int c = k + 1; c < m; ++c) at(r, c) -= factor * at(k, c);
      q.b[r] -= factor * q.b[k];
    }
  }
  std::vector<qcplx> x(static_cast<std::size_t>(m));
  for (int r = m - 1; r >= 0; --r) {
    qcplx acc = q.b[r];
    for (int c = r + 1; c < m; ++c) acc -= at(r, c) * x[c];
    x[r] = acc / at(r, r);
  }
  return x;
}

// Closed-form cascade in quad precision; returns pi (complex, before the
// imaginary part is stripped).
std::vector<qcplx> closed_form_quad(const RiskModel& model, const RootSet& roots, double jitter) {
  const int m = model.step_bound();
  const Pmf& step = model.step();
  const qreal scale = qreal(1) + qreal(jitter);
  std::vector<qcplx> alpha;
  for (const cplx& a : roots.expanded())
    alpha.emplace_back(qreal(a.real()) * scale, qreal(a.imag()) * scale);
  std::vector<qcplx> e(alpha.size() + 1, qcplx(0));
  e[0] = qcplx(1);
  for (std::size_t n = 0; n < alpha.size(); ++n)
    for (std::size_t k = n + 1; k >= 1; --k) e[k] += alpha[n] * e[k - 1];
  qcplx prod(1);
  for (const qcplx& a : alpha) prod *= a - qcplx(1);
  std::vector<qreal> F(static_cast<std::size_t>(m));
  qreal run = 0;
  for (int j = 0; j < m; ++j) {
    run += qreal(step.at(-m + j));
    F[j] = run;
  }
  qreal drift = 0;
  for (std::size_t k = 0; k < step.size(); ++k)
    drift += qreal(step.offset() + static_cast<int>(k)) * qreal(step.weights()[k]);
  const qreal fm = qreal(step.at(-m));

  // The row polynomial sum_k c_k s^k, c_k = sum_{i<=k} pi_i F(-m+k-i), vanishes at
  // every root, so c_k = c_{m-1} (-1)^{m-1-k} e_{m-1-k}; the mean row fixes
  // c~_{m-1} = (-1)^{m+1} / prod(alpha_j - 1). Hence c~_k = (-1)^k e_{m-1-k} / prod.
  std::vector<qcplx> pt(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    qcplx ck = e[m - 1 - k] / prod;
    if (k % 2 == 1) ck = -ck;
    for (int i = 0; i < k; ++i) ck -= pt[i] * F[k - i];
    pt[k] = ck / fm;
  }
  for (qcplx& v : pt) v *= qcplx(-drift);
  return pt;
}

// Rounds to double and fills the error estimate from the jittered solve.
InitialValues finish(const std::vector<qcplx>& x, const std::vector<qcplx>& jittered,
                     double drift_pos, const char* route) {
  InitialValues out;
  out.drift_pos = drift_pos;
  const std::size_t m = x.size();
  out.pi.resize(m);
  out.error.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double re = static_cast<double>(x[i].real());
    const double im = static_cast<double>(x[i].imag());
    const double shift = static_cast<double>(boost::multiprecision::abs(x[i] - jittered[i]));
    out.pi[i] = re;
    out.max_imag = std::max(out.max_imag, std::abs(im));
    out.error[i] = shift + std::abs(im) + 4.0 * kEps * std::abs(re);
  }
  if (out.max_imag > kImagDust) {
    std::ostringstream os;
    os << route << " initial values are not real: imaginary part " << out.max_imag << " exceeds "
       << kImagDust;
    throw NumericalError(os.str());
  }
  return out;
}

}  // namespace

std::string RowKind::label() const {
  std::ostringstream os;
  os.precision(10);
  switch (kind) {
    case Kind::root:
      os << "root(" << alpha.real() << (alpha.imag() < 0 ? "-" : "+") << std::abs(alpha.imag()) << "i)";
      break;
    case Kind::derivative:
      os << "derivative(" << alpha.real() << (alpha.imag() < 0 ? "-" : "+") << std::abs(alpha.imag())
         << "i, n=" << order << ")";
      break;
    case Kind::mean:
      os << "mean";
      break;
  }
  return os.str();
}

InitSystem build_system(const RiskModel& model, const RootSet& roots) {
  model.require_net_profit();
  const int m = model.step_bound();
  if (roots.m != m || roots.total_multiplicity() != m - 1) {
    std::ostringstream os;
    os << "root set does not match the model: need " << m - 1 << " roots for m = " << m << ", got "
       << roots.total_multiplicity();
    throw DomainError(os.str());
  }
  // F(-m+j), j = 0..m-1.
  std::vector<double> F(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) F[j] = model.F(-m + j);

  InitSystem sys;
  sys.m = m;
  sys.matrix.assign(static_cast<std::size_t>(m) * m, 0.0);
  sys.rhs.assign(static_cast<std::size_t>(m), 0.0);

  int row = 0;
  for (const Root& root : roots.roots) {
    const cplx a = root.value;
    for (int n = 0; n < root.multiplicity; ++n, ++row) {
      // d^n/ds^n sum_j s^{j+i} F(-m+j) / n!  =  sum_j C(j+i, n) s^{j+i-n} F(-m+j).
      for (int i = 0; i < m; ++i) {
        cplx acc = 0.0;
        for (int j = 0; j <= m - i - 1; ++j) {
          const int power = j + i;
          if (power < n) continue;
          double binom = 1.0;
          for (int t = 0; t < n; ++t) binom = binom * (power - t) / (t + 1);
          acc += binom * std::pow(a, power - n) * F[j];
        }
        sys(row, i) = acc;
      }
      sys.row_kinds.push_back({n == 0 ? RowKind::Kind::root : RowKind::Kind::derivative, a, n});
    }
  }
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = i + 1; j <= m; ++j) acc += (j - i) * model.f(-j);
    sys(m - 1, i) = acc;
  }
  sys.rhs[m - 1] = -model.drift();
  sys.row_kinds.push_back({RowKind::Kind::mean, {}, 0});
  return sys;
}

namespace {

struct Factored {
  int m;
  std::vector<cplx> lu;       // row-major, column-equilibrated
  std::vector<int> perm;      // row permutation
  std::vector<double> scale;  // column scales
  std::vector<double> row_scale;
  int sign = 1;
};

// Column then row equilibration, then LU with partial pivoting; returns the failing
// column (or -1) through bad_column.
Factored factor(const InitSystem& sys, int& bad_column, bool check_pivots) {
  const int m = sys.m;
  Factored f{m, sys.matrix, {}, std::vector<double>(static_cast<std::size_t>(m), 1.0),
             std::vector<double>(static_cast<std::size_t>(m), 1.0), 1};
  f.perm.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) f.perm[i] = i;
  auto at = [&](int r, int c) -> cplx& { return f.lu[static_cast<std::size_t>(r * m + c)]; };

  for (int c = 0; c < m; ++c) {
    double mx = 0.0;
    for (int r = 0; r < m; ++r) mx = std::max(mx, std::abs(at(r, c)));
    if (mx > 0.0) {
      f.scale[c] = mx;
      for (int r = 0; r < m; ++r) at(r, c) /= mx;
    }
  }
  // Root rows of small roots are tiny next to the mean row.
  for (int r = 0; r < m; ++r) {
    double mx = 0.0;
    for (int c = 0; c < m; ++c) mx = std::max(mx, std::abs(at(r, c)));
    if (mx > 0.0) {
      f.row_scale[r] = mx;
      for (int c = 0; c < m; ++c) at(r, c) /= mx;
    }
  }
  bad_column = -1;
  for (int k = 0; k < m; ++k) {
    int p = k;
    for (int r = k + 1; r < m; ++r)
      if (std::abs(at(r, k)) > std::abs(at(p, k))) p = r;
    if (std::abs(at(p, k)) < kPivotFloor) {
      if (bad_column < 0) bad_column = k;
      if (check_pivots) return f;
      if (at(p, k) == cplx(0.0)) continue;
    }
    if (p != k) {
      for (int c = 0; c < m; ++c) std::swap(at(k, c), at(p, c));
      std::swap(f.perm[k], f.perm[p]);
      f.sign = -f.sign;
    }
    for (int r = k + 1; r < m; ++r) {
      const cplx factor = at(r, k) / at(k, k);
      at(r, k) = factor;
      for (int c = k + 1; c < m; ++c) at(r, c) -= factor * at(k, c);
    }
  }
  return f;
}

std::string kinds_of(const InitSystem& sys) {
  std::string s;
  for (const RowKind& k : sys.row_kinds) s += "\n  " + k.label();
  return s;
}

}  // namespace

double system_residual(const InitSystem& sys, std::span<const double> pi) {
  double worst = 0.0;
  for (int r = 0; r < sys.m; ++r) {
    cplx acc = 0.0;
    for (int c = 0; c < sys.m; ++c) acc += sys(r, c) * pi[c];
    worst = std::max(worst, std::abs(acc - sys.rhs[r]));
  }
  return worst;
}

InitialValues solve_linear(const InitSystem& sys) {
  const int m = sys.m;
  int bad = -1;
  const Factored f = factor(sys, bad, true);
  if (bad >= 0) {
    std::ostringstream os;
    os << "initial-value system is singular: scaled pivot below " << kPivotFloor << " in column "
       << bad << "; rows:" << kinds_of(sys);
    throw SingularSystemError(os.str());
  }
  auto at = [&](int r, int c) { return f.lu[static_cast<std::size_t>(r * m + c)]; };
  // Solves the equilibrated system for right-hand side b (original row order).
  auto lu_solve = [&](const std::vector<cplx>& b) {
    std::vector<cplx> y(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) {
      cplx acc = b[f.perm[r]] / f.row_scale[f.perm[r]];
      for (int c = 0; c < r; ++c) acc -= at(r, c) * y[c];
      y[r] = acc;
    }
    for (int r = m - 1; r >= 0; --r) {
      cplx acc = y[r];
      for (int c = r + 1; c < m; ++c) acc -= at(r, c) * y[c];
      y[r] = acc / at(r, r);
    }
    return y;
  };
  std::vector<cplx> y = lu_solve(sys.rhs);

  // Refinement with long double residuals. Partial pivoting is only normwise
  // stable, which leaves the columns with tiny coefficients (large i when
  // f(-m) is small) poorly resolved; a few sweeps recover them.
  using lcplx = std::complex<long double>;
  for (int sweep = 0; sweep < 5; ++sweep) {
    std::vector<cplx> r(static_cast<std::size_t>(m));
    for (int row = 0; row < m; ++row) {
      lcplx acc = lcplx(sys.rhs[row]);
      for (int c = 0; c < m; ++c)
        acc -= lcplx(sys(row, c)) * (lcplx(y[c]) / static_cast<long double>(f.scale[c]));
      r[row] = cplx(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    const std::vector<cplx> d = lu_solve(r);
    double change = 0.0, size = 0.0;
    for (int i = 0; i < m; ++i) {
      y[i] += d[i];
      change = std::max(change, std::abs(d[i]));
      size = std::max(size, std::abs(y[i]));
    }
    if (change <= kEps * size) break;
  }

  InitialValues out;
  out.drift_pos = sys.rhs[m - 1].real();
  out.pi.resize(static_cast<std::size_t>(m));
  out.error.resize(static_cast<std::size_t>(m));
  double y_max = 0.0, y_imag = 0.0;
  for (int i = 0; i < m; ++i) {
    y_max = std::max(y_max, std::abs(y[i]));
    y_imag = std::max(y_imag, std::abs(y[i].imag()));
    const cplx v = y[i] / f.scale[i];
    out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
    out.pi[i] = v.real();
    out.error[i] = 2.0 * std::abs(v.imag()) + 4.0 * kEps * std::abs(v.real());
  }
  if (y_imag > kImagDust * y_max) {
    std::ostringstream os;
    os << "initial values are not real: scaled imaginary part " << y_imag / y_max << " exceeds "
       << kImagDust;
    throw NumericalError(os.str());
  }
  out.residual = system_residual(sys, out.pi);
  return out;
}

cplx determinant(const InitSystem& sys) {
  int bad = -1;
  const Factored f = factor(sys, bad, false);
  cplx det = static_cast<double>(f.sign);
  for (int k = 0; k < sys.m; ++k)
    det *= f.lu[static_cast<std::size_t>(k * sys.m + k)] * f.scale[k] * f.row_scale[k];
  return det;
}

std::vector<cplx> elementary_symmetric(std::span<const cplx> values) {
  std::vector<cplx> e(values.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t n = 0; n < values.size(); ++n)
    for (std::size_t k = n + 1; k >= 1; --k) e[k] += values[n] * e[k - 1];
  return e;
}

InitialValues solve_closed_form(const RiskModel& model, const RootSet& roots) {
  model.require_net_profit();
  if (!roots.all_simple())
    throw NotApplicableError("closed form needs simple roots; use the linear solve for multiple roots");
  const int m = model.step_bound();
  if (roots.m != m || roots.total_multiplicity() != m - 1)
    throw DomainError("root set does not match the model");
  InitialValues out = finish(closed_form_quad(model, roots, 0.0),
                             closed_form_quad(model, roots, kRootJitter), -model.drift(),
                             "closed-form");
  out.residual = system_residual(build_system(model, roots), out.pi);
  return out;
}

InitialValues solve_linear(const RiskModel& model, const RootSet& roots) {
  const InitSystem sys = build_system(model, roots);
  // The double system screens for (near) singularity with the usual pivot floor.
  int bad = -1;
  factor(sys, bad, true);
  if (bad >= 0) {
    std::ostringstream os;
    os << "initial-value system is singular: scaled pivot below " << kPivotFloor << " in column "
       << bad << "; rows:" << kinds_of(sys);
    throw SingularSystemError(os.str());
  }
  InitialValues out = finish(lu_solve_quad(assemble_quad(model, roots, 0.0)),
                             lu_solve_quad(assemble_quad(model, roots, kRootJitter)),
                             -model.drift(), "linear-solve");
  out.residual = system_residual(sys, out.pi);
  return out;
}

std::pair<cplx, cplx> determinant_identity(const RiskModel& model, const RootSet& roots) {
  const InitSystem sys = build_system(model, roots);
  const int m = sys.m;
  const auto alpha = roots.expanded();
  cplx rhs = ((m - 1) % 2 == 0 ? 1.0 : -1.0) * std::pow(model.f(-m), m);
  for (const cplx& a : alpha) rhs *= a - 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (std::size_t j = i + 1; j < alpha.size(); ++j) rhs *= alpha[j] - alpha[i];
  return {determinant(sys), rhs};
}

double root_equation_residual(const RiskModel& model, const RootSet& roots,
                              const InitialValues& init) {
  const int m = model.step_bound();
  double worst = 0.0;
  for (const Root& r : roots.roots) {
    cplx acc = 0.0;
    for (int i = 0; i < m; ++i) {
      cplx inner = 0.0;
      for (int j = i + 1; j <= m; ++j) inner += (1.0 - std::pow(r.value, i - j)) * model.f(-j);
      acc += init.pi[i] * inner;
    }
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace ruinwalk
