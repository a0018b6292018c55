#include "ruinwalk/pgf.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ruinwalk/errors.hpp"

namespace ruinwalk {

cplx pgf_eval(const Pmf& p, cplx s) {
  if (s == cplx(0.0) && p.offset() < 0)
    throw DomainError("generating function with negative support is singular at s = 0");
  cplx acc = 0.0;
  const auto& w = p.weights();
  for (std::size_t k = w.size(); k-- > 0;) acc = acc * s + w[k];
  return acc * std::pow(s, p.offset());
}

cplx CharPoly::operator()(cplx s) const {
  cplx acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * s + coeffs[k];
  return acc;
}

CharPoly char_poly(const RiskModel& model) {
  const Pmf& step = model.step();
  const int m = model.step_bound();
  if (!(step.at(-m) > 0.0))
    throw DomainError("degenerate model: f(-m) = 0, interarrival support was not trimmed");
  // The step weights are already the product G_X(s) * sum_k P(c*theta=k) s^{m-k}
  // (see step_pmf); shifting by the step bound leaves only the s^m subtraction.
  CharPoly p;
  p.m = m;
  p.coeffs = step.weights();
  if (static_cast<int>(p.coeffs.size()) <= m) p.coeffs.resize(static_cast<std::size_t>(m) + 1, 0.0);
  p.coeffs[static_cast<std::size_t>(m)] -= 1.0;
  while (p.coeffs.size() > 1 && p.coeffs.back() == 0.0) p.coeffs.pop_back();
  return p;
}

std::vector<cplx> poly_derivatives(std::span<const double> coeffs, cplx s, int order) {
  const int d = static_cast<int>(coeffs.size()) - 1;
  std::vector<cplx> a(coeffs.begin(), coeffs.end());
  std::vector<cplx> out(static_cast<std::size_t>(order) + 1, 0.0);
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > d) break;
    for (int i = d - 1; i >= k; --i) a[i] += s * a[i + 1];
    if (k > 0) factorial *= k;
    out[k] = a[k] * factorial;
  }
  return out;
}

std::vector<cplx> all_roots(std::span<const double> coeffs) {
  const int d = static_cast<int>(coeffs.size()) - 1;
  if (d < 1) return {};
  if (coeffs.back() == 0.0) throw DomainError("leading coefficient must be non-zero");
  // Rescale s = sigma*t so the constant and leading coefficients have equal size.
  const double sigma =
      coeffs.front() != 0.0 ? std::pow(std::abs(coeffs.front() / coeffs.back()), 1.0 / d) : 1.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  const double lead = coeffs.back() * std::pow(sigma, d);
  for (int i = 0; i < d; ++i) {
    if (i > 0) companion(i, i - 1) = 1.0;
    companion(i, d - 1) = -coeffs[i] * std::pow(sigma, i) / lead;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("companion eigenvalue iteration failed");
  std::vector<cplx> roots(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) roots[i] = sigma * solver.eigenvalues()[i];
  return roots;
}

void refine_roots(std::span<const double> coeffs, std::vector<cplx>& roots, int max_iter) {
  const std::size_t n = roots.size();
  std::vector<bool> done(n, false);
  for (int it = 0; it < max_iter; ++it) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const auto d = poly_derivatives(coeffs, roots[i], 1);
      if (d[0] == cplx(0.0)) {
        done[i] = true;
        continue;
      }
      const cplx w = d[0] / d[1];
      cplx repulsion = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && roots[j] != roots[i]) repulsion += 1.0 / (roots[i] - roots[j]);
      const cplx step = w / (1.0 - w * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) {
        done[i] = true;
        continue;
      }
      roots[i] -= step;
      if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(roots[i]))
        done[i] = true;
      else
        moved = true;
    }
    if (!moved) break;
  }
}

int RootSet::total_multiplicity() const {
  return std::accumulate(roots.begin(), roots.end(), 0,
                         [](int acc, const Root& r) { return acc + r.multiplicity; });
}

bool RootSet::all_simple() const {
  return std::all_of(roots.begin(), roots.end(), [](const Root& r) { return r.multiplicity == 1; });
}

std::vector<cplx> RootSet::expanded() const {
  std::vector<cplx> out;
  for (const Root& r : roots) out.insert(out.end(), static_cast<std::size_t>(r.multiplicity), r.value);
  return out;
}

namespace {

std::string describe(const std::vector<cplx>& roots) {
  std::ostringstream os;
  os.precision(10);
  for (const cplx& r : roots) os << "\n  " << r.real() << (r.imag() < 0 ? " - " : " + ")
                                 << std::abs(r.imag()) << "i  |s| = " << std::abs(r);
  return os.str();
}

// Single-linkage clusters of points closer than tol.
std::vector<std::vector<cplx>> cluster(const std::vector<cplx>& pts, double tol) {
  std::vector<int> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (std::abs(pts[i] - pts[j]) < tol) parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
  std::vector<std::vector<cplx>> groups;
  std::vector<int> slot(pts.size(), -1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int r = find(static_cast<int>(i));
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(pts[i]);
  }
  return groups;
}

// Newton on P^{(r-1)}, which has a simple root where P has an r-fold one.
cplx polish(const CharPoly& p, cplx start, int multiplicity, const RootOptions& opts) {
  cplx s = start;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 50; ++it) {
    const auto d = poly_derivatives(p.coeffs, s, multiplicity);
    const cplx g = d[multiplicity - 1];
    const cplx dg = d[multiplicity];
    if (g == cplx(0.0) || dg == cplx(0.0)) break;
    const cplx step = g / dg;
    const double len = std::abs(step);
    if (!(len < last_step) && it > 2) break;
    s -= step;
    last_step = len;
    if (len <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) break;
  }
  if (std::abs(s - start) > opts.max_polish_shift) {
    std::ostringstream os;
    os << "root polishing moved " << start << " by " << std::abs(s - start)
       << ", more than " << opts.max_polish_shift << "; the cluster tolerance is inconsistent";
    throw RootQualityError(os.str());
  }
  return s;
}

}  // namespace

RootSet unit_disk_roots(const RiskModel& model, const RootOptions& opts) {
  model.require_net_profit();
  const CharPoly p = char_poly(model);
  const int m = p.m;

  auto raw = all_roots(p.coeffs);
  refine_roots(p.coeffs, raw);
  std::vector<cplx> candidates;
  for (const cplx& r : raw)
    if (std::abs(r) <= 1.0 + 1e-3 && std::abs(r - 1.0) > opts.exclusion_radius) candidates.push_back(r);

  std::vector<Root> found;
  for (const auto& group : cluster(candidates, opts.cluster_tol)) {
    const int mult = static_cast<int>(group.size());
    const cplx centre = std::accumulate(group.begin(), group.end(), cplx(0.0)) / double(mult);
    const cplx s = polish(p, centre, mult, opts);
    if (std::abs(s) > 1.0 + opts.boundary_tol || std::abs(s - 1.0) <= opts.exclusion_radius) continue;
    if (mult > 1) {
      // Lower derivatives must vanish relative to P^{(r)} for a genuine r-fold root.
      const auto d = poly_derivatives(p.coeffs, s, mult);
      for (int k = 1; k < mult; ++k) {
        if (std::abs(d[k]) > std::abs(d[mult]) * std::pow(opts.cluster_tol, mult - k)) {
          std::ostringstream os;
          os << "cluster of " << mult << " roots near " << s
             << " is not a multiple root: |P^(" << k << ")| = " << std::abs(d[k]);
          throw RootQualityError(os.str());
        }
      }
    }
    found.push_back({s, mult, 0.0});
  }

  // Conjugate closure: snap near-real roots, average each pair.
  std::vector<bool> paired(found.size(), false);
  for (std::size_t i = 0; i < found.size(); ++i) {
    cplx& a = found[i].value;
    if (std::abs(a.imag()) <= opts.real_tol) {
      a = cplx(a.real(), 0.0);
      paired[i] = true;
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (paired[i]) continue;
    std::size_t best = found.size();
    double best_dist = opts.cluster_tol;
    for (std::size_t j = i + 1; j < found.size(); ++j) {
      if (paired[j] || found[j].multiplicity != found[i].multiplicity) continue;
      const double dist = std::abs(found[j].value - std::conj(found[i].value));
      if (dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    if (best == found.size()) {
      std::ostringstream os;
      os << "root " << found[i].value << " has no conjugate partner";
      throw RootQualityError(os.str());
    }
    const cplx avg = 0.5 * (found[i].value + std::conj(found[best].value));
    found[i].value = avg;
    found[best].value = std::conj(avg);
    paired[i] = paired[best] = true;
  }

  RootSet set;
  set.m = m;
  for (Root& r : found) {
    r.residual = std::abs(p(r.value)) / std::pow(std::abs(r.value), m);
    if (!(r.residual <= opts.residual_tol)) {
      std::ostringstream os;
      os << "root " << r.value << " has residual |G(s) - 1| = " << r.residual << " > "
         << opts.residual_tol;
      throw RootQualityError(os.str());
    }
  }
  std::sort(found.begin(), found.end(), [](const Root& a, const Root& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() > b.value.imag();
  });
  set.roots = std::move(found);

  if (set.total_multiplicity() != m - 1) {
    std::ostringstream os;
    os << "expected " << m - 1 << " roots of G(s) = 1 in the closed unit disk (s != 1), found "
       << set.total_multiplicity() << "; all roots of the characteristic polynomial:"
       << describe(raw);
    throw RootCountError(os.str());
  }
  return set;
}

}  // namespace ruinwalk
