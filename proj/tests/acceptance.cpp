// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// only for failures outside kKnownDiscrepancies.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/initial_values.hpp"
#include "ruinwalk/oracle.hpp"
#include "ruinwalk/pgf.hpp"
#include "ruinwalk/survival.hpp"
#include "support.hpp"

using namespace ruinwalk;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Reference table for the truncated Poisson models, u = 0..10.
const double kTable10[] = {0.0067795743, 0.0145425921, 0.0238700927, 0.0334952018,
                           0.0430669381, 0.0525424876, 0.0619232839, 0.0712111444,
                           0.0804070612, 0.0895119320, 0.0985266555};
const double kTable15[] = {0.0067795818, 0.0145456080, 0.0238701187, 0.0334952381,
                           0.0430669845, 0.0525425439, 0.0619233499, 0.0712112199,
                           0.0804071458, 0.0895120511, 0.0985268429};

// Entries of the m = 15 column that a 60-digit recomputation
// (tests/reference/poisson_reference.py) puts at 0.0145426080, 0.0895120260
// and 0.0985267585: no correct solver lands within 1e-8 of them.
const std::set<std::string> kKnownDiscrepancies = {"phi15(1)", "phi15(9)", "phi15(10)"};

struct Outcome {
  std::vector<std::string> failures;
  std::string detail;
};

// Every table produced by a golden run, for criterion 9.
std::vector<std::pair<std::string, std::vector<double>>> golden_tables;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void expect(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.failures.push_back(what);
}

struct Solved {
  RiskModel model;
  RootSet roots;
  InitialValues init;
  SurvivalTable table;
};

Solved solve(const RiskModel& model, int u_max) {
  RootSet rs = unit_disk_roots(model);
  InitialValues iv = solve_linear(model, rs);
  SurvivalTable t = ultimate_survival(model, iv, u_max);
  return {model, std::move(rs), std::move(iv), std::move(t)};
}

Outcome example1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Solved s = solve(testing::load_model("example1").model, 3);
  const double dt = seconds_since(t0);
  golden_tables.emplace_back("example1", s.table.phi);

  const double exact[] = {kSqrt2 / 4.0, 2.0 - kSqrt2, 2.0 * (kSqrt2 - 1.0), 8.0 - 5.0 * kSqrt2};
  double worst = 0.0;
  for (int u = 0; u <= 3; ++u) worst = std::max(worst, std::abs(s.table.phi[u] - exact[u]));
  expect(o, worst <= 1e-12, "phi");
  expect(o, s.roots.roots.size() == 1, "root count");
  const double root_err = std::abs(s.roots.roots.at(0).value - std::complex<double>(1.0 - kSqrt2, 0.0));
  expect(o, root_err <= 1e-12, "root");
  expect(o, dt < 0.1, "runtime");
  o.detail = "max |phi - exact| " + fmt("%.1e", worst) + ", root err " + fmt("%.1e", root_err) + ", " +
             fmt("%.4f", dt) + " s";
  return o;
}

Outcome example2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Solved s = solve(testing::load_model("example2").model, 4);
  const double dt = seconds_since(t0);
  golden_tables.emplace_back("example2", s.table.phi);

  const std::complex<double> golden_roots[] = {{-0.15434, 0.342115}, {-0.15434, -0.342115}, {-0.289014, 0.0}};
  double root_err = 0.0;
  expect(o, s.roots.total_multiplicity() == 3, "root count");
  for (const auto& g : golden_roots) {
    double best = INFINITY;
    for (const Root& r : s.roots.roots) best = std::min(best, std::abs(r.value - g));
    root_err = std::max(root_err, best);
  }
  expect(o, root_err <= 5e-6, "roots");
  const double golden_phi[] = {0.535194, 0.697233, 0.802783, 0.871536, 0.916321};
  double worst = 0.0;
  for (int u = 0; u <= 4; ++u) worst = std::max(worst, std::abs(s.table.phi[u] - golden_phi[u]));
  expect(o, worst <= 1e-6, "phi");
  expect(o, dt < 0.5, "runtime");
  o.detail = "root err " + fmt("%.1e", root_err) + ", max |phi - golden| " + fmt("%.1e", worst) + ", " +
             fmt("%.4f", dt) + " s";
  return o;
}

Outcome example3() {
  Outcome o;
  double worst_pi = 0.0, worst_phi0 = 0.0, worst_xi = 0.0;
  for (const auto& [name, p] : {std::pair{"example3_p01", 0.1}, {"example3_p05", 0.5}, {"example3_p09", 0.9}}) {
    const Solved s = solve(testing::load_model(name).model, 30);
    golden_tables.emplace_back(name, s.table.phi);
    expect(o, s.roots.roots.size() == 1 && s.roots.roots[0].multiplicity == 2,
           std::string(name) + " double root");
    const double alpha = testing::example3_alpha(p);
    if (!s.roots.roots.empty())
      expect(o, std::abs(s.roots.roots[0].value - alpha) < 1e-9, std::string(name) + " root");
    const double want[] = {1.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) worst_pi = std::max(worst_pi, std::abs(s.init.pi.at(i) - want[i]));
    worst_phi0 = std::max(worst_phi0, std::abs(s.table.phi[0] - (1.0 - p + std::sqrt(1.0 - p)) / 2.0));
    for (const double c : xi_coeffs(s.model, s.init, s.roots, 20))
      worst_xi = std::max(worst_xi, std::abs(c - 1.0));
  }
  expect(o, worst_pi <= 1e-9, "pi");
  expect(o, worst_phi0 <= 1e-10, "phi(0)");
  expect(o, worst_xi <= 1e-9, "xi");
  o.detail = "max |pi - (1,0,0)| " + fmt("%.1e", worst_pi) + ", phi(0) err " + fmt("%.1e", worst_phi0) +
             ", xi err " + fmt("%.1e", worst_xi);
  return o;
}

Outcome example4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Solved s10 = solve(testing::load_model("example4_m10").model, 10);
  const Solved s15 = solve(testing::load_model("example4_m15").model, 10);
  const double dt = seconds_since(t0);
  golden_tables.emplace_back("example4_m10", s10.table.phi);
  golden_tables.emplace_back("example4_m15", s15.table.phi);

  expect(o, s10.roots.total_multiplicity() == 9, "m10 root count");
  expect(o, s15.roots.total_multiplicity() == 14, "m15 root count");
  double worst10 = 0.0, worst_ok15 = 0.0;
  std::ostringstream off;
  for (int u = 0; u <= 10; ++u) {
    const double e10 = std::abs(s10.table.phi[u] - kTable10[u]);
    const double e15 = std::abs(s15.table.phi[u] - kTable15[u]);
    worst10 = std::max(worst10, e10);
    expect(o, e10 <= 1e-8, "phi10(" + std::to_string(u) + ")");
    if (e15 <= 1e-8) {
      worst_ok15 = std::max(worst_ok15, e15);
    } else {
      o.failures.push_back("phi15(" + std::to_string(u) + ")");
      off << " phi15(" << u << ") off by " << fmt("%.1e", e15) << ";";
    }
    const double diff = s15.table.phi[u] - s10.table.phi[u];
    expect(o, diff > 0.0 && diff <= 2e-7, "difference at u=" + std::to_string(u));
  }
  expect(o, dt < 5.0, "runtime");
  o.detail = "m10 max err " + fmt("%.1e", worst10) + ", m15 max err on other entries " +
             fmt("%.1e", worst_ok15) + ";" + off.str() + " " + fmt("%.3f", dt) + " s";
  return o;
}

Outcome root_counts() {
  Outcome o;
  std::mt19937_64 rng(20240301);
  int checked = 0, multiple = 0;
  for (int t = 0; t < 200; ++t) {
    const RiskModel model = testing::random_model(rng, 1, 8);
    try {
      const RootSet rs = unit_disk_roots(model);
      expect(o, rs.total_multiplicity() == model.step_bound() - 1, "model " + std::to_string(t));
      if (!rs.all_simple()) ++multiple;
    } catch (const std::exception& e) {
      o.failures.push_back("model " + std::to_string(t) + ": " + e.what());
    }
    ++checked;
  }
  o.detail = std::to_string(checked) + " models, m <= 8, " + std::to_string(multiple) + " with a multiple root";
  return o;
}

Outcome determinant_identities() {
  Outcome o;
  std::mt19937_64 rng(20240302);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const RiskModel model = testing::random_model(rng, 2, 6);
    const RootSet rs = unit_disk_roots(model);
    if (!rs.all_simple()) continue;
    const auto [lhs, rhs] = determinant_identity(model, rs);
    const double rel = std::abs(lhs - rhs) / std::abs(rhs);
    worst = std::max(worst, rel);
    expect(o, rel <= 1e-8, "model " + std::to_string(done));
    ++done;
  }
  o.detail = "100 simple-root models, m <= 6, max relative gap " + fmt("%.1e", worst);
  return o;
}

Outcome dual_routes() {
  Outcome o;
  double worst_pi = 0.0, worst_xi = 0.0;
  for (const char* name : {"example1", "example2", "example4_m10", "example4_m15"}) {
    const RiskModel model = testing::load_model(name).model;
    const RootSet rs = unit_disk_roots(model);
    const InitialValues lin = solve_linear(model, rs);
    const InitialValues closed = solve_closed_form(model, rs);
    for (std::size_t i = 0; i < lin.pi.size(); ++i) {
      const double d = std::abs(lin.pi[i] - closed.pi[i]);
      worst_pi = std::max(worst_pi, d);
      expect(o, d <= 1e-10, std::string(name) + " pi_" + std::to_string(i));
    }
  }
  for (const char* name : {"example1", "example2", "example3_p01", "example3_p05", "example3_p09"}) {
    const Solved s = solve(testing::load_model(name).model, 21);
    golden_tables.emplace_back(name, s.table.phi);
    const auto c = xi_coeffs(s.model, s.init, s.roots, 20);
    for (int k = 0; k < 20; ++k) {
      const double d = std::abs(c[k] - s.table.phi[k + 1]);
      worst_xi = std::max(worst_xi, d);
      expect(o, d <= 1e-9, std::string(name) + " xi_" + std::to_string(k));
    }
  }
  o.detail = "closed vs linear pi " + fmt("%.1e", worst_pi) + ", xi vs recurrence " + fmt("%.1e", worst_xi);
  return o;
}

Outcome oracles() {
  Outcome o;
  std::mt19937_64 rng(20240303);
  std::uniform_int_distribution<int> pick_T(1, 40);
  double worst_enum = 0.0;
  for (int t = 0; t < 50; ++t) {
    const RiskModel model = testing::random_model(rng, 1, 5);
    const int T = pick_T(rng);
    const SurvivalTable ft = finite_survival(model, 10, T);
    for (int u = 0; u <= 10; ++u) {
      const double d = std::abs(enumerate_finite(model, u, T) - ft.phi[u]);
      worst_enum = std::max(worst_enum, d);
      expect(o, d <= 1e-12, "enumeration model " + std::to_string(t));
    }
  }

  double worst_z = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [name, us] : {std::pair<const char*, std::vector<int>>{"example1", {0, 1, 2, 3, 5}},
                                 {"example4_m10", {0, 2, 5, 10}},
                                 {"example4_m15", {0, 5, 10}}}) {
    const RiskModel model = testing::load_model(name).model;
    SimConfig cfg;
    cfg.n_paths = 1000000;
    cfg.horizon_T = 200;
    cfg.seed = kDefaultSeed;
    cfg.u_values = us;
    const SimResult r = simulate(model, cfg);
    const SurvivalTable exact = finite_survival(model, us.back(), cfg.horizon_T);
    for (std::size_t i = 0; i < us.size(); ++i) {
      const double z = std::abs(r.estimate[i] - exact.phi[us[i]]) / r.se[i];
      worst_z = std::max(worst_z, z);
      expect(o, z <= 3.0, std::string(name) + " MC u=" + std::to_string(us[i]));
    }
  }
  o.detail = "enumeration gap " + fmt("%.1e", worst_enum) + " on 50 models; MC 1e6 paths T=200, max " +
             fmt("%.2f", worst_z) + " SE (" + fmt("%.1f", seconds_since(t0)) + " s)";
  return o;
}

Outcome residuals() {
  Outcome o;
  double worst = 0.0;
  for (const char* name : {"example1", "example2"}) {
    const RiskModel model = testing::load_model(name).model;
    const Solved s = solve(model, 40 + model.step_bound());
    golden_tables.emplace_back(name, s.table.phi);
    const double r = recurrence_residual(model, s.table.phi);
    worst = std::max(worst, r);
    expect(o, r <= 1e-9, std::string(name) + " residual");
  }
  std::size_t rows = 0;
  for (const auto& [name, phi] : golden_tables) {
    for (std::size_t u = 0; u < phi.size(); ++u) {
      ++rows;
      expect(o, phi[u] >= -1e-9 && phi[u] <= 1.0 + 1e-9, name + " bounds at u=" + std::to_string(u));
      if (u > 0) expect(o, phi[u] >= phi[u - 1] - 1e-9, name + " monotone at u=" + std::to_string(u));
    }
  }
  o.detail = "residual " + fmt("%.1e", worst) + " up to u = 40; bounds and monotonicity on " +
             std::to_string(golden_tables.size()) + " golden tables (" + std::to_string(rows) + " values)";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Example 1 golden values", example1},
      {"Example 2 golden values", example2},
      {"Example 3 double root", example3},
      {"truncated Poisson table", example4},
      {"root count on random models", root_counts},
      {"determinant identity on random models", determinant_identities},
      {"closed form vs linear solve, Xi vs recurrence", dual_routes},
      {"enumeration and Monte Carlo oracles", oracles},
      {"recurrence residual, bounds, monotonicity", residuals},
  };

  bool unexpected = false;
  int n = 0;
  for (const auto& [title, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = o.failures.empty();
    std::string line = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(n) + ": " + title +
                       " - " + o.detail;
    if (!pass) {
      bool all_known = true;
      line += " [failed:";
      for (const auto& f : o.failures) {
        line += " " + f;
        all_known = all_known && kKnownDiscrepancies.count(f) > 0;
      }
      line += "]";
      if (all_known) {
        line += " [known reference-table discrepancies, see README]";
      } else {
        unexpected = true;
      }
    }
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
  return unexpected ? 1 : 0;
}
