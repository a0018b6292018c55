#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/survival.hpp"
#include "support.hpp"

using namespace ruinwalk;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Closed form for the first example: phi(u) = 1 - (sqrt 2 - 1)^u, u >= 1.
double example1_phi(int u) {
  if (u == 0) return kSqrt2 / 4.0;
  return 1.0 - std::pow(kSqrt2 - 1.0, u);
}

// 60-digit values from tests/reference/poisson_reference.py.
const double kPhi10[] = {0.00677957429260352, 0.0145425921140811, 0.0238700926784538,
                         0.0334952017833317,  0.0430669380686398, 0.0525424876068477,
                         0.0619232838640669,  0.0712111444355151, 0.0804070612128684,
                         0.0895119319925327,  0.0985266555297016};
const double kPhi15[] = {0.00677958179564521, 0.0145426080492028, 0.0238701186764597,
                         0.0334952380706955,  0.0430669844850031, 0.0525425439465263,
                         0.0619233499249837,  0.0712112200195854, 0.0804071461250556,
                         0.0895120260407152,  0.0985267585246446};

struct Solved {
  RiskModel model;
  RootSet roots;
  InitialValues init;
};

Solved solve(const RiskModel& model) {
  RootSet rs = unit_disk_roots(model);
  InitialValues iv = solve_linear(model, rs);
  return {model, std::move(rs), std::move(iv)};
}

double poly_eval(const std::vector<double>& c, std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return std::abs(acc);
}

std::complex<double> poly_at(const std::vector<double>& c, std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

}  // namespace

TEST_CASE("Example 1 ultimate survival matches the closed form") {
  const Solved s = solve(testing::example1());
  const SurvivalTable t = ultimate_survival(s.model, s.init, 50);
  REQUIRE(t.u_max() == 50);
  CHECK(t.kind == SurvivalTable::Kind::ultimate);
  const int exact_to = t.used_fallback() ? t.fallback_from - 1 : 50;
  CHECK(exact_to >= 8);
  for (int u = 0; u <= 50; ++u) {
    const double tol = u <= exact_to ? 1e-12 : 1e-9;
    CHECK(std::abs(t.phi[u] - example1_phi(u)) < tol);
  }
  CHECK(t.phi[50] > 0.99);
  CHECK(std::abs(t.phi[1] - (2.0 - kSqrt2)) < 1e-14);
  CHECK(std::abs(t.phi[2] - 2.0 * (kSqrt2 - 1.0)) < 1e-14);
  CHECK(std::abs(t.phi[3] - (8.0 - 5.0 * kSqrt2)) < 1e-13);
}

TEST_CASE("Example 2 against six-digit goldens") {
  const Solved s = solve(testing::example2());
  const SurvivalTable t = ultimate_survival(s.model, s.init, 4);
  const double golden[] = {0.535194, 0.697233, 0.802783, 0.871536, 0.916321};
  for (int u = 0; u <= 4; ++u) CHECK(std::abs(t.phi[u] - golden[u]) < 1e-6);

  // phi(4) spelled out with the step weights of the example.
  CHECK(std::abs(s.model.f(-1) - 65.0 / 256.0) < 1e-15);
  CHECK(std::abs(s.model.f(-2) - 33.0 / 128.0) < 1e-15);
  CHECK(std::abs(s.model.f(-3) - 9.0 / 64.0) < 1e-15);
  CHECK(std::abs(s.model.f(-4) - 1.0 / 32.0) < 1e-15);
  const double phi4 = 32.0 * (t.phi[0] - t.phi[1] * 65.0 / 256.0 - t.phi[2] * 33.0 / 128.0 -
                              t.phi[3] * 9.0 / 64.0);
  CHECK(std::abs(phi4 - t.phi[4]) < 1e-12);

  // phi(0) = -prod 1/(alpha_j - 1), phi(1) = 32 prod alpha_j/(alpha_j - 1).
  std::complex<double> p0 = -1.0, p1 = 32.0;
  for (const std::complex<double> a : s.roots.expanded()) {
    p0 /= a - 1.0;
    p1 *= a / (a - 1.0);
  }
  CHECK(std::abs(p0.real() - t.phi[0]) < 1e-12);
  CHECK(std::abs(p1.real() - t.phi[1]) < 1e-12);
}

TEST_CASE("Example 3 survives surely from u >= 1") {
  for (const double p : {0.1, 0.5, 0.9}) {
    CAPTURE(p);
    const Solved s = solve(testing::example3(p));
    const SurvivalTable t = ultimate_survival(s.model, s.init, 30);
    CHECK(std::abs(t.phi[0] - (1.0 - p + std::sqrt(1.0 - p)) / 2.0) < 1e-10);
    for (int u = 1; u <= 30; ++u) CHECK(std::abs(t.phi[u] - 1.0) < 1e-10);
    for (const double c : xi_coeffs(s.model, s.init, s.roots, 20)) CHECK(std::abs(c - 1.0) < 1e-10);
  }
}

TEST_CASE("Truncated Poisson models against a 60-digit recomputation") {
  for (const int m : {10, 15}) {
    CAPTURE(m);
    const Solved s = solve(testing::example4(m));
    const SurvivalTable t = ultimate_survival(s.model, s.init, 10);
    const double* ref = m == 10 ? kPhi10 : kPhi15;
    for (int u = 0; u <= 10; ++u) {
      CAPTURE(u);
      CHECK(std::abs(t.phi[u] - ref[u]) < 5e-9);
    }
    for (int u = 1; u <= 10; ++u) CHECK(t.phi[u] > t.phi[u - 1]);
  }
}

TEST_CASE("phi(m) equals the sum of the initial values") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Solved s = solve(testing::random_model(rng, 2, 7));
    const int m = s.model.step_bound();
    const SurvivalTable t = ultimate_survival(s.model, s.init, m);
    double sum = 0.0;
    for (const double p : s.init.pi) sum += p;
    CHECK(std::abs(t.phi[m] - sum) < 1e-12);
  }
}

TEST_CASE("finite-time survival against path enumeration") {
  const RiskModel ex1 = testing::example1();
  const SurvivalTable one = finite_survival(ex1, 5, 1);
  for (int u = 0; u <= 5; ++u) CHECK(one.phi[u] == doctest::Approx(ex1.F(u - 1)).epsilon(1e-15));
  CHECK(std::abs(finite_survival(ex1, 1, 2).phi[1] - 0.6875) < 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick_T(1, 5);
  for (int trial = 0; trial < 40; ++trial) {
    const RiskModel model = testing::random_model(rng, 1, 3);
    const int T = pick_T(rng);
    const SurvivalTable t = finite_survival(model, 6, T);
    CHECK(t.kind == SurvivalTable::Kind::finite);
    CHECK(t.horizon_T == T);
    for (int u = 0; u <= 6; ++u) CHECK(std::abs(t.phi[u] - testing::path_survival(model, u, T)) < 1e-13);
  }
}

TEST_CASE("finite-time survival is monotone and bounds the ultimate one") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Solved s = solve(testing::random_model(rng, 2, 6));
    const SurvivalTable ult = ultimate_survival(s.model, s.init, 20);
    const auto grid = finite_survival_grid(s.model, 20, 60);
    REQUIRE(grid.size() == 60);
    for (std::size_t T = 0; T < grid.size(); ++T) {
      CHECK(grid[T].horizon_T == static_cast<int>(T) + 1);
      for (int u = 0; u <= 20; ++u) {
        CHECK(grid[T].phi[u] >= ult.phi[u] - 1e-9);
        if (T > 0) CHECK(grid[T].phi[u] <= grid[T - 1].phi[u] + 1e-15);
        if (u > 0) CHECK(grid[T].phi[u] >= grid[T].phi[u - 1] - 1e-15);
      }
    }
    const SurvivalTable far = finite_survival(s.model, 20, 8192);
    for (int u = 0; u <= 20; ++u) CHECK(std::abs(far.phi[u] - ult.phi[u]) < 1e-8);
  }

  const SurvivalTable t200 = finite_survival(testing::example1(), 1, 200);
  CHECK(std::abs(t200.phi[1] - (2.0 - kSqrt2)) < 1e-8);
}

TEST_CASE("generating function of Example 1") {
  const Solved s = solve(testing::example1());
  const XiRational x = xi_rational(s.model, s.init);
  REQUIRE(x.numerator.size() >= 2);
  REQUIRE(x.denominator.size() == 4);
  // Xi(s) = (2 - sqrt 2 + sqrt 2 s) / (1 + s - 3 s^2 + s^3), both sides over 4.
  CHECK(std::abs(4.0 * x.numerator[0] - (2.0 - kSqrt2)) < 1e-15);
  CHECK(std::abs(4.0 * x.numerator[1] - kSqrt2) < 1e-15);
  for (std::size_t k = 2; k < x.numerator.size(); ++k) CHECK(std::abs(x.numerator[k]) < 1e-15);
  const double den[] = {1.0, 1.0, -3.0, 1.0};
  for (int k = 0; k < 4; ++k) CHECK(4.0 * x.denominator[k] == den[k]);

  const auto c = xi_coeffs(s.model, s.init, s.roots, 30);
  for (int k = 0; k < 30; ++k) CHECK(std::abs(c[k] - example1_phi(k + 1)) < 1e-13);
}

TEST_CASE("generating function of Example 2 against the six-digit rational form") {
  const Solved s = solve(testing::example2());
  const XiRational x = xi_rational(s.model, s.init);
  // The six-digit form carries the geometric factor 2 - s in numerator and denominator.
  const std::vector<double> num{0.0435771, 0.224482, 0.516629, 0.750506, -0.535194};
  const std::vector<double> den{0.0625, 0.25, 0.375, 0.25, -1.9375, 1.0};
  for (const double r : {0.0, 0.3, 0.6, 0.9}) {
    for (int a = 0; a < 8; ++a) {
      const std::complex<double> z = std::polar(r, a * 0.785398163397448);
      CAPTURE(z);
      CHECK(std::abs((2.0 - z) * poly_at(x.numerator, z) - poly_at(num, z)) < 5e-6);
      CHECK(std::abs((2.0 - z) * poly_at(x.denominator, z) - poly_at(den, z)) < 1e-12);
    }
  }
  // The unit-disk roots are common zeros.
  for (const std::complex<double> a : s.roots.expanded()) {
    CHECK(poly_eval(x.numerator, a) < 1e-12);
    CHECK(poly_eval(x.denominator, a) < 1e-12);
  }
}

TEST_CASE("Taylor coefficients of Xi reproduce phi") {
  for (const RiskModel& model : {testing::example1(), testing::example2(), testing::example3(0.5)}) {
    const Solved s = solve(model);
    const SurvivalTable t = ultimate_survival(s.model, s.init, 61);
    const auto c = xi_coeffs(s.model, s.init, s.roots, 60);
    for (int k = 0; k < 20; ++k) CHECK(std::abs(c[k] - t.phi[k + 1]) < 1e-12);
    for (int k = 20; k < 60; ++k) CHECK(std::abs(c[k] - t.phi[k + 1]) < 1e-9);
  }

  // Undeflated long division drifts away on Example 2.
  const Solved s = solve(testing::example2());
  const XiRational x = xi_rational(s.model, s.init);
  const auto plain = xi_series(x.numerator, x.denominator, 40);
  const auto c = xi_coeffs(s.model, s.init, s.roots, 40);
  CHECK(std::abs(plain[5] - c[5]) < 1e-12);
  CHECK(std::abs(plain[39] - c[39]) > 1e-3);
}

TEST_CASE("recurrence residual stays small") {
  for (const RiskModel& model : {testing::example1(), testing::example2()}) {
    const Solved s = solve(model);
    const SurvivalTable t = ultimate_survival(s.model, s.init, 40);
    CHECK(recurrence_residual(s.model, t.phi) < 1e-9);
    CHECK(t.residual < 1e-9);
  }
}

TEST_CASE("random models give bounded monotone tables") {
  std::mt19937_64 rng(23);
  UltimateOptions opts;
  opts.max_T = 8192;
  int settled = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const Solved s = solve(testing::random_model(rng, 2, 8));
    int u_max = 40;
    SurvivalTable t;
    try {
      t = ultimate_survival(s.model, s.init, u_max, opts);
      ++settled;
    } catch (const BlowupError& e) {
      // Slow finite-time convergence; everything before the failing u is usable.
      CHECK(e.failing_u() > s.model.step_bound());
      u_max = e.failing_u() - 1;
      t = ultimate_survival(s.model, s.init, u_max, opts);
    }
    CHECK(t.residual < 1e-8);
    for (int u = 0; u <= u_max; ++u) {
      CHECK(t.phi[u] >= -1e-12);
      CHECK(t.phi[u] <= 1.0 + 1e-12);
      if (u > 0) CHECK(t.phi[u] >= t.phi[u - 1] - 1e-9);
    }
    // The deflated series agrees wherever the table is available.
    const auto c = xi_coeffs(s.model, s.init, s.roots, u_max);
    for (int k = 0; k < u_max; ++k) CHECK(std::abs(c[k] - t.phi[k + 1]) < 1e-8);
  }
  CHECK(settled >= 15);
}

TEST_CASE("stability horizon and fallback") {
  const Solved s = solve(testing::example2());
  const int m = s.model.step_bound();
  const int h = stability_horizon(s.model, 40);
  CHECK(h >= m);
  CHECK(h < 40);

  const SurvivalTable with = ultimate_survival(s.model, s.init, 40);
  REQUIRE(with.used_fallback());
  CHECK(with.fallback_from > m);
  CHECK(with.horizon_T > 0);

  UltimateOptions strict;
  strict.allow_fallback = false;
  try {
    (void)ultimate_survival(s.model, s.init, 40, strict);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    CHECK(e.failing_u() == with.fallback_from);
  }
  // Short tables never need the fallback.
  CHECK_FALSE(ultimate_survival(s.model, s.init, m, strict).used_fallback());

  // Corrupted initial values push the recurrence out of [0, 1].
  InitialValues bad = solve(testing::example1()).init;
  bad.pi[0] += 1e-3;
  CHECK_THROWS_AS(ultimate_survival(testing::example1(), bad, 40, strict), BlowupError);

  UltimateOptions tight;
  tight.max_T = 64;
  CHECK_THROWS_AS(ultimate_survival(s.model, s.init, 40, tight), BlowupError);
}

TEST_CASE("truncation bounds") {
  const Solved ex1 = solve(testing::example1());
  const TruncationBounds none =
      truncation_bounds(ex1.model, 0.0, ultimate_survival(ex1.model, ex1.init, 10));
  CHECK(none.lower == 0.0);
  CHECK(none.upper == 0.0);

  // P(X - c*theta <= -(m+1)) for the Poisson pair, summed directly.
  auto tail = [](int m) {
    double total = 0.0;
    double pv = std::exp(-1.01);
    for (int k = 0; k < 80; ++k) {
      if (k > 0) pv *= 1.01 / k;
      double cdf = 0.0, px = std::exp(-1.0);
      for (int j = 0; j <= k - m - 1; ++j) {
        if (j > 0) px /= j;
        cdf += px;
      }
      total += pv * cdf;
    }
    return total;
  };

  TruncationBounds b[2];
  for (int i = 0; i < 2; ++i) {
    const int m = i == 0 ? 10 : 15;
    const BuiltModel bm = testing::load_model(m == 10 ? "example4_m10" : "example4_m15");
    REQUIRE(bm.original_tail.has_value());
    CHECK(*bm.original_tail == doctest::Approx(tail(m)).epsilon(1e-10));
    const Solved s = solve(bm.model);
    b[i] = truncation_bounds(s.model, *bm.original_tail, ultimate_survival(s.model, s.init, 10));
    CHECK(b[i].lower >= 0.0);
    CHECK(b[i].lower <= b[i].upper);
    CHECK(b[i].upper == *bm.original_tail);
  }
  CHECK(b[1].upper < b[0].upper / 10.0);
}
