#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitbounce/model.hpp"

using namespace orbitbounce;

namespace {
CentralForceProblem make_problem(ForceFn f, double T = M_PI, double R0 = 1.0) {
  CentralForceProblem p;
  p.f = std::move(f);
  p.T = T;
  p.R0 = R0;
  return p;
}
}  // namespace

TEST_CASE("radial_field evaluates the reduced-equation formula") {
  auto zero = make_problem([](double, double) { return 0.0; });
  CHECK(radial_field(zero, 0.0)(0.3, 2.0) == 0.0);
  CHECK(radial_field(zero, 1.0)(0.0, 0.0) == doctest::Approx(-1.0));

  // L=2, R0=1, f(t,rho)=rho, r=1: -8/8 + 2 = 1, cross-checked by an
  // independent evaluation of the two terms
  auto lin = make_problem([](double, double rho) { return rho; });
  double g = radial_field(lin, 2.0)(0.7, 1.0);
  double expect = -(2.0 * 2.0) / std::pow(1.0 + 1.0, 3) + (1.0 + 1.0);
  CHECK(g == doctest::Approx(expect).epsilon(1e-15));
  CHECK(g == doctest::Approx(1.0));

  CHECK_THROWS_AS(radial_field(zero, -0.5), std::invalid_argument);
}

TEST_CASE("radial_field carries L, R0, T and the angular rate") {
  auto p = make_problem([](double, double) { return 0.0; }, 2.0, 3.0);
  RadialField f = radial_field(p, 1.5);
  CHECK(f.L() == 1.5);
  CHECK(f.R0() == 3.0);
  CHECK(f.T() == 2.0);
  CHECK(f.angular_rate(1.0) == doctest::Approx(1.5 / 16.0));
}

TEST_CASE("theta_from_radial quadrature") {
  auto x0 = [](double) { return 0.0; };
  auto th = theta_from_radial(x0, 1.0, 1.0, 0.0, {0.0, 2.0});
  CHECK(th[0] == 0.0);
  CHECK(th[1] == doctest::Approx(2.0).epsilon(1e-12));

  // L = 0 leaves theta at theta0
  auto th0 = theta_from_radial(x0, 0.0, 1.0, 0.7, {0.0, 1.0, 5.0});
  for (double v : th0) CHECK(v == doctest::Approx(0.7));

  // constant profile x = 1, L = 4, R0 = 1: rate 1, checked against Simpson
  auto x1 = [](double) { return 1.0; };
  auto th1 = theta_from_radial(x1, 4.0, 1.0, 0.0, {1.0});
  double simpson = oracles::simpson([](double) { return 4.0 / 4.0; }, 0.0, 1.0);
  CHECK(th1[0] == doctest::Approx(simpson).epsilon(1e-12));
  CHECK(th1[0] == doctest::Approx(1.0).epsilon(1e-12));

  // singular profile rejected
  auto bad = [](double t) { return t < 0.5 ? 0.0 : -1.0; };
  CHECK_THROWS_AS(theta_from_radial(bad, 1.0, 1.0, 0.0, {0.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("theta is strictly increasing for L > 0") {
  auto x = [](double t) { return 0.3 * std::sin(t) + 0.1 * std::cos(3.0 * t); };
  std::vector<double> ts;
  for (int i = 0; i <= 40; ++i) ts.push_back(0.2 * i);
  auto th = theta_from_radial(x, 0.7, 1.0, -1.0, ts);
  for (size_t i = 1; i < th.size(); ++i) CHECK(th[i] > th[i - 1]);
}

TEST_CASE("catalog forces are T-periodic to machine precision") {
  double T = M_PI;
  auto p1 = make_problem(affine_force(2.5, 0.1, 2.0, 0.0, 0.0, 1.0), T);
  CHECK(force_periodicity_defect(p1) <= 1e-12);
  auto p2 = make_problem(affine_bounded_force(1.0, 0.5, 4.0, 0.3, 1.0, 0.2, 1.0), T);
  CHECK(force_periodicity_defect(p2) <= 1e-12);
}

TEST_CASE("catalog force values") {
  auto f = affine_force(2.5, 0.1, 2.0, 0.0, 0.0, 1.0);
  CHECK(f(0.0, 1.0) == doctest::Approx(0.0));
  CHECK(f(M_PI / 4.0, 1.0) == doctest::Approx(0.1));
  CHECK(f(0.0, 2.0) == doctest::Approx(2.5));
  auto a = asymmetric_force(9.0, 4.0, 0.0, 0.0, 0.0, 0.0);
  CHECK(a(0.0, 2.0) == doctest::Approx(18.0));
  CHECK(a(0.0, -2.0) == doctest::Approx(8.0));
}

TEST_CASE("problem validation") {
  CentralForceProblem p;
  p.f = [](double, double) { return 0.0; };
  p.T = -1.0;
  p.R0 = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.T = 1.0;
  p.R0 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
