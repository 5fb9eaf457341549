#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitbounce/quadrature.hpp"

using namespace orbitbounce;

TEST_CASE("adaptive quadrature hits analytic integrals") {
  CHECK(integrate([](double t) { return std::sin(t); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(integrate([](double t) { return t * t; }, 0.0, 3.0) ==
        doctest::Approx(9.0).epsilon(1e-13));
  CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("breakpoints handle kinked integrands") {
  auto f = [](double t) { return std::abs(std::sin(t)); };
  double v = integrate_with_breakpoints(f, 0.0, 2.0 * M_PI, {M_PI}, 1e-13);
  CHECK(v == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(v == doctest::Approx(oracles::simpson(f, 0.0, M_PI) +
                             oracles::simpson(f, M_PI, 2.0 * M_PI))
                 .epsilon(1e-9));
}
