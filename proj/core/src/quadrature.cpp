#include "orbitbounce/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace orbitbounce {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double* err_estimate) {
  if (a == b) {
    if (err_estimate) *err_estimate = 0.0;
    return 0.0;
  }
  double err = 0.0;
  double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 12 /*max depth*/, rel_tol, &err);
  if (err_estimate) *err_estimate = err;
  return val;
}

double integrate_with_breakpoints(const std::function<double(double)>& f,
                                  double a, double b,
                                  std::vector<double> breakpoints,
                                  double rel_tol) {
  breakpoints.push_back(a);
  breakpoints.push_back(b);
  std::sort(breakpoints.begin(), breakpoints.end());
  double total = 0.0;
  double prev = a;
  for (double p : breakpoints) {
    if (p <= prev || p > b) continue;
    total += integrate(f, prev, p, rel_tol);
    prev = p;
  }
  return total;
}

}  // namespace orbitbounce
