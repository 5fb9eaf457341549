#pragma once
#include <functional>
#include <vector>

namespace orbitbounce {

/// Adaptive Gauss-Kronrod integration of f over [a, b].
/// Target is relative accuracy rel_tol (absolute for integrals near zero).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double* err_estimate = nullptr);

/// Same, but the integration is split at the given interior breakpoints
/// (kinks of the integrand, e.g. arch boundaries of psi_j).
double integrate_with_breakpoints(const std::function<double(double)>& f,
                                  double a, double b,
                                  std::vector<double> breakpoints,
                                  double rel_tol = 1e-12);

}  // namespace orbitbounce
