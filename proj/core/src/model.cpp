#include "orbitbounce/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "orbitbounce/quadrature.hpp"

namespace orbitbounce {

void CentralForceProblem::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("CentralForceProblem: T must be > 0");
  if (!(R0 > 0.0)) throw std::invalid_argument("CentralForceProblem: R0 must be > 0");
  if (!(L0 > 0.0)) throw std::invalid_argument("CentralForceProblem: L0 must be > 0");
  if (!f) throw std::invalid_argument("CentralForceProblem: missing force callback");
}

RadialField::RadialField(const CentralForceProblem& p, double L)
    : f_(p.f), L_(L), R0_(p.R0), T_(p.T) {
  p.validate();
  if (L < 0.0) throw std::invalid_argument("radial_field: L must be >= 0");
}

RadialField radial_field(const CentralForceProblem& p, double L) {
  return RadialField(p, L);
}

std::vector<double> theta_from_radial(const std::function<double(double)>& x,
                                      double L, double R0, double theta0,
                                      const std::vector<double>& ts,
                                      double rel_tol) {
  if (ts.empty()) return {};
  auto rate = [&](double t) {
    double d = R0 + x(t);
    return L / (d * d);
  };
  // the integrand is singular at x = -R0; reject profiles that reach it
  for (double t : ts) {
    if (!(R0 + x(t) > 0.0))
      throw std::invalid_argument("theta_from_radial: profile reaches -R0, integrand singular");
  }
  std::vector<double> out(ts.size());
  out[0] = theta0 + (ts[0] != 0.0 ? integrate(rate, 0.0, ts[0], rel_tol) : 0.0);
  for (size_t i = 1; i < ts.size(); ++i) {
    if (!(ts[i] >= ts[i - 1]))
      throw std::invalid_argument("theta_from_radial: times must be ascending");
    out[i] = out[i - 1] + integrate(rate, ts[i - 1], ts[i], rel_tol);
  }
  return out;
}

double force_periodicity_defect(const CentralForceProblem& p,
                                unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, 3.0 * p.T);
  std::uniform_real_distribution<double> ur(0.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    double t = ut(rng);
    double rho = p.R0 * (1.0 + ur(rng));
    double a = p.f(t, rho);
    double b = p.f(t + p.T, rho);
    worst = std::max(worst, std::abs(b - a) / (1.0 + std::abs(a)));
  }
  return worst;
}

ForceFn affine_force(double mu, double A, double omega, double phi, double B,
                     double R0) {
  return [=](double t, double rho) {
    return mu * (rho - R0) + A * std::sin(omega * t + phi) + B;
  };
}

ForceFn affine_bounded_force(double mu, double A, double omega, double phi,
                             double B, double C, double R0) {
  return [=](double t, double rho) {
    double x = rho - R0;
    return mu * x + A * std::sin(omega * t + phi) + B + C * x / (1.0 + x * x);
  };
}

TransverseForceFn asymmetric_force(double mu_plus, double mu_minus, double A,
                                   double omega, double phi, double B) {
  return [=](double t, double y) {
    double pos = y > 0.0 ? y : 0.0;
    double neg = y < 0.0 ? -y : 0.0;
    return mu_plus * pos - mu_minus * neg + A * std::sin(omega * t + phi) + B;
  };
}

}  // namespace orbitbounce
