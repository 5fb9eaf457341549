#include "orbitbounce/penalty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace orbitbounce {

void PenaltyParams::validate() const {
  if (n < 1) throw std::invalid_argument("PenaltyParams: n must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("PenaltyParams: delta must be > 0");
}

namespace {
std::function<double(double, double)> wrap_penalty(
    std::function<double(double, double)> g, int n, double delta) {
  double dn = static_cast<double>(n);
  return [g = std::move(g), dn, delta](double t, double x) {
    double u = dn * x;
    if (u >= 1.0) return g(t, x);
    if (u > 0.0) return u * (g(t, x) + delta) - delta;
    return u - delta;
  };
}
}  // namespace

SmoothField make_penalty(const RadialField& g, const PenaltyParams& p) {
  p.validate();
  RadialField gc = g;
  SmoothField out;
  out.g = wrap_penalty([gc](double t, double x) { return gc(t, x); }, p.n, p.delta);
  out.theta_rate = [gc](double x) { return gc.angular_rate(x); };
  return out;
}

SmoothField make_penalty(const std::function<double(double, double)>& g,
                         const PenaltyParams& p) {
  p.validate();
  SmoothField out;
  out.g = wrap_penalty(g, p.n, p.delta);
  return out;
}

double kappa_for(int n, double mu_lo, double mu_hi) {
  if (!(mu_lo >= 0.0) || !(mu_hi > mu_lo))
    throw std::invalid_argument("kappa_for: need 0 <= mu_lo < mu_hi");
  double mid = 0.5 * (mu_lo + mu_hi);
  // n (sqrt(k)-1)^2/k increases to n as k -> inf, so a solution needs n > mid
  if (!(static_cast<double>(n) > mid)) {
    int n_min = static_cast<int>(std::floor(mid)) + 1;
    throw std::invalid_argument(
        "kappa_for: n = " + std::to_string(n) +
        " too small for band midpoint " + std::to_string(mid) +
        "; least workable n is " + std::to_string(n_min));
  }
  double s = 1.0 / (1.0 - std::sqrt(mid / static_cast<double>(n)));
  double kappa = s * s;
  double attained = n * (std::sqrt(kappa) - 1.0) * (std::sqrt(kappa) - 1.0) / kappa;
  if (!(kappa > 1.0) || !(mu_lo < attained) || !(attained < mu_hi))
    throw std::runtime_error("kappa_for: solved kappa fails the band inequality");
  return kappa;
}

SmoothField make_resonant_penalty(const CentralForceProblem& p, double L,
                                  const ResonantPenaltyParams& rp) {
  p.validate();
  rp.base.validate();
  if (L < 0.0) throw std::invalid_argument("make_resonant_penalty: L must be >= 0");
  if (!(rp.kappa >= 1.0))
    throw std::invalid_argument("make_resonant_penalty: kappa must be >= 1");
  double R0 = p.R0;
  double kap = rp.kappa;
  ForceFn f = p.f;
  auto gt = [L, R0, kap, f](double t, double x) {
    double rho = x + R0;
    return -(L * L) / (rho * rho * rho) + kap * f(t, rho);
  };
  SmoothField out;
  out.g = wrap_penalty(gt, rp.base.n, rp.base.delta);
  out.theta_rate = [L, R0](double x) {
    double rho = x + R0;
    return L / (rho * rho);
  };
  return out;
}

double negative_transit_time(const PenaltyParams& p, double c) {
  p.validate();
  if (!(c > 0.0)) throw std::invalid_argument("negative_transit_time: c must be > 0");
  double n = static_cast<double>(p.n);
  double val = (M_PI - 2.0 * std::asin(p.delta / std::sqrt(n * c * c + p.delta * p.delta))) /
               std::sqrt(n);
  return val;
}

double penetration_depth_bound(const PenaltyParams& p, double c) {
  p.validate();
  if (!(c > 0.0)) throw std::invalid_argument("penetration_depth_bound: c must be > 0");
  double n = static_cast<double>(p.n);
  return (p.delta - std::sqrt(p.delta * p.delta + c * c * n)) / n;
}

}  // namespace orbitbounce
