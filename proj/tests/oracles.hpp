#pragma once
// Test-only oracles, independent of the library's integration and
// quadrature paths.
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

namespace oracles {

/// Composite Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n = 4096) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Plain bisection root of a monotone bracket.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     int iters = 200) {
  double fa = f(a);
  for (int i = 0; i < iters; ++i) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Smallest positive root of x0 + v0 t + (a/2) t^2 = 0, when any.
inline std::optional<double> quadratic_first_root(double x0, double v0, double a) {
  if (a == 0.0) {
    if (v0 == 0.0) return std::nullopt;
    double t = -x0 / v0;
    return t > 0.0 ? std::optional<double>(t) : std::nullopt;
  }
  double A = 0.5 * a, B = v0, C = x0;
  double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return std::nullopt;
  double sq = std::sqrt(disc);
  double r1 = (-B - sq) / (2.0 * A);
  double r2 = (-B + sq) / (2.0 * A);
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > 1e-14) return r1;
  if (r2 > 1e-14) return r2;
  return std::nullopt;
}

/// Classic fixed-step RK4 on x'' + g(t,x) = 0, for cross-checks.
inline void rk4(const std::function<double(double, double)>& g, double& t, double& x,
                double& v, double t1, int steps) {
  double h = (t1 - t) / steps;
  for (int i = 0; i < steps; ++i) {
    auto ax = [&](double tt, double xx) { return -g(tt, xx); };
    double k1x = v, k1v = ax(t, x);
    double k2x = v + 0.5 * h * k1v, k2v = ax(t + 0.5 * h, x + 0.5 * h * k1x);
    double k3x = v + 0.5 * h * k2v, k3v = ax(t + 0.5 * h, x + 0.5 * h * k2x);
    double k4x = v + h * k3v, k4v = ax(t + h, x + h * k3x);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    t += h;
  }
}

/// The closed-form single-impact T-periodic bouncing solution of
/// x'' + mu x + A sin(2t) = 0 (wall at 0, T = pi): impact at tau0 = pi/4,
/// x(t) = -beta cos(w (t-tau0)) + Bq sin(w (t-tau0)) + beta sin(2t) on
/// [tau0, tau0+pi], beta = A/(4-mu), w = sqrt(mu).
struct CatalogBounce {
  double mu, A;
  double beta, w, tau0, Bq, v0;
  CatalogBounce(double mu_, double A_) : mu(mu_), A(A_) {
    beta = A / (4.0 - mu);
    w = std::sqrt(mu);
    tau0 = M_PI / 4.0;
    double th = w * M_PI;
    Bq = -beta * (1.0 - std::cos(th)) / std::sin(th);
    v0 = w * Bq;
  }
  /// profile on [tau0, tau0 + pi]
  double x(double t) const {
    double s = t - tau0;
    return -beta * std::cos(w * s) + Bq * std::sin(w * s) + beta * std::sin(2.0 * t);
  }
  double xdot(double t) const {
    double s = t - tau0;
    return w * (beta * std::sin(w * s) + Bq * std::cos(w * s)) +
           2.0 * beta * std::cos(2.0 * t);
  }
  /// periodic extension (arbitrary t)
  double x_periodic(double t) const {
    double s = std::fmod(t - tau0, M_PI);
    if (s < 0.0) s += M_PI;
    return x(tau0 + s);
  }
};

}  // namespace oracles
