#pragma once
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace orbitbounce {

/// Radial force magnitude f(t, rho), T-periodic in t, defined for rho >= R0.
using ForceFn = std::function<double(double t, double rho)>;

/// The data of the central-force problem: rho'' - L^2/rho^3 + f(t,rho) = 0,
/// rho^2 theta' = L, with a hard wall at rho = R0.
struct CentralForceProblem {
  ForceFn f;
  double T = 0.0;    ///< forcing period, > 0
  double R0 = 0.0;   ///< wall radius, > 0
  double L0 = 10.0;  ///< angular momenta are searched in [0, L0]
  std::string name;  ///< catalog kind, for reports

  /// Asymptotic growth band of f(t,rho)/rho as rho -> +inf, when known
  /// (NaN when the catalog entry cannot state it).
  double mu_check = std::numeric_limits<double>::quiet_NaN();
  double mu_hat = std::numeric_limits<double>::quiet_NaN();

  void validate() const;  ///< throws std::invalid_argument on bad T, R0, L0
};

/// Wall-shifted radial state: r = rho - R0 and v = r'.
struct PhaseState {
  double r = 0.0;
  double v = 0.0;
};

struct PolarState {
  double rho = 0.0;
  double v = 0.0;
  double theta = 0.0;
  double L = 0.0;
};

/// Winding request: nu full revolutions in k forcing periods.
struct WindingSpec {
  int k = 1;
  int nu = 1;
};

/// g(L,t,r) = -L^2/(r+R0)^3 + f(t, r+R0), the scalar field of the reduced
/// radial equation r'' + g(L,t,r) = 0. Immutable after construction; the
/// force callback must be pure, so instances are safe to share across
/// threads.
class RadialField {
 public:
  RadialField(const CentralForceProblem& p, double L);

  double operator()(double t, double r) const {
    double rho = r + R0_;
    return -(L_ * L_) / (rho * rho * rho) + f_(t, rho);
  }
  /// theta' = L/(r+R0)^2
  double angular_rate(double r) const {
    double rho = r + R0_;
    return L_ / (rho * rho);
  }

  double L() const { return L_; }
  double R0() const { return R0_; }
  double T() const { return T_; }

 private:
  ForceFn f_;
  double L_, R0_, T_;
};

/// Builds g from a problem and an angular momentum. Negative L rejected.
RadialField radial_field(const CentralForceProblem& p, double L);

/// theta(t) = theta0 + Int_0^t L/(R0 + x(s))^2 ds for a radial profile x.
/// Evaluated at the (ascending) times ts by cumulative quadrature; the
/// profile must stay above -R0 on the covered range.
std::vector<double> theta_from_radial(const std::function<double(double)>& x,
                                      double L, double R0, double theta0,
                                      const std::vector<double>& ts,
                                      double rel_tol = 1e-12);

/// Samples 100 pseudo-random (t, rho) pairs and checks
/// |f(t+T,rho) - f(t,rho)| <= tol * (1 + |f(t,rho)|). Returns the worst
/// normalized defect.
double force_periodicity_defect(const CentralForceProblem& p,
                                unsigned long long seed = 12345);

// --- built-in force catalog ------------------------------------------------

/// f(t,rho) = mu*(rho-R0) + A*sin(omega*t + phi) + B
ForceFn affine_force(double mu, double A, double omega, double phi, double B,
                     double R0);

/// Affine slope plus a bounded state-dependent perturbation:
/// f(t,rho) = mu*x + A*sin(omega*t+phi) + B + C*x/(1+x^2), x = rho-R0.
ForceFn affine_bounded_force(double mu, double A, double omega, double phi,
                             double B, double C, double R0);

/// Scalar transverse force for cylinder components:
/// f(t,y) = mu_plus*max(y,0) - mu_minus*max(-y,0) + A*sin(omega*t+phi) + B.
using TransverseForceFn = std::function<double(double t, double y)>;
TransverseForceFn asymmetric_force(double mu_plus, double mu_minus, double A,
                                   double omega, double phi, double B);

}  // namespace orbitbounce
