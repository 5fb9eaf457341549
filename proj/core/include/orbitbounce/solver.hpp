#pragma once
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "orbitbounce/analysis.hpp"
#include "orbitbounce/integrator.hpp"
#include "orbitbounce/model.hpp"
#include "orbitbounce/penalty.hpp"

namespace orbitbounce {

struct ShootingConfig {
  double residual_tol = 1e-8;
  int max_newton_iters = 60;
  /// finite-difference step for the shooting Jacobian, scaled per component
  double fd_step = 1e-6;
  /// optional explicit guesses; smooth mode reads (x0, v0) at t=0, bouncing
  /// mode reads (tau0, v0) on the impact section. Empty = built-in ladder.
  std::vector<std::array<double, 2>> multistart;
  int jobs = 1;
  unsigned long long seed = 0;
  bool allow_penalty_bootstrap = true;
};

struct PeriodicSolution {
  bool converged = false;
  enum class Mode { smooth, bouncing_section, bouncing_fallback } mode = Mode::smooth;
  double x0 = 0.0, v0 = 0.0;   ///< state at the reference time
  double t_ref = 0.0;          ///< 0 in smooth mode, first impact time in section mode
  int impacts_per_period = 0;
  double residual = 0.0;
  double jacobian_distance = 0.0;  ///< smallest singular value of the Newton matrix
  std::string diagnostic;          ///< best residual per guess on failure
};

/// T-periodic solution of x'' + g(t,x) = 0 by Newton on the time-T map with
/// finite-difference Jacobian, Armijo backtracking and multistart.
PeriodicSolution shoot_periodic_smooth(const SmoothField& field, double T,
                                       const ShootingConfig& cfg,
                                       const IntegratorOptions& opts);

/// T-periodic bouncing solution by Newton on the impact-section return map
/// (first impact after t=0); falls back to direct periodicity-residual
/// minimization when trajectories develop contact intervals, and to the
/// smooth time-T map when the orbit never touches the wall.
PeriodicSolution shoot_periodic_bouncing(const RadialField& field, double T,
                                         const ShootingConfig& cfg,
                                         const IntegratorOptions& opts);

/// Re-integrates a converged solution over [t0, t1].
BouncingTrajectory realize_bouncing(const RadialField& field,
                                    const PeriodicSolution& sol, double t0,
                                    double t1, const IntegratorOptions& opts);
SmoothResult realize_smooth(const SmoothField& field, const PeriodicSolution& sol,
                            double t0, double t1, const IntegratorOptions& opts);

/// Callable x(t) on [0, T] for a T-periodic trajectory realized on
/// [t_ref, t_ref + T] (wraps times by periodicity).
std::function<double(double)> periodic_profile(const BouncingTrajectory& traj,
                                               double t_ref, double T);
std::function<double(double)> periodic_profile(const DenseSegment& seg,
                                               double t_ref, double T);

/// Continuation/shooting mode: the exact bouncing problem, or its smooth
/// penalty approximation (optionally kappa-rescaled).
struct SolveMode {
  enum class Kind { bouncing, penalty } kind = Kind::bouncing;
  PenaltyParams pen;
  double kappa = 1.0;
  static SolveMode bouncing() { return {}; }
  static SolveMode penalty(PenaltyParams p, double kappa = 1.0) {
    SolveMode m;
    m.kind = Kind::penalty;
    m.pen = p;
    m.kappa = kappa;
    return m;
  }
};

struct OrbitResult {
  bool ok = false;
  double L = 0.0;
  WindingSpec spec;
  double theta_value = 0.0;  ///< Theta(L, x)
  double res_rho = 0.0, res_v = 0.0, res_theta = 0.0;
  double rotation_count = 0.0;
  int impacts_per_period = 0;
  double max_x = 0.0;  ///< amplitude R = max(rho - R0)
  PeriodicSolution sol;
  std::vector<double> ts, rho, rho_prime;    ///< radial profile on [0,T]
  std::vector<double> theta_ts, theta_vals;  ///< theta profile on [0,kT]
  std::string failure;                       ///< empty when ok
  double theta_min = 0.0, theta_max = 0.0;   ///< achieved range (on infeasible)
};

/// Finds L* in [L_lo, L_hi] with Theta(L*, x_{L*}) = 2 pi nu / k: 17-point
/// monotonicity scan, then bracketed secant/bisection with shoot_periodic as
/// the corrector, warm-started along the continuation.
OrbitResult continue_in_L(const CentralForceProblem& prob, WindingSpec spec,
                          double L_lo, double L_hi, const SolveMode& mode,
                          const ShootingConfig& cfg, const IntegratorOptions& opts);

/// Smallest k with 2 pi nu / k < T L0 / (R0 + R)^2.
int k_min(int nu, double L0, double R0, double T, double R);

struct ResonantRung {
  int n = 0;
  double kappa = 1.0;
  double L = 0.0;
  double theta = 0.0;
  double residual = 0.0;
};

struct ResonantResult {
  bool ok = false;
  bool refused = false;
  std::vector<LLVerdict> ll_report;
  std::vector<ResonantRung> rungs;
  OrbitResult finest;
  double extrap_L = 0.0;
  double extrap_defect = 0.0;  ///< periodicity defect of the extrapolated bounce
  std::string failure;
};

/// Double-resonance solve: gates on ll_check, then runs continue_in_L on the
/// kappa_n-rescaled penalty ladder and Richardson-extrapolates (in 1/sqrt(n))
/// the initial state handed to the exact bouncing integrator.
ResonantResult solve_resonant(const CentralForceProblem& prob, const LLProblem& ll,
                              WindingSpec spec, const std::vector<int>& ladder,
                              double delta, const ShootingConfig& cfg,
                              const IntegratorOptions& opts);

/// One transverse component of the cylinder system:
/// y'' + f(t,y) + b(t, x(t), y(t)) = 0.
struct CylinderComponent {
  TransverseForceFn f;
  std::function<double(double t, double x, const std::vector<double>& y)> coupling;
  double mu_lo = 0.0, mu_hi = 0.0, nu_lo = 0.0, nu_hi = 0.0;  ///< asymmetric band
};

struct CylinderProblem {
  CentralForceProblem radial;
  /// radial coupling multiplier: the radial force gains b1(t,rho,y)*rho
  std::function<double(double t, double rho, const std::vector<double>& y)> b1;
  std::vector<CylinderComponent> components;
};

struct CylinderResult {
  bool ok = false;
  int sweeps = 0;
  OrbitResult radial;
  std::vector<double> ts;  ///< shared sample grid on [0, T]
  std::vector<std::vector<double>> y;  ///< per-component profiles on ts
  std::vector<double> y_residuals;
  std::vector<double> sweep_deltas;  ///< sup-norm change per sweep
  std::vector<std::string> warnings;
  std::string failure;
};

/// Gauss-Seidel alternation: radial orbit with y frozen, then each y_i with
/// (x, other y) frozen, until successive iterates differ by <= residual_tol
/// in sup norm.
CylinderResult solve_cylinder(const CylinderProblem& cp, WindingSpec spec,
                              const ShootingConfig& cfg,
                              const IntegratorOptions& opts, int max_sweeps = 20);

}  // namespace orbitbounce
