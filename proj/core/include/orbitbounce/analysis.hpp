#pragma once
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "orbitbounce/model.hpp"
#include "orbitbounce/trajectory.hpp"

namespace orbitbounce {

/// j-th Dancer-Fucik vertical asymptote mu_j = (j pi / T)^2.
double mu_asymptote(int j, double T);

/// Nonresonance band [mu_N, mu_{N+1}] around a growth range.
struct ResonanceBand {
  int N = 0;
  double mu_lo = 0.0, mu_hi = 0.0;
  double T = 0.0;
};
ResonanceBand resonance_band(int N, double T);

struct BandClassification {
  enum class Kind { nonresonant, resonant, invalid } kind;
  int N = -1;  ///< band index when nonresonant
  std::optional<int> touched_lower, touched_upper;  ///< resonant endpoints
  std::string detail;
};
/// Checks (N pi/T)^2 < mu_lo <= mu_hi < ((N+1) pi/T)^2. Resonant when an
/// endpoint sits exactly on an asymptote, invalid when the range spans one.
BandClassification classify_band(double mu_lo, double mu_hi, double T);

struct AsymmetricClassification {
  bool admissible = false;
  int N = -1;
  std::string detail;
};
/// Checks T/((N+1)pi) < 1/sqrt(mu_hi) + 1/sqrt(nu_hi)
///                   <= 1/sqrt(mu_lo) + 1/sqrt(nu_lo) < T/(N pi).
AsymmetricClassification classify_asymmetric(double mu_lo, double mu_hi,
                                             double nu_lo, double nu_hi,
                                             double T);

/// Clockwise winding of a planar phase path about the origin, by unwrapped
/// argument with step-halving when an angular increment exceeds pi/2.
struct RotationResult {
  double winding = 0.0;            ///< clockwise turns (may be half-integer)
  std::vector<double> crossings;   ///< times where x = 0
};
RotationResult rotation_number(const std::function<void(double, double&, double&)>& path,
                               double t0, double t1, int samples = 2048,
                               double origin_tol = 1e-12);
/// Same for a bouncing trajectory: each elastic reflection contributes half
/// a clockwise turn (the jump (0,-v) -> (0,+v) through the left half-plane).
RotationResult rotation_number(const BouncingTrajectory& traj);

struct Interval {
  double lo = 0.0, hi = 0.0;
};
/// Time to complete one phase-plane rotation: [pi/sqrt(mu_hi),
/// pi/sqrt(mu_lo) + pi/sqrt(n)].
Interval rotation_time_bounds(double mu_lo, double mu_hi, int n);

/// Theta(L,x) = Int_0^T L/(R0 + x(t))^2 dt, the angle swept per radial
/// period. The profile must stay above -R0.
double theta_functional(double L, const std::function<double(double)>& x,
                        double R0, double T, double rel_tol = 1e-12);

/// Arch function psi_j: sin(sqrt(mu_j) t) on [0, T/j], extended by
/// T/j-periodicity (nonnegative, sup 1).
double psi(int j, double T, double t);
/// Flat variant: equal to psi_j on [0, T/j], zero on [T/j, T], T-periodic.
double psi_tilde(int j, double T, double t);

/// Landesman-Lazer data: band and the asymptotic residuals
///   h_plus(t)  >= limsup_{x->inf} (f(t,x+R0) - mu_{N+1} x)   for (LLcond)
///   h_minus(t) <= liminf_{x->inf} (f(t,x+R0) - mu_N x)       for (LLcond2)
/// supplied by the user, or estimated from f on a ray ladder (heuristic).
struct LLProblem {
  ResonanceBand band;
  double eta_hat = 0.0;
  std::function<double(double)> h_plus, h_minus;
  bool heuristic = false;  ///< true when h± came from the numeric estimate
};

/// Builds heuristic h± by evaluating the residual of f at
/// x in {1e2, 1e3, 1e4} * R0 and extrapolating; flagged as heuristic, and
/// h± are unset when the ladder does not settle.
LLProblem estimate_ll_residuals(const CentralForceProblem& p, int N);

struct LLVerdict {
  enum class V { satisfied, violated, inconclusive } verdict;
  std::string condition;    ///< "LLcond", "LLcond2" or "LLcond2N0"
  int tau_grid = 0;
  double min_margin = 0.0;  ///< smallest strict-sign margin over the grid
  double worst_tau = 0.0;
  std::string detail;
};

/// Evaluates (LLcond): Int h_plus(t) psi_{N+1}(t+tau) dt < 0 and (LLcond2):
/// Int h_minus(t) psi_N(t+tau) dt > 0 over a uniform tau grid in [0,T].
std::vector<LLVerdict> ll_check(const LLProblem& p, int tau_grid = 512,
                                int jobs = 1);

/// One-sided N = 0 variant (LLcond2N0): positivity of the psi_1 integral of
/// the mu_1 residual, plus the growth floor liminf f(t,x)/x >= eps_bar > 0
/// checked on sampled rays.
LLVerdict ll_check_n0(const LLProblem& p, double eps_bar,
                      const CentralForceProblem& prob, int tau_grid = 512);

/// Per-case report of the four defining properties of a bouncing solution.
struct ValidationReport {
  double max_ode_residual = 0.0;    // case i, on arc interiors
  double max_reflect_defect = 0.0;  // case ii, |v+ + v-|
  double min_isolation = 0.0;       // case iii, gap around transversal zeros
  double min_contact_g = 0.0;       // case iv, min g(L,t,0) on contacts
  bool pass_i = true, pass_ii = true, pass_iii = true, pass_iv = true;
  bool all_passed() const { return pass_i && pass_ii && pass_iii && pass_iv; }
};

struct ValidationTolerances {
  double ode_residual = 1e-7;   ///< vs 1e3*rel_tol*(1+|g|) scaling
  double reflect = 0.0;         ///< case ii must be exact
  double isolation = 1e-9;      ///< minimal spacing between wall events
  double contact_g = 1e-9;      ///< g >= -tol on contact intervals
};

ValidationReport validate_bouncing(const BouncingTrajectory& traj,
                                   const RadialField& field,
                                   const ValidationTolerances& tol = {});

/// CSV import path: finite-difference residuals on the samples (looser by
/// nature; tolerances supplied by the caller).
ValidationReport validate_sampled(const SampledTrajectory& traj,
                                  const RadialField& field,
                                  const ValidationTolerances& tol);

/// Phase-plane regions of the a priori bound construction.
struct PhaseRegion {
  enum class Kind { half_plus, half_minus, ball, ellipse, xi } kind;
  double s = 0.0;      ///< ball radius
  int n = 1;           ///< ellipse stiffness
  double delta = 0.0;  ///< ellipse pull-in
  double c = 0.0;      ///< ellipse/xi level

  static PhaseRegion half_plane_plus();
  static PhaseRegion half_plane_minus();
  static PhaseRegion ball(double s);
  static PhaseRegion ellipse(int n, double delta, double c);
  static PhaseRegion xi(int n, double delta, double c);
};

/// Exact inequality evaluation of the defining formulas; for xi the set is
/// (Pi- ∩ Sigma_c^n) ∪ (Pi+ ∩ B_c).
bool region_membership(const PhaseRegion& region, double x, double y);

}  // namespace orbitbounce
