#pragma once
#include <optional>
#include <string>
#include <vector>

#include "orbitbounce/penalty.hpp"
#include "orbitbounce/solver.hpp"

namespace orbitbounce {

struct LadderRung {
  int n = 0;
  double delta = 0.0;
  double kappa = 1.0;
  std::vector<double> ts, x, xdot;  ///< T-periodic solution on the sample grid
  double min_x = 0.0;
  double max_xprime = 0.0;
  double max_xabs = 0.0;
  double C_fit = 0.0;               ///< smallest C with ||x||/C <= ||x'|| <= C||x||
  double good_derivative_rhs = 0.0; ///< -||x'||_inf / sqrt(n)
  bool good_derivative_ok = false;  ///< min x >= -||x'||_inf / sqrt(n)
  double sup_dist_prev = 0.0;       ///< sup distance to the previous rung
  double sup_dist_exact = 0.0;      ///< sup distance to the exact bouncing orbit
  double residual = 0.0;
};

struct LadderResult {
  std::vector<LadderRung> rungs;
  bool complete = false;
  std::string failure;                 ///< first failed rung, when any
  bool have_exact = false;
  std::vector<double> exact_x;         ///< exact bouncing profile on the grid
  PeriodicSolution exact_sol;
};

struct LadderOptions {
  double delta = 1e-3;
  int grid = 2048;            ///< sup-distance sample grid per period
  int max_n = 1000000;        ///< stiffness cap (explicit steps scale as 1/sqrt(n))
  bool allow_stiff = false;   ///< override the cap
  std::optional<ResonanceBand> band;  ///< set for the kappa_n-rescaled ladder
};

/// Solves the T-periodic penalty problem on every rung of n_ladder at fixed
/// L, warm-starting each rung from the previous one, and reports the
/// convergence diagnostics toward the exact bouncing orbit (solved first,
/// when the bouncing shooter converges).
LadderResult convergence_ladder(const CentralForceProblem& prob, double L,
                                const std::vector<int>& n_ladder,
                                const LadderOptions& lopts,
                                const ShootingConfig& cfg,
                                const IntegratorOptions& opts);

}  // namespace orbitbounce
