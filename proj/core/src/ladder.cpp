#include "orbitbounce/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace orbitbounce {

LadderResult convergence_ladder(const CentralForceProblem& prob, double L,
                                const std::vector<int>& n_ladder,
                                const LadderOptions& lopts,
                                const ShootingConfig& cfg,
                                const IntegratorOptions& opts) {
  prob.validate();
  if (L < 0.0) throw std::invalid_argument("convergence_ladder: L must be >= 0");
  if (n_ladder.empty()) throw std::invalid_argument("convergence_ladder: empty ladder");
  for (int n : n_ladder) {
    if (n < 1) throw std::invalid_argument("convergence_ladder: n must be >= 1");
    if (n > lopts.max_n && !lopts.allow_stiff)
      throw std::invalid_argument(
          "convergence_ladder: n = " + std::to_string(n) + " beyond the stiffness cap " +
          std::to_string(lopts.max_n) + " (explicit step sizes scale as 1/sqrt(n)); "
          "set allow_stiff to override");
  }

  LadderResult out;
  double T = prob.T;
  int G = lopts.grid;
  RadialField field = radial_field(prob, L);

  // exact bouncing orbit first, when the shooter finds one
  std::function<double(double)> exact_prof;
  BouncingTrajectory exact_traj;
  {
    PeriodicSolution bs = shoot_periodic_bouncing(field, T, cfg, opts);
    if (bs.converged) {
      out.have_exact = true;
      out.exact_sol = bs;
      exact_traj = realize_bouncing(field, bs, bs.t_ref, bs.t_ref + T * (1.0 + 1e-9), opts);
      exact_prof = periodic_profile(exact_traj, bs.t_ref, T);
      out.exact_x.resize(G + 1);
      for (int i = 0; i <= G; ++i) out.exact_x[i] = exact_prof(T * i / G);
    }
  }

  std::vector<int> ns = n_ladder;
  std::sort(ns.begin(), ns.end());
  PeriodicSolution warm = out.have_exact ? out.exact_sol : PeriodicSolution{};
  std::vector<double> prev_x;
  for (int n : ns) {
    LadderRung rung;
    rung.n = n;
    rung.delta = lopts.delta;
    PenaltyParams pp{n, lopts.delta};
    SmoothField pf;
    if (lopts.band) {
      rung.kappa = kappa_for(n, lopts.band->mu_lo, lopts.band->mu_hi);
      ResonantPenaltyParams rp;
      rp.base = pp;
      rp.kappa = rung.kappa;
      rp.mu_lo = lopts.band->mu_lo;
      rp.mu_hi = lopts.band->mu_hi;
      pf = make_resonant_penalty(prob, L, rp);
    } else {
      pf = make_penalty(field, pp);
    }

    ShootingConfig rcfg = cfg;
    if (warm.converged) {
      rcfg.multistart.clear();
      if (warm.mode == PeriodicSolution::Mode::bouncing_section && exact_prof) {
        // seed from the exact bouncing state at t = 0
        double s = std::fmod(-warm.t_ref, T);
        if (s < 0.0) s += T;
        double tq = warm.t_ref + s;
        double x0 = exact_traj.r(tq);
        double v0 = exact_traj.in_contact(tq) ? 0.0 : exact_traj.rdot(tq);
        rcfg.multistart.push_back({x0, v0});
      } else {
        rcfg.multistart.push_back({warm.x0, warm.v0});
      }
      for (const auto& g : cfg.multistart) rcfg.multistart.push_back(g);
    }

    PeriodicSolution sol = shoot_periodic_smooth(pf, T, rcfg, opts);
    if (!sol.converged) {
      out.failure = "rung n = " + std::to_string(n) + ": " + sol.diagnostic;
      return out;  // partial ladder
    }
    warm = sol;
    auto res = realize_smooth(pf, sol, 0.0, T, opts);
    if (!res.complete) {
      out.failure = "rung n = " + std::to_string(n) + ": " + res.diagnostic;
      return out;
    }
    rung.residual = sol.residual;
    rung.ts.resize(G + 1);
    rung.x.resize(G + 1);
    rung.xdot.resize(G + 1);
    rung.min_x = HUGE_VAL;
    for (int i = 0; i <= G; ++i) {
      double t = T * i / G;
      rung.ts[i] = t;
      rung.x[i] = res.segment.x(t);
      rung.xdot[i] = res.segment.v(t);
      rung.min_x = std::min(rung.min_x, rung.x[i]);
      rung.max_xprime = std::max(rung.max_xprime, std::abs(rung.xdot[i]));
      rung.max_xabs = std::max(rung.max_xabs, std::abs(rung.x[i]));
    }
    rung.good_derivative_rhs = -rung.max_xprime / std::sqrt(static_cast<double>(n));
    rung.good_derivative_ok = rung.min_x >= rung.good_derivative_rhs;
    if (rung.max_xabs > 0.0 && rung.max_xprime > 0.0)
      rung.C_fit = std::max(rung.max_xprime / rung.max_xabs,
                            rung.max_xabs / rung.max_xprime);
    if (!prev_x.empty())
      for (int i = 0; i <= G; ++i)
        rung.sup_dist_prev = std::max(rung.sup_dist_prev,
                                      std::abs(rung.x[i] - prev_x[i]));
    if (out.have_exact)
      for (int i = 0; i <= G; ++i)
        rung.sup_dist_exact = std::max(rung.sup_dist_exact,
                                       std::abs(rung.x[i] - out.exact_x[i]));
    prev_x = rung.x;
    out.rungs.push_back(std::move(rung));
  }
  out.complete = true;
  return out;
}

}  // namespace orbitbounce
