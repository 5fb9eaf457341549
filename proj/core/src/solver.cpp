#include "orbitbounce/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "orbitbounce/parallel.hpp"

namespace orbitbounce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using A2 = std::array<double, 2>;

double norm2(const A2& a) { return std::hypot(a[0], a[1]); }

struct NewtonOut {
  bool converged = false;
  A2 x{};
  double resnorm = kInf;  ///< scaled max-norm of the residual
  double sv_min = 0.0;
  int iters = 0;
};

double smallest_singular_value(const double J[2][2]) {
  double a = J[0][0] * J[0][0] + J[1][0] * J[1][0];
  double b = J[0][0] * J[0][1] + J[1][0] * J[1][1];
  double c = J[0][1] * J[0][1] + J[1][1] * J[1][1];
  double tr = a + c;
  double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
  double lam = 0.5 * (tr - disc);
  return std::sqrt(std::max(0.0, lam));
}

/// Damped Newton with central-difference Jacobian on a 2D map. The residual
/// callable returns nullopt when the point is not evaluable (failed
/// integration, missing impact, ...).
NewtonOut newton2(const std::function<std::optional<A2>(const A2&)>& F, A2 x0,
                  const A2& scale, const A2& fd, double tol, int maxit) {
  NewtonOut out;
  out.x = x0;
  auto scaled_norm = [&](const A2& f) {
    return std::max(std::abs(f[0]) / scale[0], std::abs(f[1]) / scale[1]);
  };
  auto f0opt = F(x0);
  if (!f0opt) return out;
  A2 f0 = *f0opt;
  out.resnorm = scaled_norm(f0);
  for (int it = 0; it < maxit; ++it) {
    out.iters = it;
    if (out.resnorm <= tol) {
      out.converged = true;
      break;
    }
    double J[2][2];
    bool jac_ok = true;
    for (int j = 0; j < 2 && jac_ok; ++j) {
      A2 xp = out.x, xm = out.x;
      xp[j] += fd[j];
      xm[j] -= fd[j];
      auto fp = F(xp), fm = F(xm);
      if (fp && fm) {
        for (int i = 0; i < 2; ++i) J[i][j] = ((*fp)[i] - (*fm)[i]) / (2.0 * fd[j]);
      } else if (fp) {
        for (int i = 0; i < 2; ++i) J[i][j] = ((*fp)[i] - f0[i]) / fd[j];
      } else if (fm) {
        for (int i = 0; i < 2; ++i) J[i][j] = (f0[i] - (*fm)[i]) / fd[j];
      } else {
        jac_ok = false;
      }
    }
    if (!jac_ok) break;
    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    double jscale = std::abs(J[0][0]) + std::abs(J[0][1]) + std::abs(J[1][0]) +
                    std::abs(J[1][1]) + 1e-300;
    if (std::abs(det) < 1e-14 * jscale * jscale) break;  // singular period map
    A2 d = {(-f0[0] * J[1][1] + f0[1] * J[0][1]) / det,
            (-J[0][0] * f0[1] + J[1][0] * f0[0]) / det};
    out.sv_min = smallest_singular_value(J);

    double base = norm2(f0);
    double lam = 1.0;
    bool stepped = false;
    for (int ls = 0; ls < 9; ++ls, lam *= 0.5) {
      A2 xt = {out.x[0] + lam * d[0], out.x[1] + lam * d[1]};
      auto ft = F(xt);
      if (!ft) continue;
      if (norm2(*ft) <= (1.0 - 1e-4 * lam) * base || scaled_norm(*ft) <= tol) {
        out.x = xt;
        f0 = *ft;
        out.resnorm = scaled_norm(f0);
        stepped = true;
        break;
      }
    }
    if (!stepped) break;  // stagnation
  }
  if (out.resnorm <= tol) out.converged = true;
  return out;
}

/// Minimal Nelder-Mead on a 2D objective (returns +inf for invalid points).
A2 nelder_mead2(const std::function<double(const A2&)>& f, A2 x0, A2 step,
                int maxit, double* fbest) {
  A2 pts[3] = {x0, {x0[0] + step[0], x0[1]}, {x0[0], x0[1] + step[1]}};
  double fv[3] = {f(pts[0]), f(pts[1]), f(pts[2])};
  auto order = [&]() {
    for (int i = 0; i < 2; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (fv[j] < fv[i]) {
          std::swap(fv[i], fv[j]);
          std::swap(pts[i], pts[j]);
        }
  };
  for (int it = 0; it < maxit; ++it) {
    order();
    A2 centroid = {0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])};
    A2 refl = {centroid[0] + (centroid[0] - pts[2][0]),
               centroid[1] + (centroid[1] - pts[2][1])};
    double fr = f(refl);
    if (fr < fv[0]) {
      A2 exp2 = {centroid[0] + 2.0 * (centroid[0] - pts[2][0]),
                 centroid[1] + 2.0 * (centroid[1] - pts[2][1])};
      double fe = f(exp2);
      if (fe < fr) {
        pts[2] = exp2;
        fv[2] = fe;
      } else {
        pts[2] = refl;
        fv[2] = fr;
      }
    } else if (fr < fv[1]) {
      pts[2] = refl;
      fv[2] = fr;
    } else {
      A2 con = {centroid[0] + 0.5 * (pts[2][0] - centroid[0]),
                centroid[1] + 0.5 * (pts[2][1] - centroid[1])};
      double fc = f(con);
      if (fc < fv[2]) {
        pts[2] = con;
        fv[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          pts[i] = {pts[0][0] + 0.5 * (pts[i][0] - pts[0][0]),
                    pts[0][1] + 0.5 * (pts[i][1] - pts[0][1])};
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  if (fbest) *fbest = fv[0];
  return pts[0];
}

std::vector<A2> jittered(std::vector<A2> guesses, unsigned long long seed) {
  if (seed == 0) return guesses;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.97, 1.03);
  for (auto& g : guesses) {
    g[0] *= u(rng);
    g[1] *= u(rng);
  }
  return guesses;
}

std::string best_residual_note(const std::vector<double>& best) {
  std::ostringstream os;
  os << "no guess converged; best scaled residual per guess:";
  for (double b : best) os << " " << (std::isfinite(b) ? b : -1.0);
  return os.str();
}

}  // namespace

PeriodicSolution shoot_periodic_smooth(const SmoothField& field, double T,
                                       const ShootingConfig& cfg,
                                       const IntegratorOptions& opts) {
  if (!(T > 0.0)) throw std::invalid_argument("shoot_periodic_smooth: T must be > 0");
  auto period_map = [&](const A2& s) -> std::optional<A2> {
    auto res = integrate_smooth(field, PhaseState{s[0], s[1]}, 0.0, 0.0, T, opts);
    if (!res.complete) return std::nullopt;
    return A2{res.segment.x(T) - s[0], res.segment.v(T) - s[1]};
  };

  std::vector<A2> guesses = cfg.multistart;
  if (guesses.empty()) {
    // energy ladder around the forced-amplitude scale of the field
    double g0 = 0.0;
    for (int i = 0; i < 16; ++i) g0 = std::max(g0, std::abs(field.g(T * i / 16.0, 0.0)));
    double w2 = std::abs(field.g(0.0, 1e-3) - field.g(0.0, -1e-3)) / 2e-3;
    double base = std::max(1e-3, g0 / std::max(1.0, w2));
    double w = std::sqrt(std::max(1.0, w2));
    guesses = {{0.0, 0.0},       {base, 0.0},    {-base, 0.0},   {0.0, base * w},
               {0.0, -base * w}, {2 * base, 0.0}, {4 * base, 0.0}, {base, base * w}};
  }
  guesses = jittered(std::move(guesses), cfg.seed);

  std::vector<NewtonOut> outs(guesses.size());
  parallel_for(cfg.jobs, static_cast<int>(guesses.size()), [&](int i) {
    A2 g = guesses[i];
    A2 scale = {std::max(1.0, std::abs(g[0])), std::max(1.0, std::abs(g[1]))};
    A2 fd = {cfg.fd_step * std::max(1.0, std::abs(g[0])),
             cfg.fd_step * std::max(1.0, std::abs(g[1]))};
    outs[i] = newton2(period_map, g, scale, fd, cfg.residual_tol, cfg.max_newton_iters);
  });

  PeriodicSolution sol;
  sol.mode = PeriodicSolution::Mode::smooth;
  std::vector<double> best;
  for (size_t i = 0; i < outs.size(); ++i) {
    best.push_back(outs[i].resnorm);
    if (!sol.converged && outs[i].converged) {
      sol.converged = true;
      sol.x0 = outs[i].x[0];
      sol.v0 = outs[i].x[1];
      sol.t_ref = 0.0;
      sol.residual = outs[i].resnorm;
      sol.jacobian_distance = outs[i].sv_min;
    }
  }
  if (!sol.converged) sol.diagnostic = best_residual_note(best);
  return sol;
}

BouncingTrajectory realize_bouncing(const RadialField& field,
                                    const PeriodicSolution& sol, double t0,
                                    double t1, const IntegratorOptions& opts) {
  return integrate_bouncing(field, PhaseState{sol.x0, sol.v0}, 0.0, t0, t1, opts);
}

SmoothResult realize_smooth(const SmoothField& field, const PeriodicSolution& sol,
                            double t0, double t1, const IntegratorOptions& opts) {
  return integrate_smooth(field, PhaseState{sol.x0, sol.v0}, 0.0, t0, t1, opts);
}

std::function<double(double)> periodic_profile(const BouncingTrajectory& traj,
                                               double t_ref, double T) {
  return [&traj, t_ref, T](double t) {
    double s = std::fmod(t - t_ref, T);
    if (s < 0.0) s += T;
    return traj.r(t_ref + s);
  };
}

std::function<double(double)> periodic_profile(const DenseSegment& seg,
                                               double t_ref, double T) {
  return [&seg, t_ref, T](double t) {
    double s = std::fmod(t - t_ref, T);
    if (s < 0.0) s += T;
    return seg.x(t_ref + s);
  };
}

namespace {

/// Sampled average-field root: a crude equilibrium radius used to seed
/// shooting guesses.
double probe_equilibrium(const RadialField& field, double T) {
  auto gbar = [&](double x) {
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += field(T * i / 8.0, x);
    return s / 8.0;
  };
  double lo = 0.0, glo = gbar(0.0);
  if (glo >= 0.0) return 0.0;  // field pushes inward at the wall on average
  double hi = 1.0;
  for (int i = 0; i < 60 && gbar(hi) < 0.0; ++i) hi *= 2.0;
  if (gbar(hi) < 0.0) return 0.0;
  for (int i = 0; i < 80; ++i) {
    double m = 0.5 * (lo + hi);
    (gbar(m) < 0.0 ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

struct SectionSetup {
  std::vector<A2> guesses;  // (tau, v)
  std::vector<int> m;       // impacts per period for each guess
  bool contact_seen = false;
  bool saw_impacts = false;
};

SectionSetup harvest_section_guesses(const RadialField& field, double T,
                                     const IntegratorOptions& opts, double x_probe) {
  SectionSetup s;
  IntegratorOptions probe_opts = opts;
  probe_opts.rel_tol = std::max(opts.rel_tol, 1e-9);
  probe_opts.abs_tol = std::max(opts.abs_tol, 1e-11);
  for (double xf : {1.0, 0.25, 2.0}) {
    BouncingTrajectory probe;
    try {
      probe = integrate_bouncing(field, PhaseState{x_probe * xf, 0.0}, 0.0, 0.0,
                                 3.0 * T, probe_opts);
    } catch (const std::exception&) {
      continue;
    }
    if (!probe.contacts.empty()) s.contact_seen = true;
    for (const auto& e : probe.impacts) {
      s.saw_impacts = true;
      double tau = std::fmod(e.t, T);
      if (tau < 0.0) tau += T;
      s.guesses.push_back({tau, e.speed_out});
      if (s.guesses.size() >= 6) break;
    }
    if (s.guesses.size() >= 6) break;
  }
  return s;
}

int count_impacts_in_period(const BouncingTrajectory& traj, double tau, double T) {
  int m = 0;
  for (const auto& e : traj.impacts)
    if (e.t > tau && e.t <= tau + T * (1.0 + 1e-6)) ++m;
  return m;
}

}  // namespace

PeriodicSolution shoot_periodic_bouncing(const RadialField& field, double T,
                                         const ShootingConfig& cfg,
                                         const IntegratorOptions& opts) {
  if (!(T > 0.0)) throw std::invalid_argument("shoot_periodic_bouncing: T must be > 0");

  double x_eq = probe_equilibrium(field, T);
  SectionSetup setup = harvest_section_guesses(field, T, opts, std::max(x_eq, 0.05));

  // candidate section guesses: harvested impacts, user guesses, then a
  // default phase/speed ladder
  std::vector<A2> guesses = setup.guesses;
  for (const auto& g : cfg.multistart) guesses.push_back(g);
  double vbar = 0.0;
  for (const auto& g : setup.guesses) vbar = std::max(vbar, g[1]);
  if (vbar == 0.0) vbar = 0.5;
  for (double ph : {0.125, 0.375, 0.625, 0.875})
    for (double vf : {0.3, 1.0})
      guesses.push_back({ph * T, vf * vbar});
  guesses = jittered(std::move(guesses), cfg.seed);

  std::atomic<bool> contact_seen{setup.contact_seen};

  auto try_section = [&](const A2& guess) -> NewtonOut {
    NewtonOut fail;
    if (!(guess[1] > 0.0)) return fail;
    // impacts per period from the guess itself
    BouncingTrajectory probe;
    try {
      probe = integrate_bouncing(field, PhaseState{0.0, guess[1]}, 0.0, guess[0],
                                 guess[0] + T * (1.0 + 1e-6), opts);
    } catch (const std::exception&) {
      return fail;
    }
    if (!probe.contacts.empty()) {
      contact_seen = true;
      return fail;
    }
    int m = count_impacts_in_period(probe, guess[0], T);
    if (m < 1) return fail;

    auto F = [&, m](const A2& u) -> std::optional<A2> {
      if (!(u[1] > 0.0)) return std::nullopt;
      BouncingTrajectory traj;
      try {
        traj = integrate_bouncing(field, PhaseState{0.0, u[1]}, 0.0, u[0],
                                  u[0] + 1.75 * T, opts);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (traj.status != TrajectoryStatus::ok) return std::nullopt;
      if (!traj.contacts.empty()) {
        contact_seen = true;
        return std::nullopt;
      }
      if (static_cast<int>(traj.impacts.size()) < m) return std::nullopt;
      const auto& e = traj.impacts[m - 1];
      return A2{e.t - u[0] - T, e.speed_out - u[1]};
    };
    A2 scale = {T, std::max(1.0, std::abs(guess[1]))};
    A2 fd = {cfg.fd_step * T, cfg.fd_step * std::max(1.0, std::abs(guess[1]))};
    return newton2(F, guess, scale, fd, cfg.residual_tol, cfg.max_newton_iters);
  };

  std::vector<NewtonOut> outs(guesses.size());
  parallel_for(cfg.jobs, static_cast<int>(guesses.size()),
               [&](int i) { outs[i] = try_section(guesses[i]); });

  PeriodicSolution sol;
  std::vector<double> best;
  for (size_t i = 0; i < outs.size(); ++i) {
    best.push_back(outs[i].resnorm);
    if (!sol.converged && outs[i].converged) {
      sol.converged = true;
      sol.mode = PeriodicSolution::Mode::bouncing_section;
      sol.t_ref = outs[i].x[0];
      sol.x0 = 0.0;
      sol.v0 = outs[i].x[1];
      sol.residual = outs[i].resnorm;
      sol.jacobian_distance = outs[i].sv_min;
    }
  }
  if (sol.converged) {
    BouncingTrajectory traj = integrate_bouncing(
        field, PhaseState{0.0, sol.v0}, 0.0, sol.t_ref, sol.t_ref + T * (1.0 + 1e-6), opts);
    sol.impacts_per_period = count_impacts_in_period(traj, sol.t_ref, T);
    return sol;
  }

  // no impacting orbit found: try the smooth time-T map (detached orbit)
  if (x_eq > 0.0) {
    SmoothField sf = as_smooth_field(field);
    ShootingConfig scfg = cfg;
    scfg.multistart.clear();
    for (double f : {1.0, 0.8, 1.25, 1.5}) scfg.multistart.push_back({x_eq * f, 0.0});
    PeriodicSolution ss = shoot_periodic_smooth(sf, T, scfg, opts);
    if (ss.converged) {
      auto res = integrate_smooth(sf, PhaseState{ss.x0, ss.v0}, 0.0, 0.0, T, opts);
      double minx = kInf;
      for (int i = 0; i <= 512; ++i) minx = std::min(minx, res.segment.x(T * i / 512.0));
      if (minx >= -10.0 * opts.abs_tol) {
        ss.mode = PeriodicSolution::Mode::smooth;
        ss.impacts_per_period = 0;
        return ss;
      }
    }
  }

  // penalty bootstrap: solve the stiff smooth approximation and hand its
  // wall crossing to the section Newton
  if (cfg.allow_penalty_bootstrap) {
    PenaltyParams pp{10000, 1e-3};
    SmoothField pf = make_penalty(field, pp);
    ShootingConfig pcfg = cfg;
    pcfg.multistart.clear();
    pcfg.allow_penalty_bootstrap = false;
    PeriodicSolution ps = shoot_periodic_smooth(pf, T, pcfg, opts);
    if (ps.converged) {
      auto res = integrate_smooth(pf, PhaseState{ps.x0, ps.v0}, 0.0, 0.0, 2.0 * T, opts);
      if (res.complete) {
        auto cross = find_zero_crossing(res.segment, 0, 0.0, -1, opts);
        if (cross) {
          double tau = std::fmod(*cross, T);
          if (tau < 0.0) tau += T;
          double vout = std::abs(res.segment.v(*cross));
          NewtonOut nb = try_section({tau, vout});
          if (nb.converged) {
            sol.converged = true;
            sol.mode = PeriodicSolution::Mode::bouncing_section;
            sol.t_ref = nb.x[0];
            sol.x0 = 0.0;
            sol.v0 = nb.x[1];
            sol.residual = nb.resnorm;
            sol.jacobian_distance = nb.sv_min;
            BouncingTrajectory traj = integrate_bouncing(
                field, PhaseState{0.0, sol.v0}, 0.0, sol.t_ref,
                sol.t_ref + T * (1.0 + 1e-6), opts);
            sol.impacts_per_period = count_impacts_in_period(traj, sol.t_ref, T);
            return sol;
          }
        }
      }
    }
  }

  // contact intervals make the section map undefined: minimize the direct
  // periodicity residual instead
  if (contact_seen) {
    auto defect = [&](const A2& s) -> double {
      if (s[0] < 0.0) return kInf;
      BouncingTrajectory traj;
      try {
        traj = integrate_bouncing(field, PhaseState{s[0], s[1]}, 0.0, 0.0, T, opts);
      } catch (const std::exception&) {
        return kInf;
      }
      if (traj.status != TrajectoryStatus::ok) return kInf;
      PolarState end = traj.state(T);
      double r1 = end.rho - field.R0();
      double v1 = traj.in_contact(T) ? 0.0 : end.v;
      return std::hypot(r1 - s[0], v1 - s[1]);
    };
    double fbest = kInf;
    A2 x0 = {std::max(x_eq, 0.01), 0.0};
    A2 xb = nelder_mead2(defect, x0, {0.05, 0.05}, 400, &fbest);
    sol.mode = PeriodicSolution::Mode::bouncing_fallback;
    sol.x0 = std::max(0.0, xb[0]);
    sol.v0 = xb[1];
    sol.t_ref = 0.0;
    sol.residual = fbest;
    sol.converged = fbest <= cfg.residual_tol * 10.0;
    sol.diagnostic =
        "section map undefined (contact intervals); direct periodicity-residual "
        "minimization reached " + std::to_string(fbest);
    if (sol.converged) {
      BouncingTrajectory traj = integrate_bouncing(field, PhaseState{sol.x0, sol.v0},
                                                   0.0, 0.0, T * (1.0 + 1e-6), opts);
      sol.impacts_per_period = count_impacts_in_period(traj, 0.0, T);
    }
    return sol;
  }

  sol.diagnostic = best_residual_note(best);
  return sol;
}

namespace {

struct LSolve {
  bool ok = false;
  double L = 0.0;
  double theta = 0.0;
  double max_x = 0.0;
  PeriodicSolution sol;
};

/// One periodic solve at fixed L plus the Theta evaluation.
LSolve solve_at_L(const CentralForceProblem& prob, double L, const SolveMode& mode,
                  const PeriodicSolution* warm, const ShootingConfig& cfg,
                  const IntegratorOptions& opts) {
  LSolve out;
  out.L = L;
  double T = prob.T;
  ShootingConfig wcfg = cfg;
  if (warm && warm->converged) {
    wcfg.multistart.clear();
    if (warm->mode == PeriodicSolution::Mode::bouncing_section)
      wcfg.multistart.push_back({warm->t_ref, warm->v0});
    else
      wcfg.multistart.push_back({warm->x0, warm->v0});
    for (const auto& g : cfg.multistart) wcfg.multistart.push_back(g);
  }

  if (mode.kind == SolveMode::Kind::bouncing) {
    RadialField field = radial_field(prob, L);
    PeriodicSolution sol = shoot_periodic_bouncing(field, T, wcfg, opts);
    if (!sol.converged) {
      out.sol = sol;
      return out;
    }
    BouncingTrajectory traj =
        realize_bouncing(field, sol, sol.t_ref, sol.t_ref + T, opts);
    auto prof = periodic_profile(traj, sol.t_ref, T);
    out.theta = theta_functional(L, prof, prob.R0, T);
    for (int i = 0; i <= 1024; ++i) out.max_x = std::max(out.max_x, prof(T * i / 1024.0));
    out.sol = sol;
    out.ok = true;
    return out;
  }

  SmoothField field;
  if (mode.kappa == 1.0) {
    field = make_penalty(radial_field(prob, L), mode.pen);
  } else {
    ResonantPenaltyParams rp;
    rp.base = mode.pen;
    rp.kappa = mode.kappa;
    field = make_resonant_penalty(prob, L, rp);
  }
  PeriodicSolution sol = shoot_periodic_smooth(field, T, wcfg, opts);
  if (!sol.converged) {
    out.sol = sol;
    return out;
  }
  auto res = realize_smooth(field, sol, 0.0, T, opts);
  if (!res.complete) {
    out.sol = sol;
    return out;
  }
  auto prof = periodic_profile(res.segment, 0.0, T);
  out.theta = theta_functional(L, prof, prob.R0, T);
  for (int i = 0; i <= 1024; ++i) out.max_x = std::max(out.max_x, prof(T * i / 1024.0));
  out.sol = sol;
  out.ok = true;
  return out;
}

}  // namespace

int k_min(int nu, double L0, double R0, double T, double R) {
  if (nu < 1 || !(L0 > 0.0) || !(R0 > 0.0) || !(T > 0.0) || !(R >= 0.0))
    throw std::invalid_argument("k_min: all arguments must be positive");
  double bound = 2.0 * M_PI * nu * (R0 + R) * (R0 + R) / (T * L0);
  int k = static_cast<int>(std::floor(bound)) + 1;
  return std::max(k, 1);
}

OrbitResult continue_in_L(const CentralForceProblem& prob, WindingSpec spec,
                          double L_lo, double L_hi, const SolveMode& mode,
                          const ShootingConfig& cfg, const IntegratorOptions& opts) {
  prob.validate();
  if (spec.k < 1 || spec.nu < 1)
    throw std::invalid_argument("continue_in_L: k and nu must be >= 1");
  if (!(L_hi > L_lo) || L_lo < 0.0)
    throw std::invalid_argument("continue_in_L: need 0 <= L_lo < L_hi");

  OrbitResult orb;
  orb.spec = spec;
  double T = prob.T;
  double target = 2.0 * M_PI * spec.nu / spec.k;
  double tol_theta = cfg.residual_tol * target;

  // 17-point monotonicity scan
  constexpr int kGrid = 17;
  std::vector<LSolve> scan(kGrid);
  const PeriodicSolution* warm = nullptr;
  for (int i = 0; i < kGrid; ++i) {
    double L = L_lo + (L_hi - L_lo) * i / (kGrid - 1);
    if (L == 0.0) {
      scan[i].ok = true;  // Theta(0, x) = 0 for any profile
      scan[i].L = 0.0;
      scan[i].theta = 0.0;
      continue;
    }
    scan[i] = solve_at_L(prob, L, mode, warm, cfg, opts);
    if (scan[i].ok) warm = &scan[i].sol;
  }

  double th_min = kInf, th_max = -kInf, max_R = 0.0;
  int solved = 0;
  bool monotone = true;
  double prev = -kInf;
  for (const auto& s : scan) {
    if (!s.ok) continue;
    ++solved;
    th_min = std::min(th_min, s.theta);
    th_max = std::max(th_max, s.theta);
    max_R = std::max(max_R, s.max_x);
    if (s.theta < prev) monotone = false;
    prev = s.theta;
  }
  if (solved < 2) {
    orb.failure = "continuation scan failed: only " + std::to_string(solved) +
                  " of 17 grid solves converged";
    return orb;
  }
  if (!(target > th_min) || !(target <= th_max)) {
    std::ostringstream os;
    os << "theta target " << target << " outside achieved range [" << th_min << ", "
       << th_max << "] over L in [" << L_lo << ", " << L_hi << "]"
       << "; k_min for the scanned amplitude R = " << max_R << " is "
       << k_min(spec.nu, L_hi, prob.R0, T, max_R);
    orb.failure = os.str();
    orb.theta_min = th_min;
    orb.theta_max = th_max;
    return orb;
  }

  // bracket: smallest-L sign change of theta - target (the scan is
  // monotone for the catalog problems; when it is not, this still picks
  // the leftmost bracket, i.e. the smallest L)
  int ia = -1, ib = -1;
  {
    int last_ok = -1;
    for (int i = 0; i < kGrid; ++i) {
      if (!scan[i].ok) continue;
      if (last_ok >= 0) {
        double ha = scan[last_ok].theta - target;
        double hb = scan[i].theta - target;
        if ((ha <= 0.0 && hb >= 0.0) || (ha >= 0.0 && hb <= 0.0)) {
          ia = last_ok;
          ib = i;
          break;
        }
      }
      last_ok = i;
    }
  }
  if (ia < 0) {
    orb.failure = "no bracket for the theta target despite range coverage";
    orb.theta_min = th_min;
    orb.theta_max = th_max;
    return orb;
  }
  if (!monotone) {
    orb.failure.clear();  // scanning fallback: proceed on the leftmost bracket
  }

  double La = scan[ia].L, ha = scan[ia].theta - target;
  double Lb = scan[ib].L, hb = scan[ib].theta - target;
  LSolve rb = scan[ib];
  LSolve best = std::abs(ha) < std::abs(hb) && scan[ia].sol.converged ? scan[ia] : scan[ib];
  const PeriodicSolution* bracket_warm =
      scan[ib].sol.converged ? &scan[ib].sol
                             : (scan[ia].sol.converged ? &scan[ia].sol : nullptr);

  bool solved_target = std::abs(best.theta - target) <= tol_theta && best.sol.converged;
  for (int it = 0; it < 80 && !solved_target; ++it) {
    double Lm;
    if (it % 2 == 0 && hb != ha) {
      Lm = La - ha * (Lb - La) / (hb - ha);
      double guard = 0.02 * (Lb - La);
      if (!(Lm > La + guard && Lm < Lb - guard)) Lm = 0.5 * (La + Lb);
    } else {
      Lm = 0.5 * (La + Lb);
    }
    LSolve sm = solve_at_L(prob, Lm, mode, bracket_warm, cfg, opts);
    if (!sm.ok) {
      // shrink toward the better side and retry
      Lm = 0.5 * (Lm + (std::abs(ha) < std::abs(hb) ? La : Lb));
      sm = solve_at_L(prob, Lm, mode, bracket_warm, cfg, opts);
      if (!sm.ok) {
        orb.failure = "continuation corrector failed near L = " + std::to_string(Lm) +
                      ": " + sm.sol.diagnostic;
        return orb;
      }
    }
    bracket_warm = &rb.sol;  // keep a stable warm pointer (rb updated below)
    double hm = sm.theta - target;
    if (std::abs(hm) <= std::abs(best.theta - target) || !best.sol.converged) best = sm;
    if ((ha <= 0.0) == (hm <= 0.0)) {
      La = Lm;
      ha = hm;
    } else {
      Lb = Lm;
      hb = hm;
    }
    rb = sm;
    solved_target = std::abs(best.theta - target) <= tol_theta;
    if (Lb - La < 1e-15 * std::max(1.0, Lb)) break;
  }
  if (!solved_target) {
    orb.failure = "theta refinement stalled: best |theta - target| = " +
                  std::to_string(std::abs(best.theta - target));
    return orb;
  }

  // assemble and independently re-verify the orbit
  double L = best.L;
  orb.L = L;
  orb.sol = best.sol;
  orb.theta_value = best.theta;
  orb.res_theta = std::abs(spec.k * best.theta - 2.0 * M_PI * spec.nu);
  double t_ref = best.sol.t_ref;

  std::function<double(double)> prof, dprof;
  std::function<double(double)> accrued;  // theta accrued from t_ref
  BouncingTrajectory btraj;
  SmoothResult sres;
  if (mode.kind == SolveMode::Kind::bouncing) {
    RadialField field = radial_field(prob, L);
    btraj = realize_bouncing(field, best.sol, t_ref, t_ref + T * (1.0 + 1e-9), opts);
    orb.res_rho = std::abs(btraj.r(t_ref + T) - btraj.r(t_ref));
    double v0 = btraj.in_contact(t_ref) ? 0.0 : btraj.rdot(t_ref);
    double v1 = btraj.in_contact(t_ref + T) ? 0.0 : btraj.rdot(t_ref + T);
    // at the section point the state is just past a reflection
    if (!btraj.impacts.empty() &&
        std::abs(btraj.impacts.back().t - (t_ref + T)) < 1e-9 * std::max(1.0, T))
      v1 = btraj.impacts.back().speed_out;
    orb.res_v = std::abs(v1 - v0);
    orb.impacts_per_period = count_impacts_in_period(btraj, t_ref, T);
    prof = periodic_profile(btraj, t_ref, T);
    dprof = [&btraj, t_ref, T](double t) {
      double s = std::fmod(t - t_ref, T);
      if (s < 0.0) s += T;
      return btraj.in_contact(t_ref + s) ? 0.0 : btraj.rdot(t_ref + s);
    };
    accrued = [&btraj, t_ref](double s) {
      return btraj.theta(t_ref + s) - btraj.theta(t_ref);
    };
    try {
      orb.rotation_count = rotation_number(btraj).winding;
    } catch (const std::domain_error&) {
      orb.rotation_count = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    SmoothField field;
    if (mode.kappa == 1.0) {
      field = make_penalty(radial_field(prob, L), mode.pen);
    } else {
      ResonantPenaltyParams rp;
      rp.base = mode.pen;
      rp.kappa = mode.kappa;
      field = make_resonant_penalty(prob, L, rp);
    }
    sres = realize_smooth(field, best.sol, 0.0, T, opts);
    orb.res_rho = std::abs(sres.segment.x(T) - sres.segment.x(0.0));
    orb.res_v = std::abs(sres.segment.v(T) - sres.segment.v(0.0));
    orb.impacts_per_period = 0;
    prof = periodic_profile(sres.segment, 0.0, T);
    dprof = [&sres, T](double t) {
      double s = std::fmod(t, T);
      if (s < 0.0) s += T;
      return sres.segment.v(s);
    };
    accrued = [&sres](double s) { return sres.segment.theta(s) - sres.segment.theta(0.0); };
    auto path = [&sres](double t, double& x, double& y) {
      x = sres.segment.x(t);
      y = sres.segment.v(t);
    };
    try {
      orb.rotation_count = rotation_number(path, 0.0, T, 4096).winding;
    } catch (const std::domain_error&) {
      orb.rotation_count = std::numeric_limits<double>::quiet_NaN();
    }
  }

  constexpr int kProf = 1024;
  orb.ts.resize(kProf + 1);
  orb.rho.resize(kProf + 1);
  orb.rho_prime.resize(kProf + 1);
  for (int i = 0; i <= kProf; ++i) {
    double t = T * i / kProf;
    orb.ts[i] = t;
    orb.rho[i] = prob.R0 + prof(t);
    orb.rho_prime[i] = dprof(t);
    orb.max_x = std::max(orb.max_x, prof(t));
  }

  // theta(t) on [0, kT] with theta(0) = 0, built from the accrued angle and
  // the exact per-period increment Theta
  double Theta = best.theta;
  auto theta_abs = [&](double t) {
    double tr = std::fmod(t_ref, T);
    if (tr < 0.0) tr += T;
    double periods = std::floor(t / T);
    double s = t - periods * T;
    double val;
    if (s < tr)
      val = accrued(s - tr + T) - accrued(T - tr);
    else
      val = accrued(s - tr) + accrued(T) - accrued(T - tr);
    return periods * Theta + val;
  };
  constexpr int kThProf = 2048;
  orb.theta_ts.resize(kThProf + 1);
  orb.theta_vals.resize(kThProf + 1);
  double span = spec.k * T;
  for (int i = 0; i <= kThProf; ++i) {
    double t = span * i / kThProf;
    orb.theta_ts[i] = t;
    orb.theta_vals[i] = theta_abs(t);
  }
  orb.ok = true;
  return orb;
}

ResonantResult solve_resonant(const CentralForceProblem& prob, const LLProblem& ll,
                              WindingSpec spec, const std::vector<int>& ladder,
                              double delta, const ShootingConfig& cfg,
                              const IntegratorOptions& opts) {
  ResonantResult out;
  out.ll_report = ll_check(ll, 512, cfg.jobs);
  for (const auto& v : out.ll_report) {
    if (v.verdict != LLVerdict::V::satisfied) {
      out.refused = true;
      out.failure = "Landesman-Lazer check " + v.condition +
                    (v.verdict == LLVerdict::V::violated ? " violated" : " inconclusive") +
                    " (worst tau = " + std::to_string(v.worst_tau) + ")";
      return out;
    }
  }
  if (ladder.empty()) {
    out.failure = "empty penalty ladder";
    return out;
  }

  std::vector<int> ns = ladder;
  std::sort(ns.begin(), ns.end());
  double L_lo = 0.0, L_hi = prob.L0;
  std::vector<OrbitResult> orbits;
  for (int n : ns) {
    double kappa = kappa_for(n, ll.band.mu_lo, ll.band.mu_hi);
    SolveMode mode = SolveMode::penalty(PenaltyParams{n, delta}, kappa);
    OrbitResult orb = continue_in_L(prob, spec, L_lo, L_hi, mode, cfg, opts);
    if (!orb.ok) {
      out.failure = "rung n = " + std::to_string(n) + " failed: " + orb.failure;
      return out;
    }
    out.rungs.push_back({n, kappa, orb.L, orb.theta_value,
                         std::max(orb.res_rho, orb.res_v)});
    orbits.push_back(std::move(orb));
    // narrow the window around the last rung for the next one
    L_lo = std::max(0.0, orbits.back().L * 0.25);
    L_hi = std::min(prob.L0, std::max(orbits.back().L * 4.0, orbits.back().L + 1e-3));
  }
  out.finest = orbits.back();
  out.ok = true;

  // Richardson extrapolation in 1/sqrt(n) of (L, x(0), x'(0)) across the two
  // finest rungs, handed to the exact bouncing integrator as a diagnostic
  if (orbits.size() >= 2) {
    const OrbitResult& fine = orbits[orbits.size() - 1];
    const OrbitResult& prev = orbits[orbits.size() - 2];
    double sf = 1.0 / std::sqrt(static_cast<double>(ns[ns.size() - 1]));
    double sp = 1.0 / std::sqrt(static_cast<double>(ns[ns.size() - 2]));
    auto extrap = [&](double a_fine, double a_prev) {
      return a_fine + sf * (a_fine - a_prev) / (sp - sf);
    };
    out.extrap_L = extrap(fine.L, prev.L);
    double x0 = extrap(fine.rho.front() - prob.R0, prev.rho.front() - prob.R0);
    double v0 = extrap(fine.rho_prime.front(), prev.rho_prime.front());
    x0 = std::max(0.0, x0);
    try {
      RadialField field = radial_field(prob, std::max(0.0, out.extrap_L));
      BouncingTrajectory traj =
          integrate_bouncing(field, PhaseState{x0, v0}, 0.0, 0.0, prob.T, opts);
      double r1 = traj.r(prob.T);
      double v1 = traj.in_contact(prob.T) ? 0.0 : traj.rdot(prob.T);
      out.extrap_defect = std::hypot(r1 - x0, v1 - v0);
    } catch (const std::exception& e) {
      out.extrap_defect = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

namespace {

std::function<double(double)> grid_interp(const std::vector<double>& ts,
                                          const std::vector<double>& vals, double T) {
  return [&ts, &vals, T](double t) {
    double s = std::fmod(t, T);
    if (s < 0.0) s += T;
    double pos = s / T * (ts.size() - 1);
    size_t i = std::min(static_cast<size_t>(pos), ts.size() - 2);
    double w = pos - i;
    return (1.0 - w) * vals[i] + w * vals[i + 1];
  };
}

}  // namespace

CylinderResult solve_cylinder(const CylinderProblem& cp, WindingSpec spec,
                              const ShootingConfig& cfg,
                              const IntegratorOptions& opts, int max_sweeps) {
  CylinderResult out;
  cp.radial.validate();
  double T = cp.radial.T;

  // transverse bands must be admissible before any solving starts
  for (size_t i = 0; i < cp.components.size(); ++i) {
    const auto& c = cp.components[i];
    auto cls = classify_asymmetric(c.mu_lo, c.mu_hi, c.nu_lo, c.nu_hi, T);
    if (!cls.admissible) {
      out.failure = "transverse component " + std::to_string(i) +
                    " has an inadmissible band: " + cls.detail;
      return out;
    }
  }

  // sublinearity certificates, sampled on rays (heuristic)
  if (cp.b1) {
    std::vector<double> y0(cp.components.size(), 0.0);
    double prev = kInf;
    bool decays = true;
    for (double mult : {1e2, 1e3, 1e4}) {
      double rho = mult * cp.radial.R0;
      double worst = 0.0;
      for (int i = 0; i < 16; ++i)
        worst = std::max(worst, std::abs(cp.b1(T * i / 16.0, rho, y0)) / rho * cp.radial.R0);
      if (worst > prev * 1.0000001) decays = false;
      prev = worst;
    }
    if (!decays)
      out.warnings.push_back("b1 growth certificate: |b1|/|x| does not decay on sampled rays");
  }
  for (size_t ci = 0; ci < cp.components.size(); ++ci) {
    if (!cp.components[ci].coupling) continue;
    std::vector<double> y0(cp.components.size(), 0.0);
    double prev = kInf;
    bool decays = true;
    for (double mult : {1e2, 1e3, 1e4}) {
      y0[ci] = mult;
      double worst = 0.0;
      for (int i = 0; i < 16; ++i)
        worst = std::max(worst,
                         std::abs(cp.components[ci].coupling(T * i / 16.0, 0.0, y0)) / mult);
      if (worst > prev * 1.0000001) decays = false;
      prev = worst;
    }
    if (!decays)
      out.warnings.push_back("b2[" + std::to_string(ci) +
                             "] growth certificate: |b2|/|y| does not decay on sampled rays");
  }

  constexpr int kGrid = 4096;
  out.ts.resize(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) out.ts[i] = T * i / kGrid;
  size_t nc = cp.components.size();
  out.y.assign(nc, std::vector<double>(kGrid + 1, 0.0));
  out.y_residuals.assign(nc, 0.0);

  std::vector<double> x_prof(kGrid + 1, 0.0);
  std::vector<PeriodicSolution> ywarm(nc);
  bool have_radial = false;

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    out.sweeps = sweep;
    double delta = 0.0;

    // radial step (re-solved only when the radial coupling is present)
    if (!have_radial || cp.b1) {
      CentralForceProblem eff = cp.radial;
      if (cp.b1) {
        auto b1 = cp.b1;
        std::vector<std::function<double(double)>> yfs;
        for (size_t c = 0; c < nc; ++c) yfs.push_back(grid_interp(out.ts, out.y[c], T));
        ForceFn base = cp.radial.f;
        size_t ncc = nc;
        eff.f = [base, b1, yfs, ncc](double t, double rho) {
          std::vector<double> yv(ncc);
          for (size_t c = 0; c < ncc; ++c) yv[c] = yfs[c](t);
          return base(t, rho) + b1(t, rho, yv) * rho;
        };
      }
      OrbitResult orb = continue_in_L(eff, spec, 0.0, cp.radial.L0,
                                      SolveMode::bouncing(), cfg, opts);
      if (!orb.ok) {
        out.failure = "radial solve failed in sweep " + std::to_string(sweep) + ": " +
                      orb.failure;
        return out;
      }
      for (int i = 0; i <= kGrid; ++i) {
        double pos = static_cast<double>(i) / kGrid * (orb.rho.size() - 1);
        size_t j = std::min(static_cast<size_t>(pos), orb.rho.size() - 2);
        double w = pos - j;
        double xnew = (1.0 - w) * orb.rho[j] + w * orb.rho[j + 1] - cp.radial.R0;
        delta = std::max(delta, std::abs(xnew - x_prof[i]));
        x_prof[i] = xnew;
      }
      out.radial = std::move(orb);
      have_radial = true;
    }

    // transverse steps, Gauss-Seidel style
    auto xf = grid_interp(out.ts, x_prof, T);
    for (size_t c = 0; c < nc; ++c) {
      const auto& comp = cp.components[c];
      SmoothField f;
      if (comp.coupling) {
        std::vector<std::function<double(double)>> yfs;
        for (size_t k = 0; k < nc; ++k) yfs.push_back(grid_interp(out.ts, out.y[k], T));
        auto coupling = comp.coupling;
        auto force = comp.f;
        size_t ncc = nc;
        f.g = [force, coupling, xf, yfs, ncc](double t, double y) {
          std::vector<double> yv(ncc);
          for (size_t k = 0; k < ncc; ++k) yv[k] = yfs[k](t);
          return force(t, y) + coupling(t, xf(t), yv);
        };
      } else {
        auto force = comp.f;
        f.g = [force](double t, double y) { return force(t, y); };
      }
      ShootingConfig ycfg = cfg;
      if (ywarm[c].converged) ycfg.multistart = {{ywarm[c].x0, ywarm[c].v0}};
      PeriodicSolution ys = shoot_periodic_smooth(f, T, ycfg, opts);
      if (!ys.converged) {
        out.failure = "transverse solve " + std::to_string(c) + " failed in sweep " +
                      std::to_string(sweep) + ": " + ys.diagnostic;
        return out;
      }
      auto res = realize_smooth(f, ys, 0.0, T, opts);
      for (int i = 0; i <= kGrid; ++i) {
        double ynew = res.segment.x(out.ts[i]);
        delta = std::max(delta, std::abs(ynew - out.y[c][i]));
        out.y[c][i] = ynew;
      }
      out.y_residuals[c] = ys.residual;
      ywarm[c] = ys;
    }

    out.sweep_deltas.push_back(delta);
    if (delta <= cfg.residual_tol) {
      out.ok = true;
      return out;
    }
  }
  out.failure = "alternation did not contract below residual_tol within " +
                std::to_string(max_sweeps) + " sweeps";
  return out;
}

}  // namespace orbitbounce
