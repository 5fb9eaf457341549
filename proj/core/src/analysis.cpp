#include "orbitbounce/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "orbitbounce/parallel.hpp"
#include "orbitbounce/quadrature.hpp"

namespace orbitbounce {

double mu_asymptote(int j, double T) {
  if (j < 0) throw std::invalid_argument("mu_asymptote: j must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("mu_asymptote: T must be > 0");
  double w = M_PI * j / T;
  return w * w;
}

ResonanceBand resonance_band(int N, double T) {
  if (N < 0) throw std::invalid_argument("resonance_band: N must be >= 0");
  return ResonanceBand{N, mu_asymptote(N, T), mu_asymptote(N + 1, T), T};
}

BandClassification classify_band(double mu_lo, double mu_hi, double T) {
  if (!(mu_lo > 0.0) || !(mu_hi >= mu_lo))
    throw std::invalid_argument("classify_band: need 0 < mu_lo <= mu_hi");
  if (!(T > 0.0)) throw std::invalid_argument("classify_band: T must be > 0");

  BandClassification out;
  // index of the last asymptote at or below mu_lo
  int N = static_cast<int>(std::floor(std::sqrt(mu_lo) * T / M_PI));
  while (mu_asymptote(N + 1, T) <= mu_lo) ++N;
  while (N > 0 && mu_asymptote(N, T) > mu_lo) --N;

  // any asymptote strictly inside (mu_lo, mu_hi) makes the band invalid
  for (int j = N; j <= N + 2; ++j) {
    double mj = mu_asymptote(j, T);
    if (mj > mu_lo && mj < mu_hi) {
      out.kind = BandClassification::Kind::invalid;
      out.detail = "range spans the asymptote mu_" + std::to_string(j);
      return out;
    }
  }
  if (mu_lo == mu_asymptote(N, T)) out.touched_lower = N;
  if (mu_hi == mu_asymptote(N + 1, T)) out.touched_upper = N + 1;
  if (mu_hi == mu_asymptote(N, T) && mu_lo == mu_hi) out.touched_upper = N;
  if (out.touched_lower || out.touched_upper) {
    out.kind = BandClassification::Kind::resonant;
    int j = out.touched_upper ? *out.touched_upper : *out.touched_lower;
    out.detail = "endpoint on asymptote mu_" + std::to_string(j);
    return out;
  }
  out.kind = BandClassification::Kind::nonresonant;
  out.N = N;
  return out;
}

AsymmetricClassification classify_asymmetric(double mu_lo, double mu_hi,
                                             double nu_lo, double nu_hi,
                                             double T) {
  if (!(mu_lo > 0.0 && nu_lo > 0.0))
    throw std::invalid_argument("classify_asymmetric: rates must be > 0");
  if (!(mu_hi >= mu_lo && nu_hi >= nu_lo))
    throw std::invalid_argument("classify_asymmetric: need mu_lo <= mu_hi, nu_lo <= nu_hi");
  if (!(T > 0.0)) throw std::invalid_argument("classify_asymmetric: T must be > 0");

  double hi = 1.0 / std::sqrt(mu_hi) + 1.0 / std::sqrt(nu_hi);
  double lo = 1.0 / std::sqrt(mu_lo) + 1.0 / std::sqrt(nu_lo);
  AsymmetricClassification out;
  for (int N = 1; N * M_PI < T / hi * M_PI * 2 + M_PI; ++N) {
    double lower = T / ((N + 1) * M_PI);
    double upper = T / (N * M_PI);
    if (lower < hi && hi <= lo && lo < upper) {
      out.admissible = true;
      out.N = N;
      return out;
    }
    if (upper <= hi) break;  // larger N only shrinks the window further
  }
  out.detail = "no integer N satisfies the chain inequality";
  return out;
}

namespace {
// clockwise sweep of the phase angle along a parametric path, with
// step-halving whenever one increment exceeds pi/2
double sweep_clockwise(const std::function<void(double, double&, double&)>& path,
                       double ta, double tb, double xa, double ya, double xb,
                       double yb, int depth) {
  double d = std::atan2(yb, xb) - std::atan2(ya, xa);
  while (d > M_PI) d -= 2.0 * M_PI;
  while (d < -M_PI) d += 2.0 * M_PI;
  if (std::abs(d) <= M_PI / 2 || depth >= 40) return -d;
  double tm = 0.5 * (ta + tb), xm, ym;
  path(tm, xm, ym);
  return sweep_clockwise(path, ta, tm, xa, ya, xm, ym, depth + 1) +
         sweep_clockwise(path, tm, tb, xm, ym, xb, yb, depth + 1);
}
}  // namespace

RotationResult rotation_number(const std::function<void(double, double&, double&)>& path,
                               double t0, double t1, int samples,
                               double origin_tol) {
  if (!(t1 > t0)) throw std::invalid_argument("rotation_number: empty span");
  if (samples < 2) samples = 2;
  std::vector<double> ts(samples + 1), xs(samples + 1), ys(samples + 1);
  double scale = 0.0;
  for (int i = 0; i <= samples; ++i) {
    ts[i] = t0 + (t1 - t0) * i / samples;
    path(ts[i], xs[i], ys[i]);
    scale = std::max(scale, std::hypot(xs[i], ys[i]));
  }
  double thresh = origin_tol * std::max(scale, 1e-300);
  RotationResult out;
  double sweep = 0.0;
  for (int i = 0; i < samples; ++i) {
    if (std::hypot(xs[i], ys[i]) < thresh || std::hypot(xs[i + 1], ys[i + 1]) < thresh)
      throw std::domain_error("rotation_number: path passes through the origin");
    sweep += sweep_clockwise(path, ts[i], ts[i + 1], xs[i], ys[i], xs[i + 1], ys[i + 1], 0);
    if ((xs[i] > 0.0 && xs[i + 1] <= 0.0) || (xs[i] < 0.0 && xs[i + 1] >= 0.0)) {
      double w = xs[i] / (xs[i] - xs[i + 1]);
      out.crossings.push_back(ts[i] + w * (ts[i + 1] - ts[i]));
    }
  }
  out.winding = sweep / (2.0 * M_PI);
  return out;
}

RotationResult rotation_number(const BouncingTrajectory& traj) {
  if (!traj.contacts.empty())
    throw std::domain_error("rotation_number: contact intervals pin the phase point at the origin");
  RotationResult out;
  double sweep = 0.0;
  for (const auto& arc : traj.arcs) {
    auto path = [&arc](double t, double& x, double& y) {
      x = arc.x(t);
      y = arc.v(t);
    };
    double ta = arc.t_begin(), tb = arc.t_end();
    if (!(tb > ta)) continue;
    int samples = std::max<int>(16, static_cast<int>(arc.steps.size()) * 8);
    double px, py;
    path(ta, px, py);
    for (int i = 1; i <= samples; ++i) {
      double t = ta + (tb - ta) * i / samples;
      double x, y;
      path(t, x, y);
      sweep += sweep_clockwise(path, ta + (tb - ta) * (i - 1) / samples, t, px, py, x, y, 0);
      px = x;
      py = y;
    }
  }
  // each elastic reflection sweeps half a clockwise turn through Pi-
  sweep += M_PI * static_cast<double>(traj.impacts.size());
  out.winding = sweep / (2.0 * M_PI);
  for (const auto& e : traj.impacts) out.crossings.push_back(e.t);
  std::sort(out.crossings.begin(), out.crossings.end());
  return out;
}

Interval rotation_time_bounds(double mu_lo, double mu_hi, int n) {
  if (!(mu_lo > 0.0) || !(mu_hi >= mu_lo))
    throw std::invalid_argument("rotation_time_bounds: need 0 < mu_lo <= mu_hi");
  if (n < 1) throw std::invalid_argument("rotation_time_bounds: n must be >= 1");
  return Interval{M_PI / std::sqrt(mu_hi),
                  M_PI / std::sqrt(mu_lo) + M_PI / std::sqrt(static_cast<double>(n))};
}

double theta_functional(double L, const std::function<double(double)>& x,
                        double R0, double T, double rel_tol) {
  if (L < 0.0) throw std::invalid_argument("theta_functional: L must be >= 0");
  if (L == 0.0) return 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  constexpr int kGrid = 2048;
  for (int i = 0; i <= kGrid; ++i) {
    double v = x(T * i / kGrid);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(R0 + lo > 0.0))
    throw std::invalid_argument("theta_functional: profile reaches -R0");
  double val = integrate([&](double t) {
    double d = R0 + x(t);
    return L / (d * d);
  }, 0.0, T, rel_tol);
  double lower = T * L / ((R0 + hi) * (R0 + hi));
  double upper = T * L / ((R0 + lo) * (R0 + lo));
  double slack = 1e-9 * (std::abs(val) + upper);
  if (val < lower - slack || val > upper + slack)
    throw std::runtime_error("theta_functional: quadrature violates monotone bounds");
  return val;
}

double psi(int j, double T, double t) {
  if (j < 1) throw std::invalid_argument("psi: j must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("psi: T must be > 0");
  double p = T / j;
  double s = std::fmod(t, p);
  if (s < 0.0) s += p;
  return std::sin(M_PI * s / p);
}

double psi_tilde(int j, double T, double t) {
  if (j < 1) throw std::invalid_argument("psi_tilde: j must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("psi_tilde: T must be > 0");
  double s = std::fmod(t, T);
  if (s < 0.0) s += T;
  double p = T / j;
  return s <= p ? std::sin(M_PI * s / p) : 0.0;
}

namespace {

struct SweepOutcome {
  std::vector<double> vals;
  double maxabs = 0.0;
};

// integrals I(tau) = Int_0^T h(t) psi_j(t + tau) dt over the tau grid,
// splitting at the arch corners of psi_j(. + tau)
SweepOutcome tau_sweep(const std::function<double(double)>& h, int j, double T,
                       int tau_grid, int jobs) {
  SweepOutcome out;
  out.vals.assign(tau_grid, 0.0);
  double p = T / j;
  parallel_for(jobs, tau_grid, [&](int i) {
    double tau = T * i / tau_grid;
    // arch corners of psi_j(. + tau): t = m*p - tau
    std::vector<double> brk;
    double t = std::fmod(-tau, p);
    if (t < 0.0) t += p;
    for (; t < T; t += p) brk.push_back(t);
    auto integrand = [&](double tt) { return h(tt) * psi(j, T, tt + tau); };
    out.vals[i] = integrate_with_breakpoints(integrand, 0.0, T, brk, 1e-12);
  });
  for (double v : out.vals) out.maxabs = std::max(out.maxabs, std::abs(v));
  return out;
}

LLVerdict sign_verdict(const SweepOutcome& sw, double T, int tau_grid,
                       const std::string& name, bool want_negative) {
  LLVerdict v;
  v.condition = name;
  v.tau_grid = tau_grid;
  double thresh = 1e-8 * sw.maxabs;
  double min_margin = std::numeric_limits<double>::infinity();
  int worst = 0;
  for (int i = 0; i < tau_grid; ++i) {
    double margin = want_negative ? -sw.vals[i] : sw.vals[i];
    if (margin < min_margin) {
      min_margin = margin;
      worst = i;
    }
  }
  v.min_margin = min_margin;
  v.worst_tau = T * worst / tau_grid;
  if (sw.maxabs == 0.0 || std::abs(min_margin) <= thresh) {
    v.verdict = LLVerdict::V::inconclusive;
    v.detail = "worst integral within the strict-sign margin";
  } else if (min_margin > 0.0) {
    v.verdict = LLVerdict::V::satisfied;
  } else {
    v.verdict = LLVerdict::V::violated;
  }
  return v;
}

LLVerdict missing_data_verdict(const std::string& name, int tau_grid) {
  LLVerdict v;
  v.condition = name;
  v.tau_grid = tau_grid;
  v.verdict = LLVerdict::V::inconclusive;
  v.detail = "no residual data (numeric estimate did not converge)";
  return v;
}

}  // namespace

std::vector<LLVerdict> ll_check(const LLProblem& p, int tau_grid, int jobs) {
  if (tau_grid < 1) throw std::invalid_argument("ll_check: tau_grid must be >= 1");
  if (p.band.N < 1)
    throw std::invalid_argument("ll_check: band N must be >= 1 (use ll_check_n0 for N=0)");
  std::vector<LLVerdict> out;
  if (p.h_plus) {
    auto sw = tau_sweep(p.h_plus, p.band.N + 1, p.band.T, tau_grid, jobs);
    out.push_back(sign_verdict(sw, p.band.T, tau_grid, "LLcond", true));
  } else {
    out.push_back(missing_data_verdict("LLcond", tau_grid));
  }
  if (p.h_minus) {
    auto sw = tau_sweep(p.h_minus, p.band.N, p.band.T, tau_grid, jobs);
    out.push_back(sign_verdict(sw, p.band.T, tau_grid, "LLcond2", false));
  } else {
    out.push_back(missing_data_verdict("LLcond2", tau_grid));
  }
  for (auto& v : out)
    if (p.heuristic) v.detail += (v.detail.empty() ? "" : "; ") + std::string("heuristic residual estimate");
  return out;
}

LLVerdict ll_check_n0(const LLProblem& p, double eps_bar,
                      const CentralForceProblem& prob, int tau_grid) {
  if (!(eps_bar > 0.0)) throw std::invalid_argument("ll_check_n0: eps_bar must be > 0");
  if (!p.h_minus) return missing_data_verdict("LLcond2N0", tau_grid);
  auto sw = tau_sweep(p.h_minus, 1, p.band.T, tau_grid, 1);
  LLVerdict v = sign_verdict(sw, p.band.T, tau_grid, "LLcond2N0", false);
  // growth floor liminf f(t,x)/x >= eps_bar, sampled on rays
  double floor = std::numeric_limits<double>::infinity();
  for (double mult : {1e2, 1e3, 1e4}) {
    double x = mult * prob.R0;
    for (int i = 0; i < 64; ++i) {
      double t = prob.T * i / 64.0;
      floor = std::min(floor, prob.f(t, x + prob.R0) / x);
    }
  }
  if (floor < eps_bar) {
    v.verdict = LLVerdict::V::violated;
    v.detail = "growth floor fails: sampled min f(t,x)/x = " + std::to_string(floor) +
               " < eps_bar = " + std::to_string(eps_bar);
  }
  return v;
}

LLProblem estimate_ll_residuals(const CentralForceProblem& p, int N) {
  p.validate();
  if (N < 0) throw std::invalid_argument("estimate_ll_residuals: N must be >= 0");
  LLProblem ll;
  ll.band = resonance_band(N, p.T);
  ll.heuristic = true;
  double R0 = p.R0;
  ForceFn f = p.f;
  const double rays[3] = {1e2 * R0, 1e3 * R0, 1e4 * R0};
  auto residual_at = [f, R0](double t, double x, double mu) {
    return f(t, x + R0) - mu * x;
  };
  // the ladder settles when the two finest rays agree
  bool settled = true;
  for (int i = 0; i < 64 && settled; ++i) {
    double t = p.T * i / 64.0;
    for (double mu : {ll.band.mu_lo, ll.band.mu_hi}) {
      double r2 = residual_at(t, rays[1], mu);
      double r3 = residual_at(t, rays[2], mu);
      if (std::abs(r3 - r2) > 0.05 * (1.0 + std::abs(r2))) settled = false;
    }
  }
  if (!settled) return ll;  // h± left empty -> inconclusive downstream
  double mu_hi = ll.band.mu_hi, mu_lo = ll.band.mu_lo;
  double ray = rays[2];
  ll.h_plus = [residual_at, ray, mu_hi](double t) { return residual_at(t, ray, mu_hi); };
  ll.h_minus = [residual_at, ray, mu_lo](double t) { return residual_at(t, ray, mu_lo); };
  return ll;
}

ValidationReport validate_bouncing(const BouncingTrajectory& traj,
                                   const RadialField& field,
                                   const ValidationTolerances& tol) {
  ValidationReport rep;
  // case i: ODE residual on arc interiors, x'' from the v interpolant
  for (const auto& arc : traj.arcs) {
    for (const auto& st : arc.steps) {
      double a = std::max(st.t0, arc.t_begin());
      double b = std::min(st.t0 + st.h, arc.t_end());
      if (!(b > a)) continue;
      for (double frac : {0.25, 0.5, 0.75}) {
        double t = a + frac * (b - a);
        double g = field(t, arc.x(t));
        double res = std::abs(arc.accel(t) + g) / (1.0 + std::abs(g));
        rep.max_ode_residual = std::max(rep.max_ode_residual, res);
      }
    }
  }
  rep.pass_i = rep.max_ode_residual <= tol.ode_residual;

  // case ii: exact velocity reversal
  for (const auto& e : traj.impacts)
    rep.max_reflect_defect = std::max(rep.max_reflect_defect, std::abs(e.speed_out + e.speed_in));
  rep.pass_ii = rep.max_reflect_defect <= tol.reflect;

  // case iii: transversal zeros are isolated
  std::vector<double> wall_times;
  for (const auto& e : traj.impacts) wall_times.push_back(e.t);
  for (const auto& c : traj.contacts) {
    wall_times.push_back(c.t0);
    wall_times.push_back(c.t1);
  }
  std::sort(wall_times.begin(), wall_times.end());
  rep.min_isolation = traj.t_end - traj.t_begin;
  for (const auto& e : traj.impacts) {
    double gap = rep.min_isolation;
    for (double w : wall_times)
      if (w != e.t) gap = std::min(gap, std::abs(w - e.t));
    rep.min_isolation = std::min(rep.min_isolation, gap);
  }
  bool interior_positive = true;
  for (const auto& arc : traj.arcs) {
    double a = arc.t_begin(), b = arc.t_end();
    for (int i = 1; i < 64; ++i) {
      double t = a + (b - a) * i / 64.0;
      if (arc.x(t) < -1e3 * tol.isolation) interior_positive = false;
    }
  }
  rep.pass_iii = (traj.impacts.empty() || rep.min_isolation >= tol.isolation) && interior_positive;

  // case iv: the field pins the state on contact intervals
  rep.min_contact_g = std::numeric_limits<double>::infinity();
  for (const auto& c : traj.contacts) {
    for (int i = 0; i <= 128; ++i) {
      double t = c.t0 + (c.t1 - c.t0) * i / 128.0;
      rep.min_contact_g = std::min(rep.min_contact_g, field(t, 0.0));
    }
  }
  rep.pass_iv = traj.contacts.empty() || rep.min_contact_g >= -tol.contact_g;
  return rep;
}

ValidationReport validate_sampled(const SampledTrajectory& traj,
                                  const RadialField& field,
                                  const ValidationTolerances& tol) {
  ValidationReport rep;
  const size_t n = traj.t.size();
  double R0 = field.R0();
  std::vector<char> near_event(n, 0);
  for (size_t i = 0; i < n; ++i)
    if (!traj.event[i].empty()) {
      for (size_t k = (i >= 2 ? i - 2 : 0); k < std::min(n, i + 3); ++k) near_event[k] = 1;
    }

  // case i: nonuniform central difference of rho_prime
  bool in_contact = false;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (traj.event[i] == "contact_start") in_contact = true;
    if (traj.event[i] == "contact_end") in_contact = false;
    if (in_contact || near_event[i]) continue;
    double hm = traj.t[i] - traj.t[i - 1];
    double hp = traj.t[i + 1] - traj.t[i];
    if (!(hm > 0.0) || !(hp > 0.0)) continue;
    double dv = (hm * hm * traj.rho_prime[i + 1] - hp * hp * traj.rho_prime[i - 1] +
                 (hp * hp - hm * hm) * traj.rho_prime[i]) /
                (hm * hp * (hm + hp));
    double g = field(traj.t[i], traj.rho[i] - R0);
    double res = std::abs(dv + g) / (1.0 + std::abs(g));
    rep.max_ode_residual = std::max(rep.max_ode_residual, res);
  }
  rep.pass_i = rep.max_ode_residual <= tol.ode_residual;

  // case ii: paired impact rows carry v- then v+
  std::vector<double> impact_times;
  for (size_t i = 0; i + 1 < n; ++i) {
    if (traj.event[i] == "impact" && traj.event[i + 1] == "impact" &&
        traj.t[i] == traj.t[i + 1]) {
      rep.max_reflect_defect = std::max(
          rep.max_reflect_defect, std::abs(traj.rho_prime[i + 1] + traj.rho_prime[i]));
      impact_times.push_back(traj.t[i]);
      ++i;
    }
  }
  rep.pass_ii = rep.max_reflect_defect <= tol.reflect;

  // case iii
  rep.min_isolation = n >= 2 ? traj.t.back() - traj.t.front() : 0.0;
  for (size_t i = 1; i < impact_times.size(); ++i)
    rep.min_isolation = std::min(rep.min_isolation, impact_times[i] - impact_times[i - 1]);
  bool interior_positive = true;
  for (size_t i = 0; i < n; ++i)
    if (traj.event[i].empty() && traj.rho[i] - R0 < -1e3 * tol.isolation)
      interior_positive = false;
  rep.pass_iii = (impact_times.size() <= 1 || rep.min_isolation >= tol.isolation) &&
                 interior_positive;

  // case iv
  rep.min_contact_g = std::numeric_limits<double>::infinity();
  bool any_contact = false;
  double c_start = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (traj.event[i] == "contact_start") c_start = traj.t[i];
    if (traj.event[i] == "contact_end") {
      any_contact = true;
      for (int k = 0; k <= 128; ++k) {
        double t = c_start + (traj.t[i] - c_start) * k / 128.0;
        rep.min_contact_g = std::min(rep.min_contact_g, field(t, 0.0));
      }
    }
  }
  rep.pass_iv = !any_contact || rep.min_contact_g >= -tol.contact_g;
  return rep;
}

PhaseRegion PhaseRegion::half_plane_plus() { return {Kind::half_plus}; }
PhaseRegion PhaseRegion::half_plane_minus() { return {Kind::half_minus}; }
PhaseRegion PhaseRegion::ball(double s) {
  PhaseRegion r{Kind::ball};
  r.s = s;
  return r;
}
PhaseRegion PhaseRegion::ellipse(int n, double delta, double c) {
  PhaseRegion r{Kind::ellipse};
  r.n = n;
  r.delta = delta;
  r.c = c;
  return r;
}
PhaseRegion PhaseRegion::xi(int n, double delta, double c) {
  PhaseRegion r{Kind::xi};
  r.n = n;
  r.delta = delta;
  r.c = c;
  return r;
}

bool region_membership(const PhaseRegion& region, double x, double y) {
  switch (region.kind) {
    case PhaseRegion::Kind::half_plus:
      return x >= 0.0;
    case PhaseRegion::Kind::half_minus:
      return x <= 0.0;
    case PhaseRegion::Kind::ball:
      return x * x + y * y < region.s * region.s;
    case PhaseRegion::Kind::ellipse:
      return y * y + region.n * x * x - 2.0 * region.delta * x < region.c * region.c;
    case PhaseRegion::Kind::xi: {
      bool in_sigma =
          y * y + region.n * x * x - 2.0 * region.delta * x < region.c * region.c;
      bool in_ball = x * x + y * y < region.c * region.c;
      return (x <= 0.0 && in_sigma) || (x >= 0.0 && in_ball);
    }
  }
  return false;
}

}  // namespace orbitbounce
