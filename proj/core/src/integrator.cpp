#include "orbitbounce/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace orbitbounce {

void IntegratorOptions::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw std::invalid_argument("IntegratorOptions: tolerances must be > 0");
  if (!(max_step > 0.0)) throw std::invalid_argument("IntegratorOptions: max_step must be > 0");
  if (!(impact_tol > 0.0)) throw std::invalid_argument("IntegratorOptions: impact_tol must be > 0");
  if (v_stick < 0.0) throw std::invalid_argument("IntegratorOptions: v_stick must be >= 0");
  if (max_events < 1) throw std::invalid_argument("IntegratorOptions: max_events must be >= 1");
}

namespace {

using Y = std::array<double, 3>;  // (x, v, theta)

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

class Dopri5 {
 public:
  Dopri5(const SmoothField& f, const IntegratorOptions& o) : f_(f), opts_(o) {}

  void reset(double t, const Y& y) {
    t_ = t;
    y_ = y;
    have_k1_ = false;
    h_ = 0.0;
  }

  double t() const { return t_; }
  const Y& y() const { return y_; }

  /// One accepted step toward t_target (never past it). Returns false on
  /// step-size underflow; the dense step for the accepted interval is
  /// written to `out`.
  bool step(double t_target, DenseStep& out) {
    if (!have_k1_) {
      k1_ = rhs(t_, y_);
      have_k1_ = true;
    }
    if (h_ <= 0.0) h_ = initial_step(t_target);
    bool rejected = false;
    for (int attempt = 0; attempt < 500; ++attempt) {
      double h = std::min({h_, opts_.max_step, t_target - t_});
      double hmin = 1e-14 * std::max(1.0, std::abs(t_));
      if (h < hmin) return false;

      Y k2, k3, k4, k5, k6, k7, y1;
      bool finite = stages(h, k2, k3, k4, k5, k6, k7, y1);
      double err = finite ? error_norm(h, k3, k4, k5, k6, k7, y1) : 2.0;

      if (err <= 1.0) {
        build_dense(h, k3, k4, k5, k6, k7, y1, out);
        t_ += h;
        y_ = y1;
        k1_ = k7;  // FSAL
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::min(rejected ? 1.0 : 10.0, std::max(0.2, fac));
        h_ = h * fac;
        return true;
      }
      rejected = true;
      double fac = 0.9 * std::pow(err, -0.2);
      h_ = h * std::max(0.2, fac);
    }
    return false;
  }

 private:
  Y rhs(double t, const Y& y) const {
    Y d;
    d[0] = y[1];
    d[1] = -f_.g(t, y[0]);
    d[2] = f_.theta_rate ? f_.theta_rate(y[0]) : 0.0;
    return d;
  }

  static bool is_finite(const Y& y) {
    return std::isfinite(y[0]) && std::isfinite(y[1]) && std::isfinite(y[2]);
  }

  bool stages(double h, Y& k2, Y& k3, Y& k4, Y& k5, Y& k6, Y& k7, Y& y1) {
    Y w;
    for (int i = 0; i < 3; ++i) w[i] = y_[i] + h * a21 * k1_[i];
    k2 = rhs(t_ + c2 * h, w);
    for (int i = 0; i < 3; ++i) w[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2[i]);
    k3 = rhs(t_ + c3 * h, w);
    for (int i = 0; i < 3; ++i)
      w[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = rhs(t_ + c4 * h, w);
    for (int i = 0; i < 3; ++i)
      w[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = rhs(t_ + c5 * h, w);
    for (int i = 0; i < 3; ++i)
      w[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                          a65 * k5[i]);
    k6 = rhs(t_ + h, w);
    for (int i = 0; i < 3; ++i)
      y1[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                           a76 * k6[i]);
    k7 = rhs(t_ + h, y1);
    return is_finite(k2) && is_finite(k3) && is_finite(k4) && is_finite(k5) &&
           is_finite(k6) && is_finite(k7) && is_finite(y1);
  }

  double error_norm(double h, const Y& k3, const Y& k4, const Y& k5, const Y& k6,
                    const Y& k7, const Y& y1) const {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      double e = h * (e1 * k1_[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                      e6 * k6[i] + e7 * k7[i]);
      double sc = opts_.abs_tol +
                  opts_.rel_tol * std::max(std::abs(y_[i]), std::abs(y1[i]));
      s += (e / sc) * (e / sc);
    }
    double n = std::sqrt(s / 3.0);
    return std::isfinite(n) ? n : 2.0;
  }

  void build_dense(double h, const Y& k3, const Y& k4, const Y& k5, const Y& k6,
                   const Y& k7, const Y& y1, DenseStep& out) const {
    out.t0 = t_;
    out.h = h;
    for (int i = 0; i < 3; ++i) {
      double dy = y1[i] - y_[i];
      double bspl = h * k1_[i] - dy;
      out.rc[i][0] = y_[i];
      out.rc[i][1] = dy;
      out.rc[i][2] = bspl;
      out.rc[i][3] = dy - h * k7[i] - bspl;
      out.rc[i][4] = h * (d1 * k1_[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                          d6 * k6[i] + d7 * k7[i]);
    }
  }

  double initial_step(double t_target) const {
    double span = t_target - t_;
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < 3; ++i) {
      double sc = opts_.abs_tol + opts_.rel_tol * std::abs(y_[i]);
      d0 += (y_[i] / sc) * (y_[i] / sc);
      d1 += (k1_[i] / sc) * (k1_[i] / sc);
    }
    d0 = std::sqrt(d0 / 3.0);
    d1 = std::sqrt(d1 / 3.0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, 0.1 * span, opts_.max_step});
    return std::max(h0, 1e-12 * std::max(1.0, std::abs(t_)));
  }

  const SmoothField& f_;
  const IntegratorOptions& opts_;
  double t_ = 0.0, h_ = 0.0;
  Y y_{};
  Y k1_{};
  bool have_k1_ = false;
};

/// Bracketed secant/bisection hybrid on fn over [a,b] (fn(a), fn(b) of
/// opposite sign); shrinks the bracket to `tol` and returns the endpoint
/// with the smaller |fn|.
template <typename Fn>
double refine_root(Fn&& fn, double a, double b, double fa, double fb, double tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  bool sa = fa > 0.0;
  for (int it = 0; it < 240 && (b - a) > tol; ++it) {
    double m;
    if (it % 2 == 0 && fb != fa) {
      m = a - fa * (b - a) / (fb - fa);
      double guard = 0.01 * (b - a);
      if (!(m > a + guard && m < b - guard)) m = 0.5 * (a + b);
    } else {
      m = 0.5 * (a + b);
    }
    double fm = fn(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == sa) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return std::abs(fa) <= std::abs(fb) ? a : b;
}

struct WallEvent {
  double t = 0.0;
  double v = 0.0;      // velocity at the event time
  enum Kind { crossing, graze, hug } kind = crossing;
};

/// Scans one dense step on (t_a, t_b] for the earliest wall event of the x
/// component: a transversal sign change, or a grazing local minimum with
/// |x| <= abs_tol. Returns nullopt when the arc stays clear of the wall.
std::optional<WallEvent> scan_wall_event(const DenseStep& st, double t_a, double t_b,
                                         const IntegratorOptions& opts) {
  constexpr int K = 8;
  double ts[K + 1], xs[K + 1], vs[K + 1];
  for (int j = 0; j <= K; ++j) {
    ts[j] = t_a + (t_b - t_a) * j / K;
    xs[j] = st.eval(0, ts[j]);
    vs[j] = st.eval(1, ts[j]);
  }
  auto xat = [&](double t) { return st.eval(0, t); };
  double ttol = opts.impact_tol * std::max(1.0, std::abs(t_b));

  std::optional<WallEvent> best;
  auto consider = [&](const WallEvent& e) {
    if (!best || e.t < best->t) best = e;
  };

  // transversal crossings (positive to non-positive)
  for (int j = 0; j < K; ++j) {
    if (xs[j] > 0.0 && xs[j + 1] <= 0.0) {
      double r = refine_root(xat, ts[j], ts[j + 1], xs[j], xs[j + 1], ttol);
      consider({r, st.eval(1, r), WallEvent::crossing});
      break;
    }
    if (j == 0 && xs[0] == 0.0 && xs[1] < 0.0) {
      // arc start on the wall diving straight down: look for a positive lobe
      double p = ts[1];
      double xp = xs[1];
      for (int h = 0; h < 60 && !(xp > 0.0); ++h) {
        p = ts[0] + 0.5 * (p - ts[0]);
        xp = xat(p);
      }
      if (xp > 0.0) {
        double r = refine_root(xat, p, ts[1], xp, xs[1], ttol);
        consider({r, st.eval(1, r), WallEvent::crossing});
      } else {
        consider({ts[1], vs[1], WallEvent::hug});
      }
      break;
    }
  }

  // grazing minima: v changes sign downward-to-upward with x near the wall
  for (int j = 0; j < K; ++j) {
    if (vs[j] < 0.0 && vs[j + 1] >= 0.0) {
      auto vat = [&](double t) { return st.eval(1, t); };
      double tm = refine_root(vat, ts[j], ts[j + 1], vs[j], vs[j + 1], ttol);
      double xm = xat(tm);
      if (xm <= opts.abs_tol) {
        if (xm < -opts.abs_tol && xs[j] > 0.0) {
          // dipped through the wall between samples: treat as a crossing
          double r = refine_root(xat, ts[j], tm, xs[j], xm, ttol);
          consider({r, st.eval(1, r), WallEvent::crossing});
        } else {
          consider({tm, st.eval(1, tm), WallEvent::graze});
        }
      }
    }
  }
  if (best && best->t <= t_a) return std::nullopt;
  return best;
}

}  // namespace

SmoothResult integrate_smooth(const SmoothField& field, PhaseState s0,
                              double theta0, double t0, double t1,
                              const IntegratorOptions& opts) {
  opts.validate();
  if (!(t1 >= t0)) throw std::invalid_argument("integrate_smooth: t1 must be >= t0");
  SmoothResult res;
  res.segment.t_end_ = t0;
  res.t_reached = t0;
  if (t1 == t0) {
    res.complete = true;
    return res;
  }
  Dopri5 stepper(field, opts);
  stepper.reset(t0, {s0.r, s0.v, theta0});
  DenseStep st;
  while (stepper.t() < t1) {
    if (!stepper.step(t1, st)) {
      res.complete = false;
      res.t_reached = stepper.t();
      res.segment.t_end_ = stepper.t();
      res.diagnostic = "step-size underflow at t = " + std::to_string(stepper.t());
      return res;
    }
    res.segment.steps.push_back(st);
  }
  res.complete = true;
  res.t_reached = stepper.t();
  res.segment.t_end_ = stepper.t();
  return res;
}

double locate_impact(const DenseSegment& seg, double t_lo, double t_hi,
                     const IntegratorOptions& opts) {
  if (seg.steps.empty()) throw std::invalid_argument("locate_impact: empty segment");
  t_lo = std::max(t_lo, seg.t_begin());
  t_hi = std::min(t_hi, seg.t_end());
  constexpr int K = 8;
  for (const auto& st : seg.steps) {
    double a = std::max(st.t0, t_lo);
    double b = std::min(st.t0 + st.h, t_hi);
    if (!(b > a)) continue;
    double prev_t = a, prev_x = seg.x(a);
    for (int j = 1; j <= K; ++j) {
      double t = a + (b - a) * j / K;
      double x = seg.x(t);
      if ((prev_x > 0.0 && x <= 0.0) || (prev_x < 0.0 && x >= 0.0)) {
        auto xat = [&](double u) { return seg.x(u); };
        double ttol = opts.impact_tol * std::max(1.0, std::abs(t));
        return refine_root(xat, prev_t, t, prev_x, x, ttol);
      }
      prev_t = t;
      prev_x = x;
    }
  }
  throw std::invalid_argument("locate_impact: no sign change in segment");
}

std::optional<double> find_zero_crossing(const DenseSegment& seg, int comp,
                                         double t_from, int direction,
                                         const IntegratorOptions& opts) {
  constexpr int K = 8;
  for (const auto& st : seg.steps) {
    double b = std::min(st.t0 + st.h, seg.t_end());
    double a = std::max(st.t0, t_from);
    if (!(b > a)) continue;
    double prev_t = a, prev = seg.eval(comp, a);
    for (int j = 1; j <= K; ++j) {
      double t = a + (b - a) * j / K;
      double val = seg.eval(comp, t);
      bool down = prev > 0.0 && val <= 0.0;
      bool up = prev < 0.0 && val >= 0.0;
      if ((direction <= 0 && down) || (direction >= 0 && up)) {
        auto at = [&](double u) { return seg.eval(comp, u); };
        double ttol = opts.impact_tol * std::max(1.0, std::abs(t));
        return refine_root(at, prev_t, t, prev, val, ttol);
      }
      prev_t = t;
      prev = val;
    }
  }
  return std::nullopt;
}

PhaseState reflect(const PhaseState& s, double tol) {
  if (std::abs(s.r) > tol)
    throw std::invalid_argument("reflect: state is not on the wall");
  if (!(s.v < 0.0)) throw std::invalid_argument("reflect: requires incoming velocity v < 0");
  return PhaseState{0.0, -s.v};
}

PolarState reflect(const PolarState& s, double R0, double tol) {
  if (std::abs(s.rho - R0) > tol)
    throw std::invalid_argument("reflect: polar state is not on the wall");
  if (!(s.v < 0.0)) throw std::invalid_argument("reflect: requires incoming velocity v < 0");
  // the bounce leaves theta and L untouched
  PolarState out = s;
  out.rho = R0;
  out.v = -s.v;
  return out;
}

ContactInterval contact_advance(const RadialField& field, double t0,
                                double theta0, double t_max,
                                const IntegratorOptions& opts) {
  opts.validate();
  double g0 = field(t0, 0.0);
  if (g0 < -opts.abs_tol)
    throw std::invalid_argument("contact_advance: g(L,t0,0) < 0, field does not pin the state");
  ContactInterval ci;
  ci.t0 = t0;
  ci.theta0 = theta0;
  ci.theta_rate = field.angular_rate(0.0);

  double dt = field.T() / 256.0;
  if (std::isfinite(opts.max_step)) dt = std::min(dt, opts.max_step);
  dt = std::min(dt, std::max(t_max - t0, 1e-300));

  double prev_t = t0;
  double prev_g = g0;
  double t = t0;
  while (t < t_max) {
    t = std::min(t + dt, t_max);
    double g = field(t, 0.0);
    if (g < -opts.abs_tol) {
      // release: refine the first crossing of -abs_tol/2
      double thresh = -0.5 * opts.abs_tol;
      auto fn = [&](double u) { return field(u, 0.0) - thresh; };
      double fa = prev_g - thresh;
      double fb = g - thresh;
      double ttol = opts.impact_tol * std::max(1.0, std::abs(t));
      ci.t1 = fa <= 0.0 ? prev_t : refine_root(fn, prev_t, t, fa, fb, ttol);
      return ci;
    }
    prev_t = t;
    prev_g = g;
  }
  ci.t1 = t_max;
  return ci;
}

BouncingTrajectory integrate_bouncing(const RadialField& field, PhaseState s0,
                                      double theta0, double t0, double t1,
                                      const IntegratorOptions& opts) {
  opts.validate();
  if (!(t1 >= t0)) throw std::invalid_argument("integrate_bouncing: t1 must be >= t0");
  if (s0.r < 0.0) throw std::invalid_argument("integrate_bouncing: initial r must be >= 0");
  if (s0.r == 0.0 && s0.v < 0.0)
    throw std::invalid_argument("integrate_bouncing: initial wall state must have v >= 0");

  BouncingTrajectory traj;
  traj.t_begin = t0;
  traj.t_end = t1;
  traj.R0 = field.R0();
  traj.L = field.L();
  if (t1 == t0) return traj;

  SmoothField sf = as_smooth_field(field);
  Dopri5 stepper(sf, opts);

  double t = t0;
  PhaseState s = s0;
  double th = theta0;
  double vscale = std::max(1.0, std::abs(s0.v));
  auto stick = [&]() { return opts.v_stick * vscale; };
  int events = 0;
  std::deque<double> recent_impacts;

  bool in_contact = false;
  if (s.r == 0.0 && s.v <= stick() && field(t, 0.0) >= 0.0) in_contact = true;

  while (t < t1) {
    if (events >= opts.max_events) {
      traj.status = TrajectoryStatus::event_budget_exhausted;
      traj.diagnostic = "event budget exhausted at t = " + std::to_string(t) +
                        " (possible chattering)";
      traj.t_end = t;
      return traj;
    }
    if (in_contact) {
      ContactInterval ci = contact_advance(field, t, th, t1, opts);
      traj.contacts.push_back(ci);
      ++events;
      th = ci.theta0 + ci.theta_rate * (ci.t1 - ci.t0);
      t = ci.t1;
      s = PhaseState{0.0, 0.0};
      in_contact = false;
      continue;
    }

    // smooth arc
    DenseSegment arc;
    stepper.reset(t, {s.r, s.v, th});
    bool arc_done = false;
    while (!arc_done) {
      DenseStep st;
      double t_before = stepper.t();
      if (!stepper.step(t1, st)) {
        arc.t_end_ = stepper.t();
        if (!arc.steps.empty()) traj.arcs.push_back(std::move(arc));
        traj.status = TrajectoryStatus::integration_failure;
        traj.diagnostic = "step-size underflow at t = " + std::to_string(stepper.t());
        traj.t_end = stepper.t();
        return traj;
      }
      double t_after = stepper.t();
      auto ev = scan_wall_event(st, t_before, t_after, opts);
      if (ev && ev->kind == WallEvent::graze && field(ev->t, 0.0) < 0.0) {
        ev.reset();  // touched the wall but the field pushes outward: no event
      }
      if (!ev) {
        arc.steps.push_back(st);
        vscale = std::max(vscale, std::abs(stepper.y()[1]));
        if (t_after >= t1) {
          arc.t_end_ = t_after;
          traj.arcs.push_back(std::move(arc));
          t = t_after;
          arc_done = true;
        }
        continue;
      }

      // event: truncate the arc at the event time
      arc.steps.push_back(st);
      arc.t_end_ = ev->t;
      double th_ev = arc.theta(ev->t);
      traj.arcs.push_back(std::move(arc));
      t = ev->t;
      th = th_ev;
      ++events;

      double v_in = ev->v;
      bool pinned = field(t, 0.0) >= 0.0;
      if (ev->kind == WallEvent::hug || ev->kind == WallEvent::graze ||
          std::abs(v_in) <= stick()) {
        if (pinned) {
          s = PhaseState{0.0, 0.0};
          in_contact = true;
        } else if (v_in < 0.0) {
          s = PhaseState{0.0, -v_in};
        } else {
          s = PhaseState{0.0, 0.0};
        }
        if (ev->kind == WallEvent::crossing && !pinned && v_in < 0.0) {
          traj.impacts.push_back({t, v_in, -v_in});
        }
      } else {
        // transversal impact: v flips sign exactly
        if (v_in > 0.0) v_in = -v_in;  // interpolation jitter on steep dips
        traj.impacts.push_back({t, v_in, -v_in});
        s = PhaseState{0.0, -v_in};
        recent_impacts.push_back(t);
        if (recent_impacts.size() > 50) recent_impacts.pop_front();
        double ttol = opts.impact_tol * std::max(1.0, std::abs(t));
        if (recent_impacts.size() == 50 && t - recent_impacts.front() < 1e3 * ttol) {
          traj.zeno_flagged = true;
          traj.diagnostic = "Zeno guard: 50 impacts within " +
                            std::to_string(t - recent_impacts.front()) +
                            "; entering contact mode at t = " + std::to_string(t);
          recent_impacts.clear();
          if (field(t, 0.0) >= 0.0) {
            s = PhaseState{0.0, 0.0};
            in_contact = true;
          } else {
            s = PhaseState{0.0, 0.0};
          }
        }
      }
      vscale = std::max(vscale, std::abs(v_in));
      arc_done = true;
    }
  }
  traj.t_end = t1;
  return traj;
}

}  // namespace orbitbounce
