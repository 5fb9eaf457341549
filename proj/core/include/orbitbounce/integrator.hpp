#pragma once
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "orbitbounce/model.hpp"
#include "orbitbounce/trajectory.hpp"

namespace orbitbounce {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// Impact times are bracketed to width impact_tol * max(1, |t|).
  double impact_tol = 1e-12;
  /// Contact-mode capture threshold, scaled by max(1, velocity scale of the
  /// trajectory so far). Zero disables capture entirely.
  double v_stick = 1e-8;
  int max_events = 100000;
  double init_step = 0.0;  ///< 0 = automatic

  void validate() const;
};

/// A scalar second-order field: the equation integrated is x'' + g(t,x) = 0,
/// optionally carrying the angular rate theta'(x) of the polar system.
struct SmoothField {
  std::function<double(double t, double x)> g;
  std::function<double(double x)> theta_rate;  ///< may be empty (theta' = 0)
};

inline SmoothField as_smooth_field(const RadialField& f) {
  return SmoothField{[f](double t, double x) { return f(t, x); },
                     [f](double x) { return f.angular_rate(x); }};
}

struct SmoothResult {
  DenseSegment segment;
  bool complete = false;
  double t_reached = 0.0;
  std::string diagnostic;  ///< set on failure (step-size underflow)
};

/// Adaptive Dormand-Prince 5(4) with quartic dense output. No wall, no
/// events: integrates x'' + g = 0 over [t0, t1] from (s0, theta0).
SmoothResult integrate_smooth(const SmoothField& field, PhaseState s0,
                              double theta0, double t0, double t1,
                              const IntegratorOptions& opts);

/// Bouncing integration against the wall r = 0: smooth arcs, elastic
/// reflection at transversal zeros, contact mode while g(L,t,0) >= 0, with a
/// Zeno guard (50 impacts inside 1e3*impact_tol enter contact mode and flag
/// the trajectory).
BouncingTrajectory integrate_bouncing(const RadialField& field, PhaseState s0,
                                      double theta0, double t0, double t1,
                                      const IntegratorOptions& opts);

/// Earliest zero of the segment's x component inside [t_lo, t_hi], bracketed
/// to width impact_tol * max(1,|t|). Throws std::invalid_argument when no
/// sign change is found.
double locate_impact(const DenseSegment& seg, double t_lo, double t_hi,
                     const IntegratorOptions& opts);

/// Elastic reflection at the wall: r clamped to exactly 0, v -> -v (pure
/// sign flip). Caller error when v >= 0 or |r| > tol. The polar overload
/// leaves theta and L untouched.
PhaseState reflect(const PhaseState& s, double tol = 1e-9);
PolarState reflect(const PolarState& s, double R0, double tol = 1e-9);

/// From a wall state at time t0 with g(L,t0,0) >= 0, the particle stays
/// pinned until the field first pushes outward. Returns the release time
/// (== t_max when the field never releases) and the contact record.
ContactInterval contact_advance(const RadialField& field, double t0,
                                double theta0, double t_max,
                                const IntegratorOptions& opts);

/// Earliest time in [t_from, seg.t_end()] where the given component crosses
/// zero with the requested direction (+1 upward, -1 downward, 0 either).
std::optional<double> find_zero_crossing(const DenseSegment& seg, int comp,
                                         double t_from, int direction,
                                         const IntegratorOptions& opts);

}  // namespace orbitbounce
