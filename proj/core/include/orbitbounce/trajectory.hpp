#pragma once
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "orbitbounce/model.hpp"

namespace orbitbounce {

/// One accepted integrator step with the standard quartic dense-output
/// polynomial per component (x, v, theta). Evaluation uses
///   u(s) = c1 + s*(c2 + (1-s)*(c3 + s*(c4 + (1-s)*c5))),  s = (t-t0)/h.
struct DenseStep {
  double t0 = 0.0, h = 0.0;
  std::array<std::array<double, 5>, 3> rc{};  // per component

  double eval(int comp, double t) const {
    double s = (t - t0) / h;
    const auto& c = rc[comp];
    return c[0] + s * (c[1] + (1.0 - s) * (c[2] + s * (c[3] + (1.0 - s) * c[4])));
  }
  /// d/dt of the dense polynomial.
  double deriv(int comp, double t) const {
    double s = (t - t0) / h;
    const auto& c = rc[comp];
    double d = c[1] + (1.0 - 2.0 * s) * c[2] + s * (2.0 - 3.0 * s) * c[3] +
               2.0 * s * (1.0 - s) * (1.0 - 2.0 * s) * c[4];
    return d / h;
  }
};

/// A smooth piece of trajectory: consecutive dense steps tiling
/// [t_begin, t_end]. The final step may extend past t_end when the arc was
/// truncated at an event; queries are only valid inside the arc.
class DenseSegment {
 public:
  std::vector<DenseStep> steps;
  double t_end_ = 0.0;

  double t_begin() const { return steps.empty() ? 0.0 : steps.front().t0; }
  double t_end() const { return t_end_; }

  double x(double t) const { return eval(0, t); }
  double v(double t) const { return eval(1, t); }
  double theta(double t) const { return eval(2, t); }
  /// x'' obtained as d/dt of the v interpolant.
  double accel(double t) const { return locate(t).deriv(1, t); }
  double theta_rate(double t) const { return locate(t).deriv(2, t); }

  double eval(int comp, double t) const { return locate(t).eval(comp, t); }
  const DenseStep& locate(double t) const;

 private:
};

struct BounceEvent {
  double t = 0.0;
  double speed_in = 0.0;   ///< v just before the bounce (< 0)
  double speed_out = 0.0;  ///< exactly -speed_in
};

struct ContactInterval {
  double t0 = 0.0, t1 = 0.0;
  double theta0 = 0.0;      ///< theta at entry
  double theta_rate = 0.0;  ///< L/R0^2, constant while pinned at the wall
};

enum class TrajectoryStatus {
  ok,
  event_budget_exhausted,
  integration_failure,
};

/// Piecewise trajectory of the bouncing problem: smooth arcs, elastic
/// impacts, and wall-contact intervals, per the four defining cases of a
/// bouncing solution.
class BouncingTrajectory {
 public:
  double t_begin = 0.0, t_end = 0.0;
  double R0 = 0.0, L = 0.0;
  std::vector<DenseSegment> arcs;
  std::vector<BounceEvent> impacts;
  std::vector<ContactInterval> contacts;
  TrajectoryStatus status = TrajectoryStatus::ok;
  bool zeno_flagged = false;
  std::string diagnostic;

  /// Wall-shifted radius at time t (0 inside contact intervals).
  double r(double t) const;
  double rdot(double t) const;
  double theta(double t) const;
  PolarState state(double t) const;

  bool in_contact(double t) const;

  /// Writes the CSV interface format: header t,rho,rho_prime,theta,event,
  /// rows at the integrator's step points, impacts as two rows (incoming
  /// then outgoing velocity), 17 significant digits.
  void write_csv(std::ostream& os) const;
};

/// Sampled trajectory parsed back from the CSV interface format.
struct SampledTrajectory {
  std::vector<double> t, rho, rho_prime, theta;
  std::vector<std::string> event;  // "", "impact", "contact_start", "contact_end"
};

SampledTrajectory read_trajectory_csv(std::istream& is);

}  // namespace orbitbounce
