#pragma once
#include "orbitbounce/integrator.hpp"
#include "orbitbounce/model.hpp"

namespace orbitbounce {

/// Stiff-spring approximation parameters: spring constant n and the small
/// pull-in offset delta.
struct PenaltyParams {
  int n = 100;
  double delta = 1e-3;

  void validate() const;
};

struct ResonantPenaltyParams {
  PenaltyParams base;
  double kappa = 1.0;   ///< > 1, from kappa_for
  double mu_lo = 0.0;   ///< mu_N
  double mu_hi = 0.0;   ///< mu_{N+1}
};

/// The three-branch approximating nonlinearity
///   g_n(L,t,x) = g(L,t,x)                      for x >= 1/n
///              = n x (g(L,t,x) + delta) - delta for 0 < x < 1/n
///              = n x - delta                    for x <= 0.
/// Branching is done on u = n*x so the one-sided values agree exactly at
/// both joints.
SmoothField make_penalty(const RadialField& g, const PenaltyParams& p);

/// Same wrapping applied to a plain scalar field g(t,x) (no angular part).
SmoothField make_penalty(const std::function<double(double, double)>& g,
                         const PenaltyParams& p);

/// Solves n (sqrt(k)-1)^2 / k = (mu_lo + mu_hi)/2 for k > 1, placing the
/// rescaled band midway between the asymptotes. Throws when n is too small
/// (the supremum of the left side over k is n), naming the least workable n.
double kappa_for(int n, double mu_lo, double mu_hi);

/// Penalty wrapping of the rescaled field
///   g~_n(L,t,x) = -L^2/(x+R0)^3 + kappa_n * f(t, x+R0).
/// Reduces to make_penalty(radial_field(p,L), base) when kappa == 1.
SmoothField make_resonant_penalty(const CentralForceProblem& p, double L,
                                  const ResonantPenaltyParams& rp);

/// Closed-form duration of a negative excursion entered at speed c > 0:
///   (1/sqrt(n)) * (pi - 2 asin(delta / sqrt(n c^2 + delta^2))),
/// always < pi/sqrt(n).
double negative_transit_time(const PenaltyParams& p, double c);

/// Deepest penetration of that excursion: (delta - sqrt(delta^2 + c^2 n))/n,
/// always > -c/sqrt(n).
double penetration_depth_bound(const PenaltyParams& p, double c);

}  // namespace orbitbounce
