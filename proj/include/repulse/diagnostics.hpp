#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "repulse/errors.hpp"
#include "repulse/integrate.hpp"
#include "repulse/model.hpp"
#include "repulse/state.hpp"

namespace repulse {

// The dynamics satisfy two exact identities built from F(t) = t^2 (E_rel +
// E_pot) and the moment of inertia I:
//
//   (differential)  dF/dt = t E_pot(t)
//   (integral)      E_rel(t) + E_pot(t) = C/t - (1/t) integral_1^t E_rel ds,
//                   C = E_rel(1) + E_pot(1)
//   (virial)        d^2I/dt^2 = 2 E - E_pot
//
// The residuals below measure how far sampled data is from each identity.
// The integral form is algebraically exact, so its residual is pure
// integration-plus-quadrature error; the other two are evaluated through
// second-order finite differences and carry an O(spacing^2) truncation term
// on top.

// Per-sample diagnostic row. Margin fields are signed: >= 0 means the bound
// holds, and how much room is left; NaN marks a quantity that is not
// applicable at this sample (outside its window, or n < 2).
struct DiagnosticRecord {
  double t = 0.0;
  double residual_a = std::numeric_limits<double>::quiet_NaN();
  double residual_b = std::numeric_limits<double>::quiet_NaN();
  double c_constant = std::numeric_limits<double>::quiet_NaN();
  double t_epot = std::numeric_limits<double>::quiet_NaN();
  double e_rel_scaled = std::numeric_limits<double>::quiet_NaN();
  double velocity_margin = std::numeric_limits<double>::quiet_NaN();
  double distance_margin = std::numeric_limits<double>::quiet_NaN();
  double virial_residual = std::numeric_limits<double>::quiet_NaN();
};

struct TimedReport {
  double t = 0.0;
  EnergyReport report;
};

// Residual of the integral identity at quad.t:
//
//   E_rel(t) + E_pot(t) + (1/t) int_e_rel - c/t.
//
// Exact dynamics give zero for every t >= 1.
inline double integral_identity_residual(const EnergyReport& report,
                                         const QuadratureState& quad,
                                         double c) {
  if (quad.t < 1.0)
    throw DiagnosticWindowError("integral identity needs t >= 1, got t = " +
                                std::to_string(quad.t));
  if (!report.has_e_kin_rel())
    throw Error("report lacks relative kinetic energy");
  return report.e_kin_rel + report.e_pot + quad.int_e_rel() / quad.t -
         c / quad.t;
}

namespace detail {

inline void require_increasing(const std::array<TimedReport, 3>& s) {
  if (!(s[0].t < s[1].t && s[1].t < s[2].t))
    throw Error("diagnostic samples need strictly increasing times");
}

// Three-point first derivative at the middle node of a nonuniform stencil;
// exact for quadratics, O(h^2) for smooth data.
inline double three_point_derivative(double t0, double f0, double t1, double f1,
                                     double t2, double f2) {
  const double h1 = t1 - t0;
  const double h2 = t2 - t1;
  return (-h2 / (h1 * (h1 + h2))) * f0 + ((h2 - h1) / (h1 * h2)) * f1 +
         (h1 / (h2 * (h1 + h2))) * f2;
}

// Three-point second derivative at the middle node; exact for quadratics.
inline double three_point_second_derivative(double t0, double f0, double t1,
                                            double f1, double t2, double f2) {
  const double h1 = t1 - t0;
  const double h2 = t2 - t1;
  return 2.0 * (h2 * f0 - (h1 + h2) * f1 + h1 * f2) / (h1 * h2 * (h1 + h2));
}

}  // namespace detail

// Finite-difference residual of the differential identity at the middle of
// three consecutive samples: d/dt [t^2 (E_rel + E_pot)] - t E_pot. The
// samples must have t > 0 so E_rel is defined.
inline double differential_identity_residual(
    const std::array<TimedReport, 3>& samples) {
  detail::require_increasing(samples);
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const TimedReport& s = samples[i];
    if (!s.report.has_e_kin_rel())
      throw Error("differential identity needs E_rel at every sample");
    f[i] = s.t * s.t * (s.report.e_kin_rel + s.report.e_pot);
  }
  const double dfdt = detail::three_point_derivative(
      samples[0].t, f[0], samples[1].t, f[1], samples[2].t, f[2]);
  return dfdt - samples[1].t * samples[1].report.e_pot;
}

// Finite-difference residual of the virial identity at the middle sample:
// second difference of I minus (2 E_total - E_pot).
inline double virial_residual(const std::array<TimedReport, 3>& samples) {
  detail::require_increasing(samples);
  const double ddI = detail::three_point_second_derivative(
      samples[0].t, samples[0].report.inertia, samples[1].t,
      samples[1].report.inertia, samples[2].t, samples[2].report.inertia);
  const EnergyReport& mid = samples[1].report;
  return ddI - (2.0 * mid.e_total - mid.e_pot);
}

struct BoundMonitors {
  double velocity_margin = 0.0;   // sqrt(2 E0) - max |v_i|
  double distance_margin = 0.0;   // min |x_i - x_j| - 1/sqrt(2 E0); NaN for n < 2
  double t_epot = 0.0;            // t * E_pot, bounded by the constant C for t >= 1
  double e_rel_scaled = 0.0;      // E_rel * t^2 / ln^2 t; NaN below t = e
};

// Signed margins for the a-priori bounds forced by energy conservation,
// plus the two scaled decay monitors. e0 is the conserved total energy at
// the start of the run. The ln^2(t)/t^2 monitor only starts at t = e, where
// ln t reaches 1; earlier samples report NaN for it.
inline BoundMonitors bound_monitors(const ParticleState& state,
                                    const EnergyReport& report, double e0) {
  BoundMonitors m;
  const double vbound = std::sqrt(2.0 * e0);
  m.velocity_margin = vbound - max_speed(state);
  m.distance_margin =
      state.size() >= 2
          ? min_pairwise_distance(state) - 1.0 / vbound
          : std::numeric_limits<double>::quiet_NaN();
  m.t_epot = state.t * report.e_pot;
  if (state.t >= std::exp(1.0) && report.has_e_kin_rel()) {
    const double lt = std::log(state.t);
    m.e_rel_scaled = report.e_kin_rel * state.t * state.t / (lt * lt);
  } else {
    m.e_rel_scaled = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

// Tail increment int_e_rel(T) - int_e_rel(T/2), a Cauchy-style probe of the
// convergence of integral_1^inf E_rel. Must shrink as the horizon grows.
inline double integral_convergence_check(const QuadratureState& at_half,
                                         const QuadratureState& at_full) {
  if (!(at_full.t >= 4.0))
    throw Error("convergence check needs a horizon T >= 4");
  if (!(at_half.t < at_full.t))
    throw Error("quadrature samples must be ordered in time");
  return at_full.int_e_rel() - at_half.int_e_rel();
}

}  // namespace repulse
