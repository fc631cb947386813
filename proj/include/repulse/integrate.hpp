#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/kahan.hpp"
#include "repulse/model.hpp"
#include "repulse/state.hpp"
#include "repulse/stepper.hpp"

namespace repulse {

struct StepperConfig {
  Method method = Method::kDormandPrince54;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double initial_step = 1e-3;  // also the fixed dt for non-adaptive methods
  double max_step = 10.0;
  double min_step = 1e-12;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw ConfigError("stepper tolerances must be positive");
    if (!(min_step > 0.0) || !(min_step <= initial_step) ||
        !(initial_step <= max_step))
      throw ConfigError("need 0 < min_step <= initial_step <= max_step");
  }
};

// Running integrals that the integral identity needs alongside the ODE
// state, accumulated from t = 1 (or from the start time if the run begins
// later):
//
//   int_e_rel  = integral_1^t E_rel(s) ds
//   int_t_epot = integral_1^t s * E_pot(s) ds
//
// Written with g(s) = s^2 E_rel(s), the first integral is also
// integral_1^t g(s)/s^2 ds; it is stored once and exposed under both names.
struct QuadratureState {
  double t = 1.0;
  KahanAccumulator e_rel_acc;
  KahanAccumulator t_epot_acc;

  double int_e_rel() const { return e_rel_acc.value(); }
  double int_g_over_s2() const { return e_rel_acc.value(); }
  double int_t_epot() const { return t_epot_acc.value(); }
};

// Advances both integrals across one panel [before.t, after.t] with a
// Simpson rule; `midpoint` must be the state at the panel's center (the
// adaptive driver gets it from dense output, so the panel is resolved at
// the same order as the step itself).
inline QuadratureState advance_quadrature(QuadratureState quad,
                                          const ParticleState& before,
                                          const ParticleState& midpoint,
                                          const ParticleState& after) {
  if (before.t < 1.0)
    throw DiagnosticWindowError("quadrature window opens at t = 1, got t = " +
                                std::to_string(before.t));
  if (!(after.t > before.t))
    throw Error("quadrature panel times must increase");
  const double h = after.t - before.t;
  if (std::fabs(midpoint.t - 0.5 * (before.t + after.t)) >
      std::max(1e-6 * h, 1e-12))
    throw Error("quadrature midpoint is not at the panel center");

  const double f0 = relative_kinetic_energy(before);
  const double fm = relative_kinetic_energy(midpoint);
  const double f1 = relative_kinetic_energy(after);
  const double g0 = before.t * potential_energy(before);
  const double gm = midpoint.t * potential_energy(midpoint);
  const double g1 = after.t * potential_energy(after);
  quad.e_rel_acc.add(h / 6.0 * (f0 + 4.0 * fm + f1));
  quad.t_epot_acc.add(h / 6.0 * (g0 + 4.0 * gm + g1));
  quad.t = after.t;
  return quad;
}

struct TrajectorySample {
  ParticleState state;
  EnergyReport energies;
  bool has_quadrature = false;
  QuadratureState quadrature;
};

// Samples at the requested output times, in increasing order.
struct Trajectory {
  std::vector<TrajectorySample> samples;

  std::size_t size() const { return samples.size(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples[i]; }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }

  std::size_t index_nearest(double t) const {
    if (samples.empty()) throw Error("empty trajectory");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = std::fabs(samples[i].state.t - t);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

// Same positions, negated velocities. The equations of motion are invariant
// under (t, v) -> (-t, -v), so integrating a reversed state forward retraces
// the original path; tests lean on this.
inline ParticleState time_reverse(const ParticleState& state) {
  ParticleState out = state;
  for (Vec3& v : out.velocities) v = -v;
  return out;
}

// One step of the requested method. For the embedded pair this takes the
// 5th-order solution and ignores the error estimate.
inline ParticleState step_fixed(const ParticleState& state, double dt,
                                Method method) {
  if (!(dt > 0.0)) throw Error("step size must be positive");
  ParticleState out;
  switch (method) {
    case Method::kRk4Fixed:
      out = rk4_step(state, dt);
      break;
    case Method::kVelocityVerlet:
      out = velocity_verlet_step(state, dt);
      break;
    case Method::kDormandPrince54: {
      Dopri5Core core(state);
      core.attempt(dt, 1.0, 1.0);
      core.accept();
      out = core.current();
      break;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!is_finite(out.positions[i]) || !is_finite(out.velocities[i]))
      throw NumericalBlowupError("non-finite state after step at t = " +
                                 std::to_string(out.t));
  }
  return out;
}

// Fixed-step integration to exactly t_end (final step truncated).
inline ParticleState integrate_fixed(ParticleState state, double t_end,
                                     double dt, Method method) {
  if (!(t_end > state.t)) throw Error("t_end must exceed the state time");
  while (state.t < t_end) {
    const double h = std::min(dt, t_end - state.t);
    const double t_next = (t_end - state.t <= dt) ? t_end : state.t + h;
    state = step_fixed(state, h, method);
    state.t = t_next;
  }
  return state;
}

using StepObserver = std::function<void(const ParticleState&)>;

namespace detail {

// Merges output times, the quadrature opening time, and t_end into the
// sorted list of times the integrator must land on exactly.
inline std::vector<double> build_stops(double t0, double t_end,
                                       std::span<const double> output_times) {
  std::vector<double> stops(output_times.begin(), output_times.end());
  stops.push_back(t_end);
  if (t0 < 1.0 && 1.0 < t_end) stops.push_back(1.0);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  std::erase_if(stops, [&](double s) { return s <= t0; });
  return stops;
}

inline void validate_output_times(const ParticleState& initial, double t_end,
                                  std::span<const double> output_times) {
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : output_times) {
    if (!(t > prev)) throw Error("output times must be strictly increasing");
    if (t < initial.t || t > t_end)
      throw Error("output time " + std::to_string(t) +
                  " outside [t_start, t_end]");
    prev = t;
  }
}

inline TrajectorySample make_sample(const ParticleState& state,
                                    const QuadratureState* quad) {
  TrajectorySample s;
  s.state = state;
  s.energies = compute_energies(state);
  if (quad != nullptr) {
    s.has_quadrature = true;
    s.quadrature = *quad;
  }
  return s;
}

}  // namespace detail

// Integrates from `initial` to t_end, sampling at exactly the requested
// output times. Samples are genuine solution points: the driver shortens
// steps to land on them rather than interpolating, which keeps the sampled
// invariants (energy, momentum, angular momentum) at accepted-step quality.
// Dense output is used only for the quadrature panel midpoints.
//
// The quadrature integrals start at t = 1: a run that begins earlier
// integrates silently up to 1 first, and samples before then carry no
// quadrature block.
inline Trajectory integrate_adaptive(const ParticleState& initial, double t_end,
                                     const StepperConfig& cfg,
                                     std::span<const double> output_times,
                                     const StepObserver& observer = {}) {
  initial.validate();
  cfg.validate();
  if (!(t_end > initial.t)) throw Error("t_end must exceed the initial time");
  detail::validate_output_times(initial, t_end, output_times);

  Trajectory traj;
  traj.samples.reserve(output_times.size());

  const double quad_open = std::max(1.0, initial.t);
  QuadratureState quad;
  quad.t = quad_open;
  bool quad_active = initial.t >= 1.0;

  std::size_t out_idx = 0;
  if (out_idx < output_times.size() && output_times[out_idx] == initial.t) {
    traj.samples.push_back(
        detail::make_sample(initial, quad_active ? &quad : nullptr));
    ++out_idx;
  }

  const std::vector<double> stops =
      detail::build_stops(initial.t, t_end, output_times);

  if (cfg.method != Method::kDormandPrince54) {
    // Fixed-step drivers use dt = initial_step and obtain the Simpson
    // midpoint by a half-step from the panel start (one extra evaluation
    // per step); panel accuracy then matches the method's own order.
    ParticleState state = initial;
    std::size_t stop_idx = 0;
    while (stop_idx < stops.size()) {
      const double target = stops[stop_idx];
      while (state.t < target) {
        const double h = std::min(cfg.initial_step, target - state.t);
        const bool landing = target - state.t <= cfg.initial_step;
        ParticleState mid = step_fixed(state, 0.5 * h, cfg.method);
        ParticleState next = step_fixed(state, h, cfg.method);
        if (landing) next.t = target;
        if (observer) observer(next);
        if (quad_active) quad = advance_quadrature(quad, state, mid, next);
        state = std::move(next);
      }
      if (state.t == quad_open) quad_active = true;
      if (out_idx < output_times.size() && output_times[out_idx] == state.t) {
        traj.samples.push_back(
            detail::make_sample(state, quad_active ? &quad : nullptr));
        ++out_idx;
      }
      ++stop_idx;
    }
    return traj;
  }

  Dopri5Core core(initial);
  double h = std::clamp(cfg.initial_step, cfg.min_step, cfg.max_step);
  std::size_t stop_idx = 0;
  bool last_rejected = false;

  while (stop_idx < stops.size()) {
    const double t = core.current().t;
    const double target = stops[stop_idx];
    const double room = target - t;
    const bool landing = h >= room * (1.0 - 1e-12);
    const double h_try = landing ? room : h;

    const double err = core.attempt(h_try, cfg.rel_tol, cfg.abs_tol);
    if (!std::isfinite(err))
      throw NumericalBlowupError("non-finite error estimate at t = " +
                                 std::to_string(t));

    if (err <= 1.0) {
      core.accept();
      if (landing) core.set_current_time(target);
      const ParticleState& now = core.current();
      if (observer) observer(now);
      if (quad_active) {
        const ParticleState mid = core.dense_at(0.5);
        quad = advance_quadrature(quad, core.previous(), mid, now);
      }
      if (now.t == quad_open) quad_active = true;
      if (landing) {
        if (out_idx < output_times.size() && output_times[out_idx] == target) {
          traj.samples.push_back(
              detail::make_sample(now, quad_active ? &quad : nullptr));
          ++out_idx;
        }
        ++stop_idx;
      }
      // Standard proportional controller. A truncated landing step must not
      // shrink the working step size, so keep the larger of the two.
      double fac = 0.9 * std::pow(err > 0.0 ? err : 1e-10, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      const double h_ctrl = h_try * fac;
      h = std::min(landing ? std::max(h, h_ctrl) : h_ctrl, cfg.max_step);
      last_rejected = false;
    } else {
      const double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
      h = h_try * fac;
      last_rejected = true;
      if (h < cfg.min_step)
        throw StiffnessError("step size underflow at t = " + std::to_string(t));
    }
  }
  return traj;
}

}  // namespace repulse
