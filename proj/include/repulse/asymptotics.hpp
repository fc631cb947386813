#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/integrate.hpp"
#include "repulse/model.hpp"
#include "repulse/vec3.hpp"

namespace repulse {

// Scattering data extracted from a finished run: limiting velocities and
// straight-line offsets per particle, the empirical linear-growth envelope
// of the pairwise distances, and fitted decay exponents for the two energy
// monitors. NaN marks fields that do not apply (n < 2, or a fit that could
// not be performed on this run).
struct AsymptoticSummary {
  std::vector<Vec3> v_star;
  std::vector<double> vstar_error;      // Cauchy estimate |v(T) - v(T_ref)|
  std::vector<Vec3> x_star;
  std::vector<Vec3> log_drift_coeffs;   // coefficient of ln t per coordinate
  std::vector<double> drift_rms_log;    // residual of the a + b ln t model
  std::vector<double> drift_rms_const;  // residual of the constant-only model
  double c1 = std::numeric_limits<double>::quiet_NaN();
  double c2 = std::numeric_limits<double>::quiet_NaN();
  double min_vstar_separation = std::numeric_limits<double>::quiet_NaN();
  double epot_rate = std::numeric_limits<double>::quiet_NaN();
  double erel_rate = std::numeric_limits<double>::quiet_NaN();
  double t_end = 0.0;
  double t_ref = 0.0;
};

struct TimeWindow {
  double t_min = 0.0;
  double t_max = 0.0;
};

struct VStarResult {
  std::vector<Vec3> v_star;
  std::vector<double> error_estimate;
  double t_end = 0.0;
  double t_ref = 0.0;
};

// Limiting velocities, read off at the final sample. The velocities converge
// with a 1/t Cauchy rate, so the value at T is already within O(1/T) of the
// limit; |v(T) - v(t_ref)| with t_ref near tail_fraction * T is reported as
// an honest per-particle error estimate and itself shrinks like 1/T.
inline VStarResult extract_vstar(const Trajectory& traj,
                                 double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw Error("tail_fraction must lie in (0, 1)");
  if (traj.size() < 2) throw InsufficientHorizonError("trajectory too short");
  const double t_end = traj.back().state.t;
  double t_first_pos = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    if (s.state.t > 0.0) {
      t_first_pos = s.state.t;
      break;
    }
  }
  if (!(t_end >= 10.0 * t_first_pos))
    throw InsufficientHorizonError(
        "need at least one decade of samples for limit extraction");
  const std::size_t ref = traj.index_nearest(tail_fraction * t_end);
  if (ref + 1 >= traj.size())
    throw InsufficientHorizonError("no sample available near the tail anchor");

  const ParticleState& last = traj.back().state;
  const ParticleState& mid = traj[ref].state;
  VStarResult out;
  out.t_end = t_end;
  out.t_ref = mid.t;
  out.v_star = last.velocities;
  out.error_estimate.reserve(last.size());
  for (std::size_t i = 0; i < last.size(); ++i)
    out.error_estimate.push_back(norm(last.velocities[i] - mid.velocities[i]));
  return out;
}

struct XStarResult {
  std::vector<Vec3> x_star;
  std::vector<Vec3> log_drift_coeffs;
  std::vector<double> rms_log_model;
  std::vector<double> rms_const_model;
};

// Least-squares fit of x_i(t) - t v_i* against a + b ln t, per particle and
// coordinate, over the given window. Returns the intercepts as x*, the ln t
// coefficients, and the root-mean-square residuals of both this model and
// the constant-only one (the latter for model comparison: the logarithmic
// term must not fit worse).
inline XStarResult extract_xstar(const Trajectory& traj,
                                 std::span<const Vec3> v_star,
                                 const TimeWindow& window) {
  std::vector<const TrajectorySample*> pick;
  for (const auto& s : traj.samples)
    if (s.state.t >= window.t_min && s.state.t <= window.t_max &&
        s.state.t > 0.0)
      pick.push_back(&s);
  if (pick.size() < 8)
    throw InsufficientHorizonError("drift fit needs at least 8 samples, got " +
                                   std::to_string(pick.size()));
  const double span = pick.back()->state.t / pick.front()->state.t;
  if (!(span >= 10.0 * (1.0 - 1e-9)))
    throw InsufficientHorizonError("drift fit window must span a decade");

  const std::size_t n = traj.front().state.size();
  if (v_star.size() != n) throw Error("v_star size mismatch");
  const std::size_t m = pick.size();

  // Shared design statistics for the basis {1, ln t}.
  double su = 0.0, suu = 0.0;
  std::vector<double> u(m);
  for (std::size_t k = 0; k < m; ++k) {
    u[k] = std::log(pick[k]->state.t);
    su += u[k];
    suu += u[k] * u[k];
  }
  const double ubar = su / static_cast<double>(m);
  const double suu_c = suu - su * ubar;
  if (!(suu_c > 0.0)) throw FitError("rank-deficient drift design");

  XStarResult out;
  out.x_star.resize(n);
  out.log_drift_coeffs.resize(n);
  out.rms_log_model.assign(n, 0.0);
  out.rms_const_model.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    double ss_log = 0.0, ss_const = 0.0;
    double a[3], b[3];
    for (int c = 0; c < 3; ++c) {
      double sy = 0.0, suy = 0.0;
      std::vector<double> y(m);
      for (std::size_t k = 0; k < m; ++k) {
        const ParticleState& st = pick[k]->state;
        const Vec3 res = st.positions[i] - st.t * v_star[i];
        y[k] = c == 0 ? res.x : (c == 1 ? res.y : res.z);
        sy += y[k];
        suy += u[k] * y[k];
      }
      const double ybar = sy / static_cast<double>(m);
      b[c] = (suy - su * ybar) / suu_c;
      a[c] = ybar - b[c] * ubar;
      for (std::size_t k = 0; k < m; ++k) {
        const double r_log = y[k] - a[c] - b[c] * u[k];
        const double r_const = y[k] - ybar;
        ss_log += r_log * r_log;
        ss_const += r_const * r_const;
      }
    }
    out.x_star[i] = {a[0], a[1], a[2]};
    out.log_drift_coeffs[i] = {b[0], b[1], b[2]};
    out.rms_log_model[i] = std::sqrt(ss_log / (3.0 * static_cast<double>(m)));
    out.rms_const_model[i] =
        std::sqrt(ss_const / (3.0 * static_cast<double>(m)));
  }
  return out;
}

// Empirical envelope constants for the linear spreading law: over the
// window, c1 = min of (min pairwise distance)/t and c2 = max of (max
// pairwise distance)/t, so c1 t <= |x_i - x_j| <= c2 t holds exactly at
// every windowed sample.
inline std::pair<double, double> fit_growth_constants(const Trajectory& traj,
                                                      const TimeWindow& window) {
  if (traj.front().state.size() < 2)
    throw NotApplicableError("growth constants need n >= 2");
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  std::size_t used = 0;
  for (const auto& s : traj.samples) {
    const double t = s.state.t;
    if (t < window.t_min || t > window.t_max || !(t > 0.0)) continue;
    c1 = std::min(c1, min_pairwise_distance(s.state) / t);
    c2 = std::max(c2, max_pairwise_distance(s.state) / t);
    ++used;
  }
  if (used == 0)
    throw InsufficientHorizonError("no samples in the growth window");
  return {c1, c2};
}

enum class DecayModel {
  kPower,            // value ~ t^p: fits p
  kPowerTimesLogSq,  // value ~ C ln^2(t) / t^2: fits C
};

struct DecayFit {
  double value = 0.0;     // exponent (kPower) or prefactor (kPowerTimesLogSq)
  double residual = 0.0;  // rms in log-log, or max relative deviation
};

// Fits a decay law to a positive series sampled past t = e over at least a
// decade. kPower regresses ln(value) on ln(t); kPowerTimesLogSq projects the
// series onto the single basis function ln^2(t)/t^2 and reports the worst
// relative deviation from the fitted curve.
inline DecayFit fit_decay_rate(std::span<const std::pair<double, double>> series,
                               DecayModel model) {
  if (series.size() < 8)
    throw InsufficientHorizonError("decay fit needs at least 8 samples");
  const double e = std::exp(1.0);
  for (const auto& [t, v] : series) {
    if (!(t > e)) throw Error("decay fit samples must have t > e");
    if (!(v > 0.0))
      throw FitDomainError("decay fit needs positive values, got " +
                           std::to_string(v) + " at t = " + std::to_string(t));
  }
  if (!(series.back().first >= 10.0 * (1.0 - 1e-9) * series.front().first))
    throw InsufficientHorizonError("decay fit window must span a decade");

  DecayFit out;
  if (model == DecayModel::kPower) {
    const double m = static_cast<double>(series.size());
    double su = 0.0, sy = 0.0, suu = 0.0, suy = 0.0;
    for (const auto& [t, v] : series) {
      const double u = std::log(t);
      const double y = std::log(v);
      su += u;
      sy += y;
      suu += u * u;
      suy += u * y;
    }
    const double denom = suu - su * su / m;
    if (!(denom > 0.0)) throw FitError("rank-deficient decay design");
    const double slope = (suy - su * sy / m) / denom;
    const double icept = (sy - slope * su) / m;
    double ss = 0.0;
    for (const auto& [t, v] : series) {
      const double r = std::log(v) - icept - slope * std::log(t);
      ss += r * r;
    }
    out.value = slope;
    out.residual = std::sqrt(ss / m);
  } else {
    double spv = 0.0, spp = 0.0;
    for (const auto& [t, v] : series) {
      const double lt = std::log(t);
      const double phi = lt * lt / (t * t);
      spv += phi * v;
      spp += phi * phi;
    }
    if (!(spp > 0.0)) throw FitError("rank-deficient decay design");
    const double c = spv / spp;
    double worst = 0.0;
    for (const auto& [t, v] : series) {
      const double lt = std::log(t);
      const double fit = c * lt * lt / (t * t);
      worst = std::max(worst, std::fabs(v - fit) / fit);
    }
    out.value = c;
    out.residual = worst;
  }
  return out;
}

namespace detail {

inline std::vector<std::pair<double, double>> positive_series(
    const Trajectory& traj, const TimeWindow& window, bool use_e_rel) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : traj.samples) {
    const double t = s.state.t;
    if (t < window.t_min || t > window.t_max) continue;
    const double v = use_e_rel ? s.energies.e_kin_rel : s.energies.e_pot;
    out.emplace_back(t, v);
  }
  return out;
}

}  // namespace detail

// Assembles the full summary with the default windows: limits read at the
// end with the half-horizon Cauchy anchor, drift and growth fits over the
// last decade (growth never before t = 10), decay fits over [10, T]. Pieces
// that cannot be computed on this run (n = 1, short horizon, zero series)
// come back as NaN rather than failing the whole summary.
inline AsymptoticSummary summarize(const Trajectory& traj) {
  AsymptoticSummary s;
  const std::size_t n = traj.front().state.size();
  const double t_end = traj.back().state.t;
  s.t_end = t_end;

  try {
    VStarResult v = extract_vstar(traj);
    s.v_star = std::move(v.v_star);
    s.vstar_error = std::move(v.error_estimate);
    s.t_ref = v.t_ref;
  } catch (const Error&) {
    return s;  // nothing else is extractable without limits
  }

  if (n >= 2) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        best = std::min(best, norm(s.v_star[i] - s.v_star[j]));
    s.min_vstar_separation = best;
  }

  const TimeWindow last_decade{t_end / 10.0, t_end};
  try {
    XStarResult x = extract_xstar(traj, s.v_star, last_decade);
    s.x_star = std::move(x.x_star);
    s.log_drift_coeffs = std::move(x.log_drift_coeffs);
    s.drift_rms_log = std::move(x.rms_log_model);
    s.drift_rms_const = std::move(x.rms_const_model);
  } catch (const Error&) {
  }

  try {
    const TimeWindow growth{std::max(10.0, t_end / 10.0), t_end};
    auto [c1, c2] = fit_growth_constants(traj, growth);
    s.c1 = c1;
    s.c2 = c2;
  } catch (const Error&) {
  }

  const TimeWindow decay{10.0, t_end};
  try {
    auto series = detail::positive_series(traj, decay, /*use_e_rel=*/false);
    s.epot_rate = fit_decay_rate(series, DecayModel::kPower).value;
  } catch (const Error&) {
  }
  try {
    auto series = detail::positive_series(traj, decay, /*use_e_rel=*/true);
    s.erel_rate = fit_decay_rate(series, DecayModel::kPower).value;
  } catch (const Error&) {
  }
  return s;
}

}  // namespace repulse
