#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/state.hpp"
#include "repulse/vec3.hpp"

namespace repulse {

// Pairwise repulsive Coulomb dynamics with unit masses and charges:
//
//   dx_i/dt = v_i,   dv_i/dt = sum_{j != i} (x_i - x_j) / |x_i - x_j|^3.
//
// The kernel walks unordered pairs (i < j) and applies the antisymmetric
// contribution to both particles, so each pair costs one square root and
// every accumulator still receives its terms in ascending-index order.
// That keeps runs bit-reproducible.
inline void accelerations(const ParticleState& state, std::vector<Vec3>& out) {
  const std::size_t n = state.size();
  out.assign(n, Vec3{});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 d = state.positions[i] - state.positions[j];
      const double r2 = norm2(d);
      if (r2 == 0.0)
        throw DegenerateConfigurationError("coincident particles " +
                                           std::to_string(i) + " and " +
                                           std::to_string(j));
      const double w = 1.0 / (r2 * std::sqrt(r2));
      const Vec3 f = w * d;
      out[i] += f;
      out[j] -= f;
    }
  }
}

inline std::vector<Vec3> accelerations(const ParticleState& state) {
  std::vector<Vec3> out;
  accelerations(state, out);
  return out;
}

// E_pot = sum over unordered pairs of 1/|x_i - x_j| (equivalently half the
// sum over ordered pairs). Zero for a single particle.
inline double potential_energy(const ParticleState& state) {
  const std::size_t n = state.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r2 = norm2(state.positions[i] - state.positions[j]);
      if (r2 == 0.0)
        throw DegenerateConfigurationError("coincident particles " +
                                           std::to_string(i) + " and " +
                                           std::to_string(j));
      sum += 1.0 / std::sqrt(r2);
    }
  }
  return sum;
}

// E_kin = (1/2) sum |v_i|^2.
inline double kinetic_energy(const ParticleState& state) {
  double sum = 0.0;
  for (const Vec3& v : state.velocities) sum += norm2(v);
  return 0.5 * sum;
}

// Kinetic energy relative to the self-similar profile v_i = x_i / t,
//
//   E_rel = (1/2) sum |v_i - x_i/t|^2.
//
// Vanishes exactly on free streaming from the origin and measures how far
// the flow still is from it. Only defined for t > 0.
inline double relative_kinetic_energy(const ParticleState& state) {
  if (!(state.t > 0.0))
    throw UndefinedAtTimeError("relative kinetic energy needs t > 0, got t = " +
                               std::to_string(state.t));
  const double inv_t = 1.0 / state.t;
  double sum = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i)
    sum += norm2(state.velocities[i] - inv_t * state.positions[i]);
  return 0.5 * sum;
}

// Returns (I, dI/dt) with I = (1/2) sum |x_i|^2 and dI/dt = sum x_i . v_i.
inline std::pair<double, double> moment_of_inertia(const ParticleState& state) {
  double inertia = 0.0;
  double rate = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    inertia += norm2(state.positions[i]);
    rate += dot(state.positions[i], state.velocities[i]);
  }
  return {0.5 * inertia, rate};
}

inline Vec3 total_momentum(const ParticleState& state) {
  Vec3 p{};
  for (const Vec3& v : state.velocities) p += v;
  return p;
}

inline Vec3 total_angular_momentum(const ParticleState& state) {
  Vec3 l{};
  for (std::size_t i = 0; i < state.size(); ++i)
    l += cross(state.positions[i], state.velocities[i]);
  return l;
}

// Assembles every scalar functional at once. e_kin_rel is NaN for t <= 0.
inline EnergyReport compute_energies(const ParticleState& state) {
  EnergyReport report;
  report.e_kin = kinetic_energy(state);
  report.e_pot = potential_energy(state);
  report.e_total = report.e_kin + report.e_pot;
  report.e_kin_rel = state.t > 0.0 ? relative_kinetic_energy(state)
                                   : std::numeric_limits<double>::quiet_NaN();
  const auto [inertia, rate] = moment_of_inertia(state);
  report.inertia = inertia;
  report.inertia_rate = rate;
  return report;
}

// Symmetric n x n distance matrix, row-major, zero diagonal.
inline std::vector<double> pairwise_distances(const ParticleState& state) {
  const std::size_t n = state.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = norm(state.positions[i] - state.positions[j]);
      d[i * n + j] = r;
      d[j * n + i] = r;
    }
  }
  return d;
}

inline double min_pairwise_distance(const ParticleState& state) {
  const std::size_t n = state.size();
  if (n < 2)
    throw NotApplicableError("minimum pairwise distance needs n >= 2");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::min(best, norm(state.positions[i] - state.positions[j]));
  return best;
}

inline double max_pairwise_distance(const ParticleState& state) {
  const std::size_t n = state.size();
  if (n < 2)
    throw NotApplicableError("maximum pairwise distance needs n >= 2");
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::max(best, norm(state.positions[i] - state.positions[j]));
  return best;
}

inline double max_speed(const ParticleState& state) {
  double best = 0.0;
  for (const Vec3& v : state.velocities) best = std::max(best, norm2(v));
  return std::sqrt(best);
}

}  // namespace repulse
