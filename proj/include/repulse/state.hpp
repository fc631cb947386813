#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/vec3.hpp"

namespace repulse {

// Full phase-space snapshot: time plus n positions and n velocities.
// Everything downstream (forces, energies, diagnostics) is a pure function
// of one of these.
struct ParticleState {
  double t = 0.0;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;

  std::size_t size() const { return positions.size(); }

  // Checks the structural invariants: matching non-empty arrays, finite
  // components, no coincident particles. O(n^2); meant for entry points,
  // not inner loops.
  void validate() const {
    if (positions.empty()) throw Error("state holds no particles");
    if (positions.size() != velocities.size())
      throw Error("positions/velocities length mismatch: " +
                  std::to_string(positions.size()) + " vs " +
                  std::to_string(velocities.size()));
    if (!std::isfinite(t)) throw Error("state time is not finite");
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (!is_finite(positions[i]) || !is_finite(velocities[i]))
        throw Error("non-finite component at particle " + std::to_string(i));
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
      for (std::size_t j = i + 1; j < positions.size(); ++j) {
        if (norm2(positions[i] - positions[j]) == 0.0)
          throw DegenerateConfigurationError(
              "particles " + std::to_string(i) + " and " + std::to_string(j) +
              " coincide");
      }
    }
  }
};

// Scalar functionals of one snapshot. e_total is e_kin + e_pot by
// construction; e_kin_rel is only defined for t > 0 and is NaN otherwise
// (query has_e_kin_rel() or go through relative_kinetic_energy(), which
// throws instead).
struct EnergyReport {
  double e_kin = 0.0;
  double e_pot = 0.0;
  double e_total = 0.0;
  double e_kin_rel = 0.0;  // NaN when undefined (t <= 0)
  double inertia = 0.0;
  double inertia_rate = 0.0;

  bool has_e_kin_rel() const { return !std::isnan(e_kin_rel); }
};

}  // namespace repulse
