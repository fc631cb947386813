#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/model.hpp"
#include "repulse/state.hpp"

namespace repulse {

enum class ScenarioKind {
  kTwoBodyHeadOn,
  kCollinear3,
  kRandomCloud,
  kRegularPolygon,
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kRandomCloud;
  std::size_t n = 5;
  std::uint64_t seed = 421761;
  double position_radius = 2.0;
  double speed_radius = 0.5;
  double min_initial_separation = 0.5;
  double head_on_separation = 1.0;

  void validate() const {
    if (n < 1) throw ConfigError("scenario needs n >= 1");
    if (!(position_radius > 0.0) || !(speed_radius > 0.0))
      throw ConfigError("scenario radii must be positive");
    if (!(min_initial_separation > 0.0))
      throw ConfigError("min_initial_separation must be positive");
    if (!(head_on_separation > 0.0))
      throw ConfigError("head_on_separation must be positive");
  }
};

namespace detail {

// Uniform double in [0, 1) built from the top 53 bits of a mt19937_64 draw.
// The engine's output sequence is fixed by the C++ standard and the bit
// manipulation avoids std::uniform_real_distribution, whose output is
// implementation-defined; together that makes seeded scenarios portable
// across standard libraries.
inline double canonical_u53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform point in the closed ball of the given radius, by rejection from
// the enclosing cube. Draw discipline: x, y, z per candidate, candidates
// consumed in order until one lands inside.
inline Vec3 ball_point(std::mt19937_64& rng, double radius) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Vec3 p{radius * (2.0 * canonical_u53(rng) - 1.0),
                 radius * (2.0 * canonical_u53(rng) - 1.0),
                 radius * (2.0 * canonical_u53(rng) - 1.0)};
    if (norm2(p) <= radius * radius) return p;
  }
  throw InfeasibleSpecError("ball rejection sampling failed");  // unreachable
}

}  // namespace detail

// Builds the initial state at t = 0.
//
// The random cloud uses one mt19937_64 stream per scenario, positions drawn
// before velocities. Each position candidate is tested against the particles
// placed so far and redrawn while any separation is below
// min_initial_separation; more than 10^4 candidates in total is treated as
// an infeasible request.
inline ParticleState build(const ScenarioSpec& spec) {
  spec.validate();
  ParticleState state;
  state.t = 0.0;

  switch (spec.kind) {
    case ScenarioKind::kTwoBodyHeadOn: {
      const double half = 0.5 * spec.head_on_separation;
      state.positions = {{-half, 0.0, 0.0}, {half, 0.0, 0.0}};
      state.velocities = {{}, {}};
      break;
    }
    case ScenarioKind::kCollinear3: {
      state.positions = {{-1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
      state.velocities = {{}, {}, {}};
      break;
    }
    case ScenarioKind::kRandomCloud: {
      std::mt19937_64 rng(spec.seed);
      long attempts = 0;
      while (state.positions.size() < spec.n) {
        if (++attempts > 10000)
          throw InfeasibleSpecError(
              "could not place " + std::to_string(spec.n) +
              " particles with separation >= " +
              std::to_string(spec.min_initial_separation));
        const Vec3 p = detail::ball_point(rng, spec.position_radius);
        bool ok = true;
        for (const Vec3& q : state.positions) {
          if (norm(p - q) < spec.min_initial_separation) {
            ok = false;
            break;
          }
        }
        if (ok) state.positions.push_back(p);
      }
      state.velocities.reserve(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i)
        state.velocities.push_back(detail::ball_point(rng, spec.speed_radius));
      break;
    }
    case ScenarioKind::kRegularPolygon: {
      state.positions.reserve(spec.n);
      state.velocities.assign(spec.n, Vec3{});
      for (std::size_t k = 0; k < spec.n; ++k) {
        const double phi =
            2.0 * std::numbers::pi * static_cast<double>(k) /
            static_cast<double>(spec.n);
        state.positions.push_back({std::cos(phi), std::sin(phi), 0.0});
      }
      break;
    }
  }
  state.validate();
  return state;
}

// Ground truth for the symmetric head-on two-body run. With both particles
// on the x axis at +-r/2 and at rest at separation d, the separation obeys
//
//   r'' = 2 / r^2,   (r')^2 / 4 + 1/r = 1/d,
//
// and time as a function of separation has the closed form
//
//   t(r) = (sqrt(d)/2) * ( sqrt(r (r - d)) + d * acosh(sqrt(r / d)) ),
//
// obtained from dt = dr / (2 sqrt(1/d - 1/r)) with r = d cosh^2(theta).
// t(r) is strictly increasing, so separation_at inverts it by bisection to
// machine precision; the relative speed follows from the conservation law.
// The asymptotic relative speed is 2/sqrt(d).
class TwoBodyRadialOracle {
 public:
  explicit TwoBodyRadialOracle(double d) : d_(d) {
    if (!(d > 0.0)) throw Error("initial separation must be positive");
  }

  double time_of_separation(double r) const {
    if (r < d_) throw Error("separation below the initial value");
    const double u = std::sqrt(r / d_);
    return 0.5 * std::sqrt(d_) *
           (std::sqrt(r * (r - d_)) + d_ * std::acosh(u));
  }

  // Returns (separation, separation rate) at the requested time.
  std::pair<double, double> at(double t) const {
    if (t < 0.0) throw Error("oracle time must be nonnegative");
    if (t == 0.0) return {d_, 0.0};
    double lo = d_;
    double hi = d_ + 2.0 * t / std::sqrt(d_) + (t / d_) * (t / d_) + 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (time_of_separation(mid) < t)
        lo = mid;
      else
        hi = mid;
    }
    const double r = 0.5 * (lo + hi);
    const double rate = 2.0 * std::sqrt(std::max(0.0, 1.0 / d_ - 1.0 / r));
    return {r, rate};
  }

  double initial_separation() const { return d_; }

 private:
  double d_;
};

inline std::pair<double, double> two_body_radial_oracle(double d, double t) {
  return TwoBodyRadialOracle(d).at(t);
}

}  // namespace repulse
