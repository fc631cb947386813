#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "repulse/errors.hpp"
#include "repulse/model.hpp"
#include "repulse/state.hpp"

namespace repulse {

enum class Method {
  kRk4Fixed,
  kDormandPrince54,
  kVelocityVerlet,
};

// Classical RK4 step for the first-order system (x' = v, v' = a(x)).
// Local truncation error O(dt^5).
inline ParticleState rk4_step(const ParticleState& state, double dt) {
  const std::size_t n = state.size();
  ParticleState stage = state;
  std::vector<Vec3> a1, a2, a3, a4;

  accelerations(state, a1);  // k1 = (v, a(x))
  for (std::size_t i = 0; i < n; ++i) {
    stage.positions[i] = state.positions[i] + 0.5 * dt * state.velocities[i];
    stage.velocities[i] = state.velocities[i] + 0.5 * dt * a1[i];
  }
  accelerations(stage, a2);  // k2
  std::vector<Vec3> v2 = stage.velocities;
  for (std::size_t i = 0; i < n; ++i) {
    stage.positions[i] = state.positions[i] + 0.5 * dt * v2[i];
    stage.velocities[i] = state.velocities[i] + 0.5 * dt * a2[i];
  }
  accelerations(stage, a3);  // k3
  std::vector<Vec3> v3 = stage.velocities;
  for (std::size_t i = 0; i < n; ++i) {
    stage.positions[i] = state.positions[i] + dt * v3[i];
    stage.velocities[i] = state.velocities[i] + dt * a3[i];
  }
  accelerations(stage, a4);  // k4
  const std::vector<Vec3>& v4 = stage.velocities;

  ParticleState out = state;
  out.t = state.t + dt;
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.positions[i] += w * (state.velocities[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
    out.velocities[i] += w * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
  }
  return out;
}

// Velocity-Verlet (kick-drift-kick). Local truncation error O(dt^3);
// being symplectic, its energy error stays bounded instead of drifting.
inline ParticleState velocity_verlet_step(const ParticleState& state, double dt) {
  const std::size_t n = state.size();
  std::vector<Vec3> a;
  accelerations(state, a);
  ParticleState out = state;
  out.t = state.t + dt;
  for (std::size_t i = 0; i < n; ++i) {
    out.velocities[i] += 0.5 * dt * a[i];
    out.positions[i] += dt * out.velocities[i];
  }
  accelerations(out, a);
  for (std::size_t i = 0; i < n; ++i) out.velocities[i] += 0.5 * dt * a[i];
  return out;
}

// Dormand-Prince 5(4) embedded pair with FSAL and the standard quartic
// dense-output polynomial. The driver in integrate.hpp owns step-size
// control; this class owns one step's stage algebra.
class Dopri5Core {
 public:
  explicit Dopri5Core(const ParticleState& initial) { reset(initial); }

  // Loads a fresh state and primes k1 (one force evaluation).
  void reset(const ParticleState& initial) {
    y_ = initial;
    n_ = initial.size();
    for (auto& k : k_) {
      k.dx.resize(n_);
      k.dv.resize(n_);
    }
    stage_.positions.resize(n_);
    stage_.velocities.resize(n_);
    proposed_ = initial;
    k_[0].dx = y_.velocities;
    accelerations(y_, k_[0].dv);
    h_ = 0.0;
  }

  const ParticleState& current() const { return y_; }

  // One trial step of size h. Fills the proposed end state and k2..k7 and
  // returns the mixed error norm scaled so that <= 1 means acceptable.
  // The current state and k1 are left untouched, so a rejected step can
  // simply retry with a smaller h.
  double attempt(double h, double rel_tol, double abs_tol) {
    h_ = h;
    dense_ready_ = false;
    for (std::size_t s = 1; s < 6; ++s) {
      build_stage(s, h);
      k_[s].dx = stage_.velocities;
      accelerations(stage_, k_[s].dv);
    }
    // Stage 7 is the 5th-order solution itself.
    build_stage(6, h);
    proposed_ = stage_;
    proposed_.t = y_.t + h;
    k_[6].dx = proposed_.velocities;
    accelerations(proposed_, k_[6].dv);

    // Error estimate: h * sum_i (b_i - bhat_i) k_i, RMS over all 6n
    // components against scale abs_tol + rel_tol * max(|y0|, |y1|).
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      Vec3 ex{}, ev{};
      for (std::size_t s = 0; s < 7; ++s) {
        if (kErr[s] == 0.0) continue;
        ex += kErr[s] * k_[s].dx[i];
        ev += kErr[s] * k_[s].dv[i];
      }
      acc += scaled_norm2(h * ex, y_.positions[i], proposed_.positions[i],
                          rel_tol, abs_tol);
      acc += scaled_norm2(h * ev, y_.velocities[i], proposed_.velocities[i],
                          rel_tol, abs_tol);
    }
    return std::sqrt(acc / (6.0 * static_cast<double>(n_)));
  }

  const ParticleState& proposed() const { return proposed_; }

  // Start state of the last accepted step.
  const ParticleState& previous() const {
    if (!has_prev_) throw Error("no step accepted yet");
    return prev_;
  }

  // Pins the current time to an exact landing target (at most one ulp away
  // from the accumulated value), so samples carry exact grid times.
  void set_current_time(double t) { y_.t = t; }

  // Commits the attempted step; k7 becomes next step's k1 (FSAL).
  void accept() {
    prev_ = y_;
    y_ = proposed_;
    std::swap(k_[0].dx, k_[6].dx);
    std::swap(k_[0].dv, k_[6].dv);
    has_prev_ = true;
  }

  // Interpolates within the last accepted step at theta in [0, 1]
  // (theta = 0 is the step's start). Quartic in theta; the interpolation
  // error is of the same order as the local step error.
  ParticleState dense_at(double theta) {
    if (!has_prev_) throw Error("dense output requested before any step");
    if (!dense_ready_) build_dense();
    const double th1 = 1.0 - theta;
    ParticleState out;
    out.t = prev_.t + theta * h_;
    out.positions.resize(n_);
    out.velocities.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out.positions[i] =
          rcont_[0].dx[i] +
          theta * (rcont_[1].dx[i] +
                   th1 * (rcont_[2].dx[i] +
                          theta * (rcont_[3].dx[i] + th1 * rcont_[4].dx[i])));
      out.velocities[i] =
          rcont_[0].dv[i] +
          theta * (rcont_[1].dv[i] +
                   th1 * (rcont_[2].dv[i] +
                          theta * (rcont_[3].dv[i] + th1 * rcont_[4].dv[i])));
    }
    return out;
  }

 private:
  struct Deriv {
    std::vector<Vec3> dx;
    std::vector<Vec3> dv;
  };

  static double scaled_norm2(const Vec3& err, const Vec3& y0, const Vec3& y1,
                             double rel_tol, double abs_tol) {
    double acc = 0.0;
    const double ex[3] = {err.x, err.y, err.z};
    const double a0[3] = {y0.x, y0.y, y0.z};
    const double a1[3] = {y1.x, y1.y, y1.z};
    for (int c = 0; c < 3; ++c) {
      const double sc =
          abs_tol + rel_tol * std::max(std::fabs(a0[c]), std::fabs(a1[c]));
      const double q = ex[c] / sc;
      acc += q * q;
    }
    return acc;
  }

  // Stage s state: y0 + h * sum_{m<s} a[s][m] k_m.
  void build_stage(std::size_t s, double h) {
    for (std::size_t i = 0; i < n_; ++i) {
      Vec3 px{}, pv{};
      for (std::size_t m = 0; m < s; ++m) {
        const double a = kA[s][m];
        if (a == 0.0) continue;
        px += a * k_[m].dx[i];
        pv += a * k_[m].dv[i];
      }
      stage_.positions[i] = y_.positions[i] + h * px;
      stage_.velocities[i] = y_.velocities[i] + h * pv;
    }
    stage_.t = y_.t + kC[s] * h;
  }

  void build_dense() {
    for (auto& r : rcont_) {
      r.dx.resize(n_);
      r.dv.resize(n_);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      // k_[0] now holds k7 of the accepted step (FSAL swap); k_[6] holds
      // the old k1. Positions and velocities are handled identically.
      const Vec3 ydx = y_.positions[i] - prev_.positions[i];
      const Vec3 ydv = y_.velocities[i] - prev_.velocities[i];
      const Vec3 bsplx = h_ * k_[6].dx[i] - ydx;
      const Vec3 bsplv = h_ * k_[6].dv[i] - ydv;
      rcont_[0].dx[i] = prev_.positions[i];
      rcont_[0].dv[i] = prev_.velocities[i];
      rcont_[1].dx[i] = ydx;
      rcont_[1].dv[i] = ydv;
      rcont_[2].dx[i] = bsplx;
      rcont_[2].dv[i] = bsplv;
      rcont_[3].dx[i] = ydx - h_ * k_[0].dx[i] - bsplx;
      rcont_[3].dv[i] = ydv - h_ * k_[0].dv[i] - bsplv;
      Vec3 wx = kD[0] * k_[6].dx[i] + kD[6] * k_[0].dx[i];
      Vec3 wv = kD[0] * k_[6].dv[i] + kD[6] * k_[0].dv[i];
      for (std::size_t s = 2; s < 6; ++s) {
        wx += kD[s] * k_[s].dx[i];
        wv += kD[s] * k_[s].dv[i];
      }
      rcont_[4].dx[i] = h_ * wx;
      rcont_[4].dv[i] = h_ * wv;
    }
    dense_ready_ = true;
  }

  // Butcher tableau (Dormand & Prince 1980), row 7 doubling as the
  // 5th-order weights b. kErr = b - bhat. kD are the dense-output weights.
  static constexpr double kC[7] = {0.0,     1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0,
                                   8.0 / 9.0, 1.0,       1.0};
  static constexpr double kA[7][6] = {
      {0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
      {1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0},
      {3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0},
      {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0},
      {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0,
       0.0, 0.0},
      {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
       -5103.0 / 18656.0, 0.0},
      {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
       11.0 / 84.0},
  };
  static constexpr double kErr[7] = {
      71.0 / 57600.0,     0.0,          -71.0 / 16695.0, 71.0 / 1920.0,
      -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};
  static constexpr double kD[7] = {-12715105075.0 / 11282082432.0,
                                   0.0,
                                   87487479700.0 / 32700410799.0,
                                   -10690763975.0 / 1880347072.0,
                                   701980252875.0 / 199316789632.0,
                                   -1453857185.0 / 822651844.0,
                                   69997945.0 / 29380423.0};

  std::size_t n_ = 0;
  ParticleState y_;
  ParticleState prev_;
  ParticleState proposed_;
  ParticleState stage_;
  std::array<Deriv, 7> k_;
  std::array<Deriv, 5> rcont_;
  double h_ = 0.0;
  bool dense_ready_ = false;
  bool has_prev_ = false;
};

}  // namespace repulse
