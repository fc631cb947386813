#include "repulse/scenarios.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "repulse/model.hpp"

using namespace repulse;
using Catch::Approx;

TEST_CASE("two-body head-on: placement and energies") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kTwoBodyHeadOn;
  spec.head_on_separation = 1.0;
  auto s = build(spec);
  REQUIRE(s.size() == 2);
  CHECK(s.t == 0.0);
  CHECK(s.positions[0] == Vec3{-0.5, 0, 0});
  CHECK(s.positions[1] == Vec3{0.5, 0, 0});
  auto r = compute_energies(s);
  CHECK(r.e_kin == 0.0);
  CHECK(r.e_pot == Approx(1.0));
  CHECK(r.e_total == Approx(1.0));
}

TEST_CASE("collinear-3 placement") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kCollinear3;
  auto s = build(spec);
  REQUIRE(s.size() == 3);
  CHECK(s.positions[0] == Vec3{-1, 0, 0});
  CHECK(s.positions[1] == Vec3{0, 0, 0});
  CHECK(s.positions[2] == Vec3{1, 0, 0});
  CHECK(kinetic_energy(s) == 0.0);
}

TEST_CASE("random cloud: determinism, support, and separation floor") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kRandomCloud;
  spec.n = 5;
  spec.seed = 12345;
  auto a = build(spec);
  auto b = build(spec);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.positions[i] == b.positions[i]);  // bit-identical
    CHECK(a.velocities[i] == b.velocities[i]);
    CHECK(norm(a.positions[i]) <= spec.position_radius);
    CHECK(norm(a.velocities[i]) <= spec.speed_radius);
  }
  CHECK(min_pairwise_distance(a) >= spec.min_initial_separation);

  spec.seed = 54321;
  auto c = build(spec);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a.positions[i] == c.positions[i])) any_different = true;
  CHECK(any_different);
}

TEST_CASE("random cloud: impossible packing is reported") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kRandomCloud;
  spec.n = 60;
  spec.position_radius = 0.5;
  spec.min_initial_separation = 1.0;
  CHECK_THROWS_AS(build(spec), InfeasibleSpecError);
}

TEST_CASE("regular polygon: symmetry of the initial data") {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kRegularPolygon;
  spec.n = 4;
  auto s = build(spec);
  REQUIRE(s.size() == 4);
  CHECK(norm(total_momentum(s)) == 0.0);
  auto acc = accelerations(s);
  for (std::size_t k = 0; k < 4; ++k) {
    // radial and outward: a_k is parallel to x_k with positive projection
    const Vec3 radial = s.positions[k];
    const double along = dot(acc[k], radial);
    CHECK(along > 0.0);
    const Vec3 tangent = acc[k] - along / norm2(radial) * radial;
    CHECK(norm(tangent) <= 1e-12 * norm(acc[k]));
  }
}

TEST_CASE("scenario validation") {
  ScenarioSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(build(spec), ConfigError);
  spec.n = 2;
  spec.position_radius = -1.0;
  CHECK_THROWS_AS(build(spec), ConfigError);
}

TEST_CASE("radial oracle: endpoint values and conservation law") {
  TwoBodyRadialOracle oracle(1.0);
  auto [r0, v0] = oracle.at(0.0);
  CHECK(r0 == 1.0);
  CHECK(v0 == 0.0);

  // Along the oracle the reduced energy (r')^2/4 + 1/r stays at 1/d.
  for (double t : {0.25, 1.0, 7.5, 100.0, 1000.0}) {
    auto [r, rdot] = oracle.at(t);
    CHECK(rdot * rdot / 4.0 + 1.0 / r == Approx(1.0).epsilon(1e-12));
    // consistency with the forward map
    CHECK(oracle.time_of_separation(r) == Approx(t).epsilon(1e-10));
  }

  // Late-time behaviour: relative speed approaches 2/sqrt(d) from below,
  // and r(t)/(2t) flirts with 1 from below at t = 1e3.
  auto [r3, v3] = oracle.at(1000.0);
  CHECK(v3 < 2.0);
  CHECK(std::fabs(v3 / 2.0 - 1.0) <= 1e-3);
  CHECK(r3 / (2.0 * 1000.0) <= 1.0);
  CHECK(r3 / (2.0 * 1000.0) >= 0.995);
}

TEST_CASE("radial oracle: closed form agrees with direct quadrature") {
  // t(r) = d^{3/2} * integral_0^Theta cosh^2(theta) dtheta with
  // Theta = acosh(sqrt(r/d)); composite Simpson cross-check.
  const double d = 2.5;
  TwoBodyRadialOracle oracle(d);
  for (double r : {2.6, 4.0, 25.0, 400.0}) {
    const double theta_max = std::acosh(std::sqrt(r / d));
    const int panels = 800;
    const double h = theta_max / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double a = k * h;
      const double m = a + 0.5 * h;
      const double b = a + h;
      auto f = [](double th) {
        const double c = std::cosh(th);
        return c * c;
      };
      acc += h / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    }
    const double t_quad = std::pow(d, 1.5) * acc;
    CHECK(oracle.time_of_separation(r) == Approx(t_quad).epsilon(1e-10));
  }
}

TEST_CASE("radial oracle: rejects separations below the initial one") {
  TwoBodyRadialOracle oracle(1.0);
  CHECK_THROWS_AS(oracle.time_of_separation(0.5), Error);
  CHECK_THROWS_AS(oracle.at(-1.0), Error);
}
