#include "repulse/integrate.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "repulse/model.hpp"
#include "repulse/scenarios.hpp"
#include "testutil.hpp"

using namespace repulse;
using Catch::Approx;

namespace {

ParticleState head_on() {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kTwoBodyHeadOn;
  return build(spec);
}

ParticleState self_similar(double t, double scale) {
  // v = x/t exactly, so E_rel vanishes; separation grows linearly.
  ParticleState s;
  s.t = t;
  s.positions = {{scale * t / 2.0, 0, 0}, {-scale * t / 2.0, 0, 0}};
  s.velocities = {{scale / 2.0, 0, 0}, {-scale / 2.0, 0, 0}};
  return s;
}

double max_coord_diff(const ParticleState& a, const ParticleState& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, max_abs(a.positions[i] - b.positions[i]));
    worst = std::max(worst, max_abs(a.velocities[i] - b.velocities[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("step_fixed: free particle advances exactly") {
  for (Method m : {Method::kRk4Fixed, Method::kVelocityVerlet,
                   Method::kDormandPrince54}) {
    ParticleState s;
    s.positions = {{1.0, -2.0, 0.5}};
    s.velocities = {{2.0, 4.0, -6.0}};
    auto out = step_fixed(s, 0.5, m);
    CHECK(out.t == Approx(0.5));
    CHECK(out.positions[0].x == Approx(1.0 + 0.5 * 2.0).margin(0));
    CHECK(out.positions[0].y == Approx(-2.0 + 0.5 * 4.0).margin(0));
    CHECK(out.positions[0].z == Approx(0.5 - 0.5 * 6.0).margin(0));
    CHECK(out.velocities[0] == s.velocities[0]);
  }
}

TEST_CASE("step_fixed: one rk4 step against a tiny-step reference") {
  auto s = head_on();
  auto one = step_fixed(s, 1e-3, Method::kRk4Fixed);
  CHECK(norm(one.positions[1] - one.positions[0]) > 1.0);  // repulsion
  CHECK(std::fabs(compute_energies(one).e_total - 1.0) <= 1e-12);

  auto ref = integrate_fixed(s, 1e-3, 1e-6, Method::kRk4Fixed);
  CHECK(max_coord_diff(one, ref) <= 1e-12);
}

TEST_CASE("velocity-verlet: bounded oscillatory energy error, no late drift") {
  auto s = head_on();
  auto at5 = integrate_fixed(s, 5.0, 1e-3, Method::kVelocityVerlet);
  auto at10 = integrate_fixed(at5, 10.0, 1e-3, Method::kVelocityVerlet);
  const double e5 = compute_energies(at5).e_total;
  const double e10 = compute_energies(at10).e_total;
  CHECK(std::fabs(e5 - 1.0) <= 1e-6);   // bounded, not growing
  CHECK(std::fabs(e10 - 1.0) <= 1e-6);
  CHECK(std::fabs(e10 - e5) <= 1e-8);   // no secular drift once forces fade
}

TEST_CASE("velocity-verlet: second-order self-convergence") {
  auto s = head_on();
  auto ref = integrate_fixed(s, 2.0, 1e-5, Method::kVelocityVerlet);
  auto coarse = integrate_fixed(s, 2.0, 4e-3, Method::kVelocityVerlet);
  auto fine = integrate_fixed(s, 2.0, 2e-3, Method::kVelocityVerlet);
  const double ec = max_coord_diff(coarse, ref);
  const double ef = max_coord_diff(fine, ref);
  CHECK(ec / ef == Approx(4.0).margin(1.0));
}

TEST_CASE("rk4: halving dt cuts the end-state error about 16x") {
  auto s = head_on();
  auto ref = integrate_fixed(s, 5.0, 1e-4, Method::kRk4Fixed);
  auto coarse = integrate_fixed(s, 5.0, 0.02, Method::kRk4Fixed);
  auto fine = integrate_fixed(s, 5.0, 0.01, Method::kRk4Fixed);
  const double ec = max_coord_diff(coarse, ref);
  const double ef = max_coord_diff(fine, ref);
  CHECK(ec / ef >= 12.0);
  CHECK(ec / ef <= 22.0);
}

TEST_CASE("step_fixed: absurd step sizes blow up loudly") {
  auto s = head_on();
  CHECK_THROWS_AS(step_fixed(s, 1e200, Method::kVelocityVerlet),
                  NumericalBlowupError);
  CHECK_THROWS_AS(step_fixed(s, -1.0, Method::kRk4Fixed), Error);
}

TEST_CASE("adaptive: free particle is exact and runs at max_step") {
  ParticleState s;
  s.positions = {{0.5, 0.25, -1.0}};
  s.velocities = {{1.0, -0.5, 0.25}};
  StepperConfig cfg;
  cfg.max_step = 5.0;
  std::vector<double> outs = {0.0, 40.0, 100.0};
  int steps = 0;
  auto traj = integrate_adaptive(s, 100.0, cfg, outs,
                                 [&](const ParticleState&) { ++steps; });
  REQUIRE(traj.size() == 3);
  CHECK(traj[0].state.t == 0.0);
  CHECK(traj[2].state.t == 100.0);
  const Vec3 expect = s.positions[0] + 100.0 * s.velocities[0];
  CHECK(norm(traj[2].state.positions[0] - expect) <= 1e-12 * norm(expect));
  CHECK(traj[2].state.velocities[0] == s.velocities[0]);
  CHECK(steps <= 25);  // 100 time units, steps pinned at max_step = 5
}

TEST_CASE("adaptive: tightening rel_tol improves energy conservation >= 10x") {
  auto s = head_on();
  std::vector<double> outs = {100.0};
  StepperConfig loose;
  loose.rel_tol = 1e-6;
  loose.abs_tol = 1e-9;
  StepperConfig tight;
  tight.rel_tol = 1e-9;
  tight.abs_tol = 1e-12;
  auto tl = integrate_adaptive(s, 100.0, loose, outs);
  auto tt = integrate_adaptive(s, 100.0, tight, outs);
  const double el = std::fabs(tl.back().energies.e_total - 1.0);
  const double et = std::fabs(tt.back().energies.e_total - 1.0);
  REQUIRE(el > 0.0);
  CHECK(el / et >= 10.0);
}

TEST_CASE("adaptive: agrees with fixed rk4 at dt = 1e-4 on a seeded n=4 cloud") {
  ScenarioSpec spec;
  spec.n = 4;
  spec.seed = 2024;
  auto s = build(spec);
  StepperConfig cfg;
  std::vector<double> outs = {100.0};
  auto traj = integrate_adaptive(s, 100.0, cfg, outs);
  auto ref = integrate_fixed(s, 100.0, 1e-4, Method::kRk4Fixed);
  CHECK(max_coord_diff(traj.back().state, ref) <= 1e-6);
}

TEST_CASE("adaptive: samples land exactly on requested times, with quadrature") {
  auto s = head_on();
  StepperConfig cfg;
  std::vector<double> outs = {0.0, 0.5, 1.0, 2.0, 7.25, 20.0};
  auto traj = integrate_adaptive(s, 20.0, cfg, outs);
  REQUIRE(traj.size() == outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    CHECK(traj[i].state.t == outs[i]);  // exact, not approximate
    CHECK(traj[i].energies.e_total == Approx(1.0).epsilon(1e-9));
    if (outs[i] < 1.0) {
      CHECK_FALSE(traj[i].has_quadrature);
    } else {
      REQUIRE(traj[i].has_quadrature);
      CHECK(traj[i].quadrature.t == outs[i]);
    }
  }
  // quadrature opens flat at t = 1 and both integrals are nondecreasing
  CHECK(traj[2].quadrature.int_e_rel() == 0.0);
  CHECK(traj[2].quadrature.int_t_epot() == 0.0);
  double prev_e = 0.0, prev_p = 0.0;
  for (const auto& sample : traj.samples) {
    if (!sample.has_quadrature) continue;
    CHECK(sample.quadrature.int_e_rel() >= prev_e);
    CHECK(sample.quadrature.int_t_epot() >= prev_p);
    prev_e = sample.quadrature.int_e_rel();
    prev_p = sample.quadrature.int_t_epot();
  }
}

TEST_CASE("adaptive: a-priori bounds hold at every accepted step") {
  ScenarioSpec spec;
  spec.n = 5;
  spec.seed = 99;
  auto s = build(spec);
  const double e0 = compute_energies(s).e_total;
  const double vbound = std::sqrt(2.0 * e0);
  StepperConfig cfg;
  std::vector<double> outs = {100.0};
  integrate_adaptive(s, 100.0, cfg, outs, [&](const ParticleState& st) {
    CHECK(max_speed(st) <= vbound * (1.0 + 1e-9));
    CHECK(min_pairwise_distance(st) >= (1.0 / vbound) * (1.0 - 1e-9));
  });
}

TEST_CASE("adaptive: invariants over a seeded cloud horizon") {
  ScenarioSpec spec;
  spec.seed = 7;
  auto s = build(spec);
  const auto r0 = compute_energies(s);
  const Vec3 p0 = total_momentum(s);
  const Vec3 l0 = total_angular_momentum(s);
  const double vscale = std::sqrt(2.0 * r0.e_total);
  StepperConfig cfg;
  std::vector<double> outs;
  for (double t = 0.0; t <= 200.0; t += 12.5) outs.push_back(t);
  auto traj = integrate_adaptive(s, 200.0, cfg, outs);
  for (const auto& sample : traj.samples) {
    CHECK(std::fabs(sample.energies.e_total - r0.e_total) <=
          1e-7 * r0.e_total);
    CHECK(norm(total_momentum(sample.state) - p0) <= 1e-9 * vscale);
    CHECK(norm(total_angular_momentum(sample.state) - l0) <=
          1e-9 * std::max(1.0, norm(l0)));
  }
}

TEST_CASE("adaptive: lambda scaling symmetry of the flow") {
  // x -> lambda x, v -> v / sqrt(lambda), t -> lambda^{3/2} t maps solutions
  // to solutions for the inverse-square interaction.
  const double lambda = 4.0;
  ScenarioSpec spec;
  spec.n = 3;
  spec.seed = 5;
  auto s = build(spec);
  ParticleState scaled = s;
  for (auto& p : scaled.positions) p *= lambda;
  for (auto& v : scaled.velocities) v *= 1.0 / std::sqrt(lambda);

  StepperConfig cfg;
  const double t1 = 5.0;
  const double t2 = std::pow(lambda, 1.5) * t1;
  std::vector<double> outs1 = {t1};
  std::vector<double> outs2 = {t2};
  auto a = integrate_adaptive(s, t1, cfg, outs1);
  auto b = integrate_adaptive(scaled, t2, cfg, outs2);

  double worst = 0.0;
  const auto& fa = a.back().state;
  const auto& fb = b.back().state;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst = std::max(
        worst, norm(fb.positions[i] - lambda * fa.positions[i]) /
                   std::max(1.0, lambda * norm(fa.positions[i])));
    worst = std::max(
        worst,
        norm(fb.velocities[i] - fa.velocities[i] / std::sqrt(lambda)) /
            std::max(1.0, norm(fa.velocities[i]) / std::sqrt(lambda)));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("time reversal") {
  std::mt19937_64 rng(31);
  auto s = testutil::random_state(rng, 4);
  SECTION("double reversal is the identity") {
    auto twice = time_reverse(time_reverse(s));
    CHECK(max_coord_diff(twice, s) == 0.0);
  }
  SECTION("reversal preserves the scalar functionals") {
    auto rev = time_reverse(s);
    CHECK(kinetic_energy(rev) == kinetic_energy(s));
    CHECK(potential_energy(rev) == potential_energy(s));
    CHECK(moment_of_inertia(rev).first == moment_of_inertia(s).first);
  }
  SECTION("forward-reverse-forward-reverse comes home") {
    auto start = head_on();
    StepperConfig cfg;
    std::vector<double> out10 = {10.0};
    auto fwd = integrate_adaptive(start, 10.0, cfg, out10).back().state;
    auto back_start = time_reverse(fwd);
    back_start.t = 0.0;
    auto returned =
        integrate_adaptive(back_start, 10.0, cfg, out10).back().state;
    auto home = time_reverse(returned);
    home.t = 0.0;
    CHECK(max_coord_diff(home, start) <= 1e-6);
  }
}

TEST_CASE("quadrature: self-similar panels add nothing to int_e_rel") {
  QuadratureState quad;
  quad.t = 1.0;
  auto q1 = advance_quadrature(quad, self_similar(1.0, 2.0),
                               self_similar(1.25, 2.0), self_similar(1.5, 2.0));
  CHECK(q1.int_e_rel() == 0.0);
  CHECK(q1.t == 1.5);
  // E_pot(s) = 1/(2s) for this family, so s * E_pot is constant = 1/2 and
  // the panel integral is exact: (1/2) * h.
  CHECK(q1.int_t_epot() == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("quadrature: synthetic integrand families over [1, e]") {
  // Family A: E_pot(s) = 1/s via separation s, E_rel = 0:
  //   int_1^e s * E_pot ds = e - 1 (Simpson is exact, the integrand is 1).
  // Family B: E_pot(s) = 1/s^2 via separation s^2:
  //   int_1^e s * E_pot ds = ln e = 1.
  auto family_a = [](double s) {
    ParticleState st;
    st.t = s;
    st.positions = {{s / 2.0, 0, 0}, {-s / 2.0, 0, 0}};
    st.velocities = {{0.5, 0, 0}, {-0.5, 0, 0}};
    return st;
  };
  auto family_b = [](double s) {
    ParticleState st;
    st.t = s;
    st.positions = {{s * s / 2.0, 0, 0}, {-s * s / 2.0, 0, 0}};
    st.velocities = {{s, 0, 0}, {-s, 0, 0}};  // v = x/t, E_rel = 0
    return st;
  };
  const double e = std::exp(1.0);
  const int panels = 100;
  QuadratureState qa, qb;
  qa.t = qb.t = 1.0;
  for (int k = 0; k < panels; ++k) {
    const double a = 1.0 + (e - 1.0) * k / panels;
    const double b = 1.0 + (e - 1.0) * (k + 1) / panels;
    const double m = 0.5 * (a + b);
    qa = advance_quadrature(qa, family_a(a), family_a(m), family_a(b));
    qb = advance_quadrature(qb, family_b(a), family_b(m), family_b(b));
  }
  CHECK(qa.int_t_epot() == Approx(e - 1.0).epsilon(1e-12));
  CHECK(qa.int_e_rel() == 0.0);
  CHECK(qb.int_t_epot() == Approx(1.0).margin(5e-9));
  CHECK(qb.int_g_over_s2() == qb.int_e_rel());
}

TEST_CASE("quadrature: window and ordering violations") {
  QuadratureState quad;
  quad.t = 0.9;
  CHECK_THROWS_AS(advance_quadrature(quad, self_similar(0.9, 2.0),
                                     self_similar(0.95, 2.0),
                                     self_similar(1.0, 2.0)),
                  DiagnosticWindowError);
  quad.t = 2.0;
  CHECK_THROWS_AS(advance_quadrature(quad, self_similar(2.0, 2.0),
                                     self_similar(2.0, 2.0),
                                     self_similar(2.0, 2.0)),
                  Error);
  // off-center midpoint
  CHECK_THROWS_AS(advance_quadrature(quad, self_similar(2.0, 2.0),
                                     self_similar(2.4, 2.0),
                                     self_similar(3.0, 2.0)),
                  Error);
}

TEST_CASE("adaptive: stiffness guard trips when tolerance cannot be met") {
  auto s = head_on();
  StepperConfig cfg;
  cfg.rel_tol = 1e-16;
  cfg.abs_tol = 1e-300;
  cfg.min_step = 1e-3;
  cfg.initial_step = 0.1;
  cfg.max_step = 1.0;
  std::vector<double> outs = {10.0};
  CHECK_THROWS_AS(integrate_adaptive(s, 10.0, cfg, outs), StiffnessError);
}

TEST_CASE("adaptive: input validation") {
  auto s = head_on();
  StepperConfig cfg;
  std::vector<double> bad = {5.0, 2.0};
  CHECK_THROWS_AS(integrate_adaptive(s, 10.0, cfg, bad), Error);
  std::vector<double> outside = {50.0};
  CHECK_THROWS_AS(integrate_adaptive(s, 10.0, cfg, outside), Error);
  std::vector<double> ok = {5.0};
  CHECK_THROWS_AS(integrate_adaptive(s, -1.0, cfg, ok), Error);
  StepperConfig bad_cfg;
  bad_cfg.rel_tol = -1.0;
  CHECK_THROWS_AS(integrate_adaptive(s, 10.0, bad_cfg, ok), ConfigError);
}

TEST_CASE("fixed-method driver: sampling and quadrature work without dense output") {
  auto s = head_on();
  StepperConfig cfg;
  cfg.method = Method::kVelocityVerlet;
  cfg.initial_step = 1e-3;
  std::vector<double> outs = {0.0, 1.0, 3.0};
  auto traj = integrate_adaptive(s, 3.0, cfg, outs);
  REQUIRE(traj.size() == 3);
  CHECK(traj[1].state.t == 1.0);
  REQUIRE(traj[2].has_quadrature);
  CHECK(traj[2].quadrature.int_t_epot() > 0.0);
  CHECK(std::fabs(traj[2].energies.e_total - 1.0) <= 1e-6);
}
