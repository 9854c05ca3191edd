#include <doctest.h>

#include <cmath>

#include "rcm/corrector.hpp"
#include "rcm/rng.hpp"

using namespace rcm;

TEST_SUITE("corrector") {

TEST_CASE("homogeneous lattice: chi = 0, sigma^2 = 2") {
  const FiniteGraph t = periodize(Environment(2, 1.0, 1), 4);
  const auto gp = generator_problem(t);
  const auto f = solve_corrector(gp);
  CHECK(f.norm_chi < 1e-20);
  CHECK(f.norm_phi == doctest::Approx(2.0));  // d edges per vertex, unit weight
  CHECK(2.0 * f.norm_psi / 2 == doctest::Approx(2.0));
  const auto tp = time_one_problem(t, 2);
  CHECK(tp.second_moment == doctest::Approx(4.0).epsilon(1e-10));
  const auto f1 = solve_corrector(tp);
  CHECK(f1.norm_chi < 1e-20);
}

TEST_CASE("d = 1 ring: series resistance") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Environment env(1, 0.6, 20 + s, ConductanceLaw::two_point(1.0, 50.0, 0.5));
    FiniteGraph ring;
    try {
      ring = periodize(env, 6);
    } catch (const PeriodizeError&) {
      continue;
    }
    const auto f = solve_corrector(generator_problem(ring));
    double inv = 0;
    for (const auto& e : ring.edges) inv += 1.0 / e.record.conductance;
    for (const auto& e : ring.edges) {
      const double dpsi = e.displacement[0] + f.at(e.v, 0) - f.at(e.u, 0);
      CHECK(std::abs(std::abs(dpsi) - ring.period / (e.record.conductance * inv)) < 1e-8);
    }
  }
}

TEST_CASE("Pythagoras, residual and gauge on disordered tori") {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const Environment env(2, 0.75, 60 + s, ConductanceLaw::shifted_pareto(2.5));
    FiniteGraph t;
    try {
      t = periodize(env, 3);
    } catch (const PeriodizeError&) {
      continue;
    }
    if (!t.is_connected()) continue;
    const auto prob = s % 3 ? generator_problem(t) : time_one_problem(t, 2);
    const auto f = solve_corrector(prob);
    CHECK(f.residual <= 1e-8);
    CHECK(f.pythagoras_error() < 1e-6);
    // <grad psi, grad chi> = 0 is the same statement.
    CHECK(std::abs(f.cross) < 1e-8 * std::max(1.0, f.norm_phi));
    // chi minimizes the Dirichlet energy of phi + f.
    CHECK(f.norm_psi <= f.norm_phi + 1e-12);
    for (int i = 0; i < 2; ++i) {
      double m = 0;
      for (int v = 0; v < t.num_vertices(); ++v) m += f.at(v, i);
      CHECK(std::abs(m) < 1e-8);
    }
    const auto z = zero_field(prob);
    CHECK(z.norm_psi == doctest::Approx(z.norm_phi));
  }
}

TEST_CASE("kernel martingale check on a 5-site ring") {
  const Environment env(1, 1.0, 41, ConductanceLaw::shifted_pareto(3.0));
  const FiniteGraph ring = periodize(env, 2);
  REQUIRE(ring.num_vertices() == 5);
  const auto prob = time_one_problem(ring, 8);
  const auto f = solve_corrector(prob);
  CHECK(martingale_check_kernel(ring, f, 1e-8, 8).pass);
  // Dropping the corrector breaks it.
  CHECK_FALSE(martingale_check_kernel(ring, zero_field(prob), 1e-8, 8).pass);
}

TEST_CASE("simulated martingale check") {
  const FiniteGraph t = periodize(Environment(2, 0.8, 3, ConductanceLaw::shifted_pareto(3.0)), 2);
  const auto prob = time_one_problem(t, 3);
  const auto f = solve_corrector(prob);
  const auto rep = martingale_check(t, f, 400, 10, 5);
  CHECK(rep.pass);
  CHECK(rep.states > 0);
}

TEST_CASE("sigma estimates agree between routes") {
  const Environment base(2, 0.8, 5, ConductanceLaw::shifted_pareto(3.0));
  const auto rep = sigma_v_from_corrector(base, {6}, 2, 9);
  REQUIRE(rep.summary.size() == 1);
  CHECK(rep.positive);
  const auto& s = rep.summary[0];
  CHECK(s.generator_mean == doctest::Approx(s.time_one_mean).epsilon(0.02));
  const auto homog = sigma_v_from_corrector(Environment(2, 1.0, 1), {4}, 1, 1);
  CHECK(homog.summary[0].generator_mean == doctest::Approx(2.0));
}

TEST_CASE("sublinearity diagnostic gauges chi(0) = 0") {
  const Environment env = rooted_environment(Environment(2, 0.8, 7, ConductanceLaw::shifted_pareto(3.0)), 1);
  std::vector<FiniteGraph> tori{periodize(env, 3), periodize(env, 5)};
  std::vector<CorrectorField> fields;
  for (const auto& t : tori) fields.push_back(solve_corrector(generator_problem(t)));
  const auto rep = sublinearity_diagnostic(fields, {3, 5}, {0.1, 0.5});
  REQUIRE(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    CHECK(r.density.size() == 2);
    CHECK(r.density[0] >= r.density[1]);
    CHECK(r.max_ratio >= 0.0);
  }
}

}  // TEST_SUITE
