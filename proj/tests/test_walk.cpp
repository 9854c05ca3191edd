#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rcm/stats.hpp"
#include "rcm/walk.hpp"

using namespace rcm;

TEST_SUITE("walk") {

TEST_CASE("step distribution") {
  const Environment hom(2, 1.0, 1);
  const auto sd = step_distribution(hom, LatticePoint{3, 4});
  REQUIRE(sd.options.size() == 4);
  for (const auto& o : sd.options) CHECK(o.probability == doctest::Approx(0.25));
  CHECK(sd.total_rate == doctest::Approx(4.0));

  const Environment env = rooted_environment(Environment(3, 0.6, 4, ConductanceLaw::shifted_pareto(2.0)), 1);
  const auto s3 = step_distribution(env, LatticePoint::origin(3));
  double tot = 0, rate = 0;
  for (const auto& o : s3.options) {
    tot += o.probability;
    rate += o.conductance;
    CHECK(o.probability == doctest::Approx(o.conductance / s3.total_rate));
  }
  CHECK(tot == doctest::Approx(1.0));
  CHECK(rate == doctest::Approx(env.total_rate(LatticePoint::origin(3))));
}

TEST_CASE("trajectories are reproducible and well formed") {
  const Environment env = rooted_environment(Environment(2, 0.7, 2, ConductanceLaw::shifted_pareto(3.0)), 5);
  const LatticePoint o = LatticePoint::origin(2);
  for (auto kind : {WalkKind::kVariableSpeed, WalkKind::kConstantSpeed}) {
    const auto a = simulate_walk(env, o, 30.0, 77, kind);
    const auto b = simulate_walk(env, o, 30.0, 77, kind);
    CHECK(a.times == b.times);
    CHECK(a.positions == b.positions);
    CHECK(a.times.front() == 0.0);
    for (std::size_t k = 1; k < a.times.size(); ++k) {
      CHECK(a.times[k] > a.times[k - 1]);
      CHECK(a.times[k] <= a.horizon);
      CHECK(env.site_open(a.positions[k]));
      const auto d = a.positions[k] - a.positions[k - 1];
      int nz = 0;
      for (int i = 0; i < 2; ++i) nz += d[i] != 0;
      CHECK(nz == 1);
    }
  }
}

TEST_CASE("homogeneous VSRW jump count is Poisson(4t)") {
  const Environment env(2, 1.0, 1);
  double s = 0;
  const int N = 4000;
  for (int i = 0; i < N; ++i) s += static_cast<double>(simulate_vsrw(env, LatticePoint::origin(2), 2.0, i).jumps());
  CHECK(std::abs(s / N - 8.0) < 4.0 * std::sqrt(8.0 / N));
}

TEST_CASE("CSRW holding times are Exp(1)") {
  const Environment env = rooted_environment(Environment(2, 0.5, 9, ConductanceLaw::shifted_pareto(3.0)), 2);
  std::vector<double> h;
  for (int i = 0; i < 5000; ++i) {
    const auto t = simulate_csrw(env, LatticePoint::origin(2), 40.0, i);
    if (t.jumps() > 0) h.push_back(t.times[1]);
  }
  CHECK(ks_test(h, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); }).p_value > 1e-3);
}

TEST_CASE("clock A(t) and the time change") {
  const Environment hom(2, 1.0, 1);
  const auto tr = simulate_vsrw(hom, LatticePoint::origin(2), 10.0, 3);
  CHECK(tr.total_conductance_time() == doctest::Approx(40.0));
  CHECK(tr.conductance_time(2.5) == doctest::Approx(10.0));

  const Environment env = rooted_environment(Environment(2, 0.7, 2, ConductanceLaw::shifted_pareto(3.0)), 5);
  const auto v = simulate_vsrw(env, LatticePoint::origin(2), 20.0, 9);
  const auto c = time_change(v);
  CHECK(c.kind == WalkKind::kConstantSpeed);
  CHECK(c.horizon == doctest::Approx(v.total_conductance_time()));
  CHECK(c.positions == v.positions);
  for (std::size_t k = 0; k < v.times.size(); ++k) CHECK(c.times[k] == doctest::Approx(v.conductance_time(v.times[k])));
}

TEST_CASE("discretization and rescaling") {
  const Environment env(2, 1.0, 1);
  const auto tr = simulate_vsrw(env, LatticePoint::origin(2), 10.0, 4);
  const auto d = discretize(tr, 10);
  REQUIRE(d.size() == 11);
  for (int k = 0; k <= 10; ++k) CHECK(d[k] == tr.position_at(k));
  const auto r = rescale(tr, 0.5, 5);
  CHECK(r.s.size() == 6);
  CHECK(r.values[0][0] == 0.0);
}

TEST_CASE("graph walks lift positions through displacements") {
  const Environment env(2, 0.7, 3, ConductanceLaw::shifted_pareto(3.0));
  const FiniteGraph t = periodize(env, 3);
  const auto tr = simulate_walk(t, 0, 50.0, 8, WalkKind::kVariableSpeed);
  for (std::size_t k = 0; k < tr.positions.size(); ++k) {
    const auto diff = tr.positions[k] - t.vertices[tr.vertices[k]];
    for (int i = 0; i < 2; ++i) CHECK(((diff[i] % t.period) + t.period) % t.period == 0);
  }
}

TEST_CASE("trajectory dump round trip") {
  const Environment env(2, 0.7, 3);
  const auto tr = simulate_vsrw(rooted_environment(env, 1), LatticePoint::origin(2), 5.0, 2);
  const auto path = std::filesystem::temp_directory_path() / "rcm_test_traj.bin";
  write_trajectory(tr, env.to_json(), path);
  const auto back = read_trajectory(path);
  CHECK(back.times == tr.times);
  CHECK(back.positions == tr.positions);
}

}  // TEST_SUITE
