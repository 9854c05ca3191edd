#include <doctest.h>

#include <cmath>
#include <set>

#include "rcm/environment.hpp"
#include "rcm/rng.hpp"
#include "rcm/stats.hpp"

using namespace rcm;

TEST_SUITE("environment") {

TEST_CASE("p = 1 opens every site and gives unit edges") {
  const Environment env(2, 1.0, 3);
  for (std::int64_t a = -5; a <= 5; ++a)
    for (std::int64_t b = -5; b <= 5; ++b) {
      const LatticePoint x{a, b};
      CHECK(env.site_open(x));
      for (int i = 0; i < 2; ++i)
        for (int dir : {-1, 1}) CHECK(env.neighbor_along_axis(x, i, dir).length == 1);
    }
}

TEST_CASE("queries are deterministic") {
  const Environment env(3, 0.4, 99, ConductanceLaw::shifted_pareto(2.0));
  const Environment twin = Environment::from_json(env.to_json());
  CounterStream rng(5);
  for (int k = 0; k < 500; ++k) {
    LatticePoint x{static_cast<std::int64_t>(rng.next_u64() % 100) - 50,
                   static_cast<std::int64_t>(rng.next_u64() % 100) - 50,
                   static_cast<std::int64_t>(rng.next_u64() % 100) - 50};
    CHECK(env.site_open(x) == twin.site_open(x));
    CHECK(env.site_open(x) == env.site_open(x));
    CHECK(env.edge_conductance(x, 1) == twin.edge_conductance(x, 1));
  }
}

TEST_CASE("open-site count in a box is binomial") {
  // p = 0.5, seed 7, B_inf(0, 20) in d = 2: within 3 sd of 0.5 * 41^2.
  const Environment env(2, 0.5, 7);
  double open = 0;
  for (const auto& x : ball_linf(LatticePoint::origin(2), 20)) open += env.site_open(x) ? 1 : 0;
  const double n = 41.0 * 41.0;
  CHECK(std::abs(open - 0.5 * n) <= 3.0 * std::sqrt(n * 0.25));
}

TEST_CASE("edges skip closed sites and are symmetric") {
  for (double p : {0.2, 0.5, 0.8}) {
    const Environment env(2, p, 17, ConductanceLaw::shifted_exponential(1.0));
    CounterStream rng(11);
    for (int k = 0; k < 300; ++k) {
      LatticePoint x{static_cast<std::int64_t>(rng.next_u64() % 200), static_cast<std::int64_t>(rng.next_u64() % 200)};
      if (!env.site_open(x)) continue;
      const int axis = static_cast<int>(rng.next_u64() % 2);
      const auto e = env.neighbor_along_axis(x, axis, 1);
      CHECK(e.base == x);
      CHECK(env.site_open(e.other_end()));
      for (std::int64_t h = 1; h < e.length; ++h) CHECK_FALSE(env.site_open(x + LatticePoint::unit(2, axis, h)));
      const auto back = env.neighbor_along_axis(e.other_end(), axis, -1);
      CHECK(back.base == e.base);
      CHECK(back.length == e.length);
      CHECK(back.conductance == e.conductance);
      CHECK(e.conductance >= 1.0);
    }
  }
}

TEST_CASE("edge lengths follow Geometric(p)") {
  const Environment env(2, 0.5, 23);
  std::vector<std::int64_t> lengths;
  LatticePoint x{0, 3};
  while (!env.site_open(x)) ++x[0];
  for (int k = 0; k < 20000; ++k) {
    const auto e = env.neighbor_along_axis(x, 0, 1);
    lengths.push_back(e.length);
    x = e.other_end();
  }
  CHECK(geometric_gof(lengths, 0.5).p_value > 1e-3);
}

TEST_CASE("pareto mean") {
  // Quantile integral of the sampler against E = a / (a - 1).
  const auto law = ConductanceLaw::shifted_pareto(3.0);
  CHECK(law.mean() == doctest::Approx(1.5));
  double quad = 0.0;
  const int M = 2000000;
  for (int k = 0; k < M; ++k) quad += law.sample((k + 0.5) / M) / M;
  CHECK(quad == doctest::Approx(1.5).epsilon(1e-3));
  CounterStream rng(1);
  double s = 0;
  for (int k = 0; k < 1000000; ++k) s += law.sample(rng.uniform());
  CHECK(std::abs(s / 1e6 / 1.5 - 1.0) < 0.01);
}

TEST_CASE("every law samples in [1, inf)") {
  const ConductanceLaw laws[] = {ConductanceLaw::constant(1.0), ConductanceLaw::shifted_pareto(0.5),
                                 ConductanceLaw::shifted_exponential(3.0), ConductanceLaw::two_point(1.0, 9.0, 0.3)};
  for (const auto& law : laws) {
    CHECK(law.sample(0.0) >= 1.0);
    CounterStream rng(2);
    for (int k = 0; k < 10000; ++k) CHECK(law.sample(rng.uniform()) >= 1.0);
    CHECK(ConductanceLaw::from_json(law.to_json()).name() == law.name());
  }
  CHECK(std::isinf(ConductanceLaw::shifted_pareto(0.8).mean()));
  CHECK_THROWS(ConductanceLaw::constant(0.5).validate());
}

TEST_CASE("total rate is the sum of incident conductances") {
  const Environment env(3, 0.6, 31, ConductanceLaw::shifted_pareto(3.0));
  const Environment root = rooted_environment(env, 4);
  const LatticePoint o = LatticePoint::origin(3);
  REQUIRE(root.site_open(o));
  double s = 0;
  for (int i = 0; i < 3; ++i)
    for (int dir : {-1, 1}) s += root.neighbor_along_axis(o, i, dir).conductance;
  CHECK(root.total_rate(o) == doctest::Approx(s));
  CHECK(root.total_rate(o) >= 6.0);
}

TEST_CASE("rooted environments have the origin open") {
  const Environment env(2, 0.3, 1);
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(rooted_environment(env, s).site_open(LatticePoint::origin(2)));
}

TEST_CASE("bad input is rejected") {
  const Environment env(2, 0.5, 1);
  CHECK_THROWS(env.site_open(LatticePoint{1, 2, 3}));
  CHECK_THROWS(Environment(2, 1.5, 1));
  CHECK_THROWS(Environment(2, 0.0, 1));
  CHECK_THROWS(LatticePoint(5));
}

TEST_CASE("box subgraph invariants") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Environment env(2, 0.6, 100 + s, ConductanceLaw::shifted_pareto(3.0));
    const FiniteGraph g = restrict_to_box(env, LatticePoint{1, -2}, 6);
    std::set<LatticePoint> verts(g.vertices.begin(), g.vertices.end());
    for (const auto& x : g.vertices) {
      CHECK(env.site_open(x));
      CHECK((x - LatticePoint{1, -2}).norm_inf() <= 6);
    }
    for (int v = 0; v < g.num_vertices(); ++v) {
      CHECK(g.degree(v) <= 4);
      CHECK(g.measure(v) == g.degree(v));
    }
    for (const auto& e : g.edges) {
      CHECK(verts.count(g.vertices[e.u]));
      CHECK(verts.count(g.vertices[e.v]));
      CHECK(g.vertices[e.v] - g.vertices[e.u] == e.displacement);
    }
    std::size_t open = 0;
    for (const auto& x : ball_linf(LatticePoint{1, -2}, 6)) open += env.site_open(x) ? 1 : 0;
    CHECK(open == g.vertices.size());
  }
}

TEST_CASE("torus is 2d-regular with period 2n + 1") {
  const Environment env(2, 0.7, 8, ConductanceLaw::shifted_pareto(3.0));
  const FiniteGraph t = periodize(env, 5);
  CHECK(t.periodic);
  CHECK(t.period == 11);
  for (int v = 0; v < t.num_vertices(); ++v) CHECK(t.degree(v) == 4);
  for (const auto& e : t.edges) CHECK(e.displacement.norm1() == e.record.length);
}

}  // TEST_SUITE
