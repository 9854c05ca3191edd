#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rcm/isoperimetry.hpp"
#include "rcm/rng.hpp"

using namespace rcm;

namespace {

FiniteGraph cycle(int n) {
  std::vector<FiniteGraph::SimpleEdge> es;
  for (int i = 0; i < n; ++i) es.push_back({i, (i + 1) % n, 1.0});
  return FiniteGraph::from_edges(n, es);
}

FiniteGraph complete(int n) {
  std::vector<FiniteGraph::SimpleEdge> es;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) es.push_back({i, j, 1.0});
  return FiniteGraph::from_edges(n, es);
}

FiniteGraph path(int n) {
  std::vector<FiniteGraph::SimpleEdge> es;
  for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1.0});
  return FiniteGraph::from_edges(n, es);
}

FiniteGraph random_graph(CounterStream& rng, int n, double q) {
  std::vector<FiniteGraph::SimpleEdge> es;
  for (int i = 1; i < n; ++i) es.push_back({i, static_cast<int>(rng.next_u64() % i), 1.0});  // spanning tree
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < q) es.push_back({i, j, 1.0});
  return FiniteGraph::from_edges(n, es);
}

}  // namespace

TEST_SUITE("isoperimetry") {

TEST_CASE("closed forms for cycles and complete graphs") {
  for (int n : {4, 6, 10, 16}) CHECK(isoperimetric_constant(cycle(n)).value == doctest::Approx(2.0 / n));
  for (int n : {3, 4, 7, 12}) {
    const int k = n / 2;
    CHECK(isoperimetric_constant(complete(n)).value == doctest::Approx(double(n - k) / (n - 1)));
  }
}

TEST_CASE("disconnected graphs") {
  // Two triangles: a component is a zero cut.
  const FiniteGraph g = FiniteGraph::from_edges(6, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}, {3, 4, 1}, {4, 5, 1}, {5, 3, 1}});
  const auto r = isoperimetric_constant(g);
  CHECK(r.value == 0.0);
  CHECK_FALSE(r.connected);
  // An isolated vertex has no mass and cannot serve as a zero cut; the best
  // cut is an edge of the triangle, 2 / 4.
  const FiniteGraph h = FiniteGraph::from_edges(4, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
  CHECK(isoperimetric_constant(h).value == doctest::Approx(0.5));
}

TEST_CASE("exhaustive search is capped") { CHECK_THROWS_AS(isoperimetric_constant(cycle(30)), ResourceError); }

TEST_CASE("Cheeger bounds bracket the exact constant") {
  CounterStream rng(4);
  for (int k = 0; k < 40; ++k) {
    const int n = 6 + static_cast<int>(rng.next_u64() % 11);
    const auto g = random_graph(rng, n, 0.2);
    const double exact = isoperimetric_constant(g).value;
    const auto b = cheeger_bounds(g);
    CHECK(b.lower <= exact + 1e-12);
    CHECK(b.upper >= exact - 1e-12);
    CHECK(b.spectral_lower <= exact + 1e-12);
    CHECK(b.flow_lower <= exact + 1e-12);
  }
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Environment env(2, 0.7, 300 + s, ConductanceLaw::constant(1.0));
    const FiniteGraph g = restrict_to_box(env, LatticePoint::origin(2), 2);
    if (g.num_vertices() > 22 || !g.is_connected()) continue;
    const double exact = isoperimetric_constant(g).value;
    const auto b = cheeger_bounds(g);
    CHECK(b.lower <= exact + 1e-12);
    CHECK(b.upper >= exact - 1e-12);
  }
}

TEST_CASE("edge congestion on a path") {
  // Edge (k, k+1) carries the k+1 by n-k-1 pairs that straddle it.
  const int n = 9;
  const auto load = edge_congestion(path(n));
  for (int k = 0; k + 1 < n; ++k) CHECK(load[k] == doctest::Approx((k + 1.0) * (n - k - 1.0)));
  // Even cycle: each pair split over two geodesics when antipodal.
  const auto c = edge_congestion(cycle(6));
  double total = 0;
  for (double l : c) total += l;
  CHECK(total == doctest::Approx(27.0));  // sum of pairwise distances on C6
}

TEST_CASE("Loomis-Whitney on random sets") {
  CounterStream rng(12);
  for (int k = 0; k < 100; ++k) {
    const int d = 2 + static_cast<int>(rng.next_u64() % 2);
    std::vector<LatticePoint> A;
    const int m = 1 + static_cast<int>(rng.next_u64() % 40);
    for (int i = 0; i < m; ++i) {
      LatticePoint x(d);
      for (int j = 0; j < d; ++j) x[j] = static_cast<std::int64_t>(rng.next_u64() % 5);
      A.push_back(x);
    }
    std::sort(A.begin(), A.end());
    A.erase(std::unique(A.begin(), A.end()), A.end());
    CHECK(loomis_whitney_check(A, d).holds);
  }
  // A full cube is the extremal case.
  const auto cube = ball_linf(LatticePoint::origin(2), 3);
  const auto lw = loomis_whitney_check(cube, 2);
  CHECK(lw.lhs == doctest::Approx(lw.rhs));
}

TEST_CASE("parallel line count") {
  CHECK(default_parallel_lines(0.5) == 2);
  CHECK(default_parallel_lines(0.75) == 1);
  CHECK(default_parallel_lines(0.1) == static_cast<int>(std::ceil(std::log(4.0) / -std::log(0.9))));
  const Environment env(2, 1.0, 1);
  const auto d = lemma3_densities(env, 10, 1);
  CHECK(d.min_line == 1.0);
  CHECK(d.line_violations == 0);
  CHECK(d.projection_violations == 0);
}

TEST_CASE("Poincare constant: cycle closed form, dense vs iterative") {
  const int n = 12;
  const auto r = poincare_constant(cycle(n));
  // L f = lambda m f with m = 2: lambda_2 = 1 - cos(2 pi / n).
  CHECK(r.lambda2 == doctest::Approx(1.0 - std::cos(2.0 * std::numbers::pi / n)));
  CHECK(r.variational == doctest::Approx(r.C));
  CHECK(poincare_constant_iterative(cycle(n)) == doctest::Approx(r.C).epsilon(1e-6));
  CounterStream rng(8);
  for (int k = 0; k < 10; ++k) {
    const auto g = random_graph(rng, 12, 0.15);
    std::vector<double> w(g.num_edges());
    for (auto& x : w) x = 0.5 + rng.uniform();
    std::vector<double> m(g.num_vertices());
    for (auto& x : m) x = 0.5 + rng.uniform();
    const auto dense = poincare_constant(g, w, m);
    CHECK(poincare_constant_iterative(g, w, m) == doctest::Approx(dense.C).epsilon(1e-6));
    CHECK(dense.variational == doctest::Approx(dense.C).epsilon(1e-9));
  }
}

TEST_CASE("weighted ball cutoff") {
  const Environment base(2, 0.7, 3, ConductanceLaw::shifted_pareto(3.0));
  const Environment env = rooted_environment(base, 1);
  const auto wb = weighted_ball(env, LatticePoint::origin(2), 4, 20);
  const int o = *wb.ball.index_of(LatticePoint::origin(2));
  CHECK(wb.phi[o] == doctest::Approx(1.0));
  for (double p : wb.phi) {
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
  CHECK_THROWS_AS(weighted_ball(env, LatticePoint::origin(2), 10, 3), TruncationError);
  const auto rep = weighted_poincare_check(env, LatticePoint::origin(2), 4);
  CHECK(rep.C > 0.0);
  CHECK(rep.weights == "phi");
}

TEST_CASE("Nash ratio is scale invariant and positive") {
  const Environment env(2, 0.8, 5);
  const FiniteGraph g = restrict_to_box(env, LatticePoint::origin(2), 5);
  CounterStream rng(2);
  std::vector<double> f(g.num_vertices());
  for (auto& x : f) x = rng.uniform() - 0.3;
  std::vector<double> f3 = f;
  for (auto& x : f3) x *= 3.0;
  CHECK(nash_ratio(g, f3) == doctest::Approx(nash_ratio(g, f)));
  const auto w = nash_constant_witness(g, 20, 1);
  CHECK(w.min_ratio > 0.0);
  CHECK(w.probes > 0);
}

}  // TEST_SUITE
