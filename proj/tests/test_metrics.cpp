#include <doctest.h>

#include <cmath>
#include <limits>
#include <queue>

#include "rcm/metrics.hpp"
#include "rcm/rng.hpp"

using namespace rcm;

namespace {

// Plain BFS over the edge list, independent of the adjacency structure.
std::vector<int> naive_hops(const FiniteGraph& g, int s) {
  std::vector<int> d(g.num_vertices(), kUnreachable);
  d[s] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& e : g.edges)
      for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}})
        if (d[a] != kUnreachable && (d[b] == kUnreachable || d[a] + 1 < d[b])) {
          d[b] = d[a] + 1;
          changed = true;
        }
  }
  return d;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hop distance equals l1 distance at p = 1") {
  const Environment env(2, 1.0, 1);
  const FiniteGraph g = restrict_to_box(env, LatticePoint::origin(2), 5);
  const LatticePoint o = LatticePoint::origin(2);
  for (const auto& y : g.vertices) CHECK(graph_distance(g, o, y) == y.norm1());
}

TEST_CASE("BFS agrees with relaxation on random boxes") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Environment env(2, 0.5, 40 + s);
    const FiniteGraph g = restrict_to_box(env, LatticePoint::origin(2), 5);
    if (g.num_vertices() == 0) continue;
    const auto a = bfs_distances(g, 0);
    CHECK(a == naive_hops(g, 0));
    const auto capped = bfs_distances(g, 0, 2);
    for (int v = 0; v < g.num_vertices(); ++v)
      CHECK(capped[v] == (a[v] != kUnreachable && a[v] <= 2 ? a[v] : kUnreachable));
    const auto ball = ball_graph(g, 0, 3);
    for (int v : ball) CHECK(a[v] <= 3);
  }
}

TEST_CASE("multi-source BFS is the minimum over sources") {
  const Environment env(2, 0.6, 3);
  const FiniteGraph g = restrict_to_box(env, LatticePoint::origin(2), 6);
  const std::vector<int> src{0, g.num_vertices() / 2, g.num_vertices() - 1};
  const auto m = bfs_distances(g, src);
  for (int v = 0; v < g.num_vertices(); ++v) {
    int best = kUnreachable;
    for (int s : src) {
      const int d = bfs_distances(g, s)[v];
      if (d != kUnreachable && (best == kUnreachable || d < best)) best = d;
    }
    CHECK(m[v] == best);
  }
}

TEST_CASE("greedy path: size bound, at most d - 1 crossings, ends at 0") {
  for (double p : {0.3, 0.5, 0.8}) {
    for (int d : {2, 3}) {
      const Environment base(d, p, 77, ConductanceLaw::constant(1.0));
      CounterStream rng(static_cast<std::uint64_t>(p * 100) + d);
      for (int k = 0; k < 60; ++k) {
        const Environment env = rooted_environment(base, k);
        LatticePoint x(d);
        do {
          for (int i = 0; i < d; ++i) x[i] = static_cast<std::int64_t>(rng.next_u64() % 31) - 15;
        } while (!env.site_open(x));
        const auto path = greedy_path(env, x);
        CHECK(path.satisfies_size_bound());
        CHECK(path.crossings <= d - 1);
        CHECK(path.l1 == x.norm1());
        CHECK(path.sites.front() == x);
        CHECK(path.sites.back() == LatticePoint::origin(d));
        for (std::size_t i = 1; i < path.sites.size(); ++i) CHECK((path.sites[i] - path.sites[i - 1]).norm1() == 1);
        for (const auto& v : path.vertices) CHECK(env.site_open(v));
      }
    }
  }
}

TEST_CASE("u and v at p = 1") {
  // Hop distance is l1, so B_d(x, m) lies in B_inf(x, m) and B_inf(x, m) in B_d(x, d m).
  const Environment env(2, 1.0, 1);
  const LatticePoint o = LatticePoint::origin(2);
  CHECK(estimate_u(env, o, 1.0, 12).value == 1);
  CHECK(estimate_v(env, o, 2.0, 12).value == 1);
  const auto v = estimate_v(env, o, 1.5, 12);
  CHECK(v.censored);
  CHECK(v.value == 13);
}

TEST_CASE("u and v are monotone in the constants") {
  const Environment base(2, 0.5, 9);
  for (std::uint64_t s = 0; s < 15; ++s) {
    const Environment env = rooted_environment(base, s);
    const LatticePoint o = LatticePoint::origin(2);
    CHECK(estimate_u(env, o, 2.0, 20).value >= estimate_u(env, o, 4.0, 20).value);
    CHECK(estimate_v(env, o, 1.0, 20).value >= estimate_v(env, o, 2.0, 20).value);
  }
}

TEST_CASE("tail curve and fit") {
  std::vector<RadiusEstimate> xs;
  // exceed(n) = 2^(10 - n) exactly
  for (int v = 1; v <= 10; ++v)
    for (int k = 0; k < (1 << (10 - v)); ++k) xs.push_back({v, false});
  xs.push_back({11, false});
  const auto tail = tail_curve(xs, 1, 7);
  for (std::size_t i = 1; i < tail.size(); ++i) CHECK(tail[i].exceed < tail[i - 1].exceed);
  const auto fit = fit_tail(tail);
  CHECK(fit.strictly_decreasing);
  CHECK(fit.all_positive);
  CHECK(fit.slope == doctest::Approx(-std::log(2.0)));
  CHECK(fit.r2 == doctest::Approx(1.0));
}

}  // TEST_SUITE
