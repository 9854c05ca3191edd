#include <doctest.h>

#include <cmath>

#include "rcm/heat_kernel.hpp"

using namespace rcm;

TEST_SUITE("heat_kernel") {

TEST_CASE("two-state chain") {
  const FiniteGraph g = FiniteGraph::from_edges(2, {{0, 1, 1.0}});
  for (double t : {0.0, 0.3, 1.0, 4.0, 12.0}) {
    const auto k = kernel_uniformization(g, 0, t, 1e-15);
    CHECK(std::abs(k.at(g.vertices[0]) - 0.5 * (1 + std::exp(-2 * t))) < 1e-12);
    CHECK(std::abs(k.at(g.vertices[1]) - 0.5 * (1 - std::exp(-2 * t))) < 1e-12);
  }
  // Rate c: the same law at time c t.
  const FiniteGraph g3 = FiniteGraph::from_edges(2, {{0, 1, 3.0}});
  CHECK(std::abs(kernel_uniformization(g3, 0, 0.5, 1e-15).at(g3.vertices[0]) - 0.5 * (1 + std::exp(-3.0))) < 1e-12);
}

TEST_CASE("periodic kernel is stochastic, symmetric and a semigroup") {
  const Environment env(2, 0.7, 6, ConductanceLaw::shifted_pareto(3.0));
  const FiniteGraph t = periodize(env, 2);
  const int n = t.num_vertices();
  const auto K1 = kernel_matrix(t, 0.7);
  const auto K2 = kernel_matrix(t, 0.5);
  const auto K3 = kernel_matrix(t, 1.2);
  for (int x = 0; x < n; ++x) {
    double s = 0;
    for (int y = 0; y < n; ++y) {
      s += K1[x][y];
      CHECK(K1[x][y] >= 0.0);
      CHECK(std::abs(K1[x][y] - K1[y][x]) < 1e-12);
      double prod = 0;
      for (int z = 0; z < n; ++z) prod += K1[x][z] * K2[z][y];
      CHECK(std::abs(prod - K3[x][y]) < 1e-12);
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  const auto row = kernel_uniformization(t, 1, 0.7, 1e-14);
  for (std::size_t i = 0; i < row.targets.size(); ++i)
    CHECK(std::abs(row.p[i] - K1[1][*t.index_of(row.targets[i])]) < 1e-12);
}

TEST_CASE("absorbing kernel loses mass over time") {
  const Environment env = rooted_environment(Environment(2, 0.7, 6, ConductanceLaw::shifted_pareto(3.0)), 2);
  const FiniteGraph box = restrict_to_box(env, LatticePoint::origin(2), 4);
  const int o = *box.index_of(LatticePoint::origin(2));
  double prev = 1.0;
  for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double tot = kernel_uniformization(box, o, t, 1e-14, Boundary::kAbsorbing).total();
    CHECK(tot <= prev + 1e-12);
    prev = tot;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("lifted kernel second moment on the homogeneous torus") {
  // Rate one per direction: E|X_1|^2 = 2 d.
  const FiniteGraph t = periodize(Environment(2, 1.0, 1), 3);
  const auto lk = lifted_kernel(t, 0, 1.0, 2);
  CHECK(lk.second_moment() == doctest::Approx(4.0).epsilon(1e-10));
  double s = lk.escaped;
  for (const auto& e : lk.entries) s += e.p;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lk.escaped < 1e-12);
}

TEST_CASE("Monte Carlo agrees with uniformization") {
  const FiniteGraph t = periodize(Environment(2, 1.0, 5, ConductanceLaw::shifted_pareto(3.0)), 1);
  const auto exact = kernel_uniformization(t, 0, 1.0, 1e-15);
  const auto mc = kernel_monte_carlo(t, 0, 1.0, 20000, 3);
  CHECK(compare_kernels(exact, mc).max_z < 4.0);
  const Environment env = rooted_environment(Environment(2, 0.7, 4), 1);
  const auto m2 = kernel_monte_carlo(env, LatticePoint::origin(2), 1.0, 2000, 8);
  CHECK(m2.total() == doctest::Approx(1.0));
}

TEST_CASE("regime classification") {
  CHECK(classify(2, 9.0) == Regime::kNearDiagonal);
  CHECK(classify(4, 9.0) == Regime::kGaussian);
  CHECK(classify(20, 9.0) == Regime::kExponential);
  CHECK(classify(3, 9.0) == Regime::kNearDiagonal);
}

TEST_CASE("homogeneous torus: uniform bound and near-diagonal lower bound") {
  const FiniteGraph t = periodize(Environment(2, 1.0, 1), 16);
  const int o = *t.index_of(LatticePoint::origin(2));
  std::vector<KernelEstimate> ests;
  for (double s : {2.0, 4.0, 8.0, 16.0}) ests.push_back(kernel_uniformization(t, o, s));
  const auto up = check_uniform_upper(ests, 2);
  CHECK(up.spread < 0.2);
  // Continuum value 1 / (4 pi) for sup p t.
  CHECK(up.scaled_sup.back() == doctest::Approx(1.0 / (4.0 * 3.141592653589793)).epsilon(0.05));
  const auto probes = probes_from(ests, &t);
  const auto nd = check_near_diagonal_lower(probes, 2);
  CHECK(nd.c8 > 0.0);
  const auto g = check_gaussian_upper(probes, 2, {0.05, 0.1});
  CHECK(g.c4.size() == 2);
  CHECK(g.c4[0] <= g.c4[1]);
}

TEST_CASE("U estimate") {
  const Environment env = rooted_environment(Environment(2, 0.7, 3, ConductanceLaw::shifted_pareto(3.0)), 1);
  UProbeConfig cfg;
  cfg.box_radius = 10;
  cfg.c4 = 1e6;
  CHECK(estimate_U(env, LatticePoint::origin(2), cfg).value == 1);
  cfg.c4 = 1e-6;
  CHECK(estimate_U(env, LatticePoint::origin(2), cfg).value > 1);
}

}  // TEST_SUITE
