#include <doctest.h>

#include <cmath>

#include "rcm/rng.hpp"
#include "rcm/stats.hpp"

using namespace rcm;

TEST_SUITE("stats") {

TEST_CASE("basic helpers") {
  const double xs[] = {1, 2, 3, 4};
  CHECK(mean_of(xs) == 2.5);
  CHECK(variance_of(xs) == doctest::Approx(5.0 / 3.0));
  const double x[] = {0, 1, 2, 3}, y[] = {1, 3, 5, 7};
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975));
}

TEST_CASE("Kolmogorov p-values") {
  CHECK(kolmogorov_pvalue(0.0, 100) == doctest::Approx(1.0));
  CHECK(kolmogorov_pvalue(0.05, 1000) > kolmogorov_pvalue(0.08, 1000));
  // Large-n limit: P(sqrt(n) D > 1.36) ~ 0.05.
  CHECK(kolmogorov_pvalue(1.358 / std::sqrt(1e6), 1000000) == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("KS test: size and power") {
  CounterStream rng(3);
  std::vector<double> u(5000), shifted(5000);
  for (auto& x : u) x = rng.uniform();
  for (auto& x : shifted) x = std::min(1.0, rng.uniform() + 0.05);
  auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_test(u, cdf).p_value > 1e-3);
  CHECK(ks_test(shifted, cdf).p_value < 1e-6);
}

TEST_CASE("chi-square goodness of fit") {
  const double counts[] = {250, 250, 500};
  const double probs[] = {0.25, 0.25, 0.5};
  const auto r = chi_square_gof(counts, probs);
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
  const double bad[] = {400, 100, 500};
  CHECK(chi_square_gof(bad, probs).p_value < 1e-10);
}

TEST_CASE("geometric goodness of fit") {
  CounterStream rng(4);
  std::vector<std::int64_t> h(20000);
  for (auto& x : h) x = 1 + static_cast<std::int64_t>(std::floor(std::log(rng.open_uniform()) / std::log(0.7)));
  CHECK(geometric_gof(h, 0.3).p_value > 1e-3);
  CHECK(geometric_gof(h, 0.4).p_value < 1e-6);
}

TEST_CASE("diffusion estimate on synthetic Gaussian endpoints") {
  CounterStream rng(5);
  std::vector<LatticePoint> ends;
  const double t = 10.0, s2 = 3.0;
  for (int i = 0; i < 20000; ++i)
    ends.push_back(LatticePoint{std::llround(rng.normal() * std::sqrt(s2 * t)), std::llround(rng.normal() * std::sqrt(s2 * t))});
  const auto est = estimate_diffusion(ends, t);
  CHECK(std::abs(est.sigma2 - s2) < 4 * est.sigma2_se + 0.01);
  CHECK(isotropy_test(est).pass);
  CHECK(gaussianity_ks(ends, est.sigma2, t, 9).min_p_value() > 1e-3);
  // Centering shifts the reference law.
  const double off[] = {3.0, 0.0};
  CHECK(gaussianity_ks(ends, est.sigma2, t, 9, true, off).min_p_value() < 1e-6);
}

TEST_CASE("homogeneous ensemble: sigma^2 = 2 and A(t)/t = 4") {
  const Environment env(2, 1.0, 1);
  const double grid[] = {5.0, 20.0};
  EnsembleConfig cfg;
  cfg.walks = 3000;
  cfg.seed = 2;
  const auto ens = run_ensemble(env, grid, cfg);
  const auto msd = estimate_diffusion_msd(ens, grid);
  for (const auto& m : msd) CHECK(std::abs(m.sigma2 - 2.0) < 4 * m.sigma2_se);
  for (const auto& p : time_change_lln(ens, grid)) CHECK(p.mean == doctest::Approx(4.0));
}

TEST_CASE("ensembles are reproducible across worker counts") {
  const Environment env(2, 0.7, 3, ConductanceLaw::shifted_pareto(3.0));
  const double grid[] = {10.0};
  EnsembleConfig cfg;
  cfg.walks = 200;
  cfg.annealed = true;
  const auto a = run_ensemble(env, grid, cfg);
  cfg.workers = 3;
  const auto b = run_ensemble(env, grid, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].positions == b[i].positions);
}

TEST_CASE("CSRW relation on the homogeneous lattice") {
  const Environment env(2, 1.0, 1);
  const double tv = 20.0, tc = 80.0;
  EnsembleConfig cfg;
  cfg.walks = 4000;
  const double gv[] = {tv}, gc[] = {tc};
  const auto v = run_ensemble(env, gv, cfg);
  cfg.kind = WalkKind::kConstantSpeed;
  cfg.seed = 9;
  const auto c = run_ensemble(env, gc, cfg);
  std::vector<LatticePoint> ve, ce;
  for (const auto& g : v) ve.push_back(g.positions[0]);
  for (const auto& g : c) ce.push_back(g.positions[0]);
  const auto rel = csrw_relation_test(ve, tv, ce, tc, 1.0);
  CHECK(std::abs(rel.ratio - 1.0) < 4 * rel.ratio_se);
}

TEST_CASE("degenerate probe: constant law stays flat") {
  const Environment base(2, 0.7, 4, ConductanceLaw::constant(1.0));
  const double grid[] = {10.0, 50.0};
  const auto pr = degenerate_csrw_probe(base, grid, 1500, 6, 1);
  CHECK(std::abs(pr.csrw_ratio - 1.0) < 0.25);
  CHECK(std::abs(pr.vsrw_ratio - 1.0) < 0.25);
}

}  // TEST_SUITE
