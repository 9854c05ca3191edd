// Acceptance harness: one PASS/FAIL line per criterion, tolerances pinned below.
// Each criterion also has a wall-clock budget that counts toward its verdict.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rcm/corrector.hpp"
#include "rcm/environment.hpp"
#include "rcm/experiments.hpp"
#include "rcm/fpp.hpp"
#include "rcm/heat_kernel.hpp"
#include "rcm/io.hpp"
#include "rcm/isoperimetry.hpp"
#include "rcm/metrics.hpp"
#include "rcm/rng.hpp"
#include "rcm/stats.hpp"
#include "rcm/walk.hpp"

namespace fs = std::filesystem;
using namespace rcm;
using io::fmt_double;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> run;
};

int g_workers = 1;
fs::path g_out = "acceptance_out";

std::string f3(double x) {
  std::ostringstream o;
  o.precision(4);
  o << x;
  return o.str();
}

Environment env2(double p, ConductanceLaw law, std::uint64_t seed) { return Environment(2, p, seed, law); }

// ---------------------------------------------------------------------------
// 1. homogeneous VSRW

constexpr double kC1Lo = 1.9, kC1Hi = 2.1;

Verdict c1() {
  const Environment env = env2(1.0, ConductanceLaw::constant(1.0), 11);
  const double grid[] = {50.0};
  EnsembleConfig cfg;
  cfg.walks = 10000;
  cfg.seed = 101;
  cfg.workers = g_workers;
  const auto ens = run_ensemble(env, grid, cfg);
  const auto est = estimate_diffusion_msd(ens, grid).front();
  io::CsvTable t({"t", "sigma2", "se", "cov00", "cov01", "cov11"});
  t.row({fmt_double(est.t), fmt_double(est.sigma2), fmt_double(est.sigma2_se), fmt_double(est.at(0, 0)),
         fmt_double(est.at(0, 1)), fmt_double(est.at(1, 1))});
  t.write(g_out / "c01_homogeneous.csv");
  return {est.sigma2 >= kC1Lo && est.sigma2 <= kC1Hi,
          "sigma_v^2 = " + f3(est.sigma2) + " +- " + f3(est.sigma2_se) + " (want [1.9, 2.1])"};
}

// ---------------------------------------------------------------------------
// 2. CSRW relation

constexpr double kC2Tol = 0.1;

Verdict c2() {
  struct Case {
    double p;
    ConductanceLaw law;
  };
  const Case cases[] = {{1.0, ConductanceLaw::constant(1.0)},
                        {1.0, ConductanceLaw::shifted_pareto(3.0)},
                        {0.7, ConductanceLaw::constant(1.0)},
                        {0.7, ConductanceLaw::shifted_pareto(3.0)}};
  const double tv = 50.0;
  bool pass = true;
  std::string detail;
  io::CsvTable t({"p", "law", "t_v", "t_c", "sigma_v2", "sigma_c2", "ratio", "ratio_se"});
  std::uint64_t k = 0;
  for (const auto& cs : cases) {
    const Environment env = env2(cs.p, cs.law, 200 + k);
    const double mu = cs.law.mean();
    const double tc = 2.0 * 2 * mu * tv;
    EnsembleConfig cfg;
    cfg.walks = 10000;
    cfg.annealed = true;
    cfg.workers = g_workers;
    cfg.seed = 300 + k;
    const double gv[] = {tv};
    const double gc[] = {tc};
    const auto v = run_ensemble(env, gv, cfg);
    cfg.kind = WalkKind::kConstantSpeed;
    cfg.seed = 400 + k;
    const auto c = run_ensemble(env, gc, cfg);
    std::vector<LatticePoint> ve, ce;
    for (const auto& g : v) ve.push_back(g.positions[0]);
    for (const auto& g : c) ce.push_back(g.positions[0]);
    const auto rel = csrw_relation_test(ve, tv, ce, tc, mu);
    t.row({fmt_double(cs.p), cs.law.name(), fmt_double(tv), fmt_double(tc), fmt_double(rel.sigma_v2),
           fmt_double(rel.sigma_c2), fmt_double(rel.ratio), fmt_double(rel.ratio_se)});
    const bool ok = std::abs(rel.ratio - 1.0) <= kC2Tol;
    pass = pass && ok;
    detail += (k ? ", " : "") + std::string("p=") + f3(cs.p) + " " + cs.law.name() + ": " + f3(rel.ratio);
    ++k;
  }
  t.write(g_out / "c02_csrw_relation.csv");
  return {pass, "ratios " + detail + " (want [0.9, 1.1])"};
}

// ---------------------------------------------------------------------------
// 3 and 4. Corrector exactness and harmonicity. Residuals of every solve made
// in criterion 3 feed criterion 4.

constexpr double kHomogeneousTol = 1e-10;
constexpr double kRingTol = 1e-8;
constexpr double kPythagorasTol = 1e-6;
constexpr double kResidualTol = 1e-8;
constexpr double kMartingaleTol = 1e-8;

double g_worst_residual = 0.0;
std::size_t g_solves = 0;

void note_solve(const CorrectorField& f) {
  g_worst_residual = std::max(g_worst_residual, f.residual);
  ++g_solves;
}

Verdict c3() {
  io::CsvTable t({"case", "seed", "vertices", "value"});
  // Homogeneous lattice: phi is already harmonic.
  const FiniteGraph hom = periodize(env2(1.0, ConductanceLaw::constant(1.0), 1), 5);
  const auto fh = solve_corrector(generator_problem(hom));
  note_solve(fh);
  const auto fh1 = solve_corrector(time_one_problem(hom, 2));
  note_solve(fh1);
  const double hom_norm = std::max(fh.norm_chi, fh1.norm_chi);
  t.row({"homogeneous", "1", std::to_string(hom.num_vertices()), fmt_double(hom_norm)});

  // d = 1 rings against series resistance.
  double ring_err = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Environment env(1, 0.7, 500 + s, ConductanceLaw::shifted_pareto(3.0));
    FiniteGraph ring;
    try {
      ring = periodize(env, 4 + static_cast<std::int64_t>(s % 5));
    } catch (const PeriodizeError&) {
      continue;
    }
    const auto prob = generator_problem(ring);
    const auto f = solve_corrector(prob);
    note_solve(f);
    double inv = 0.0;
    for (const auto& e : ring.edges) inv += 1.0 / e.record.conductance;
    const double P = static_cast<double>(ring.period);
    double err = 0.0;
    for (const auto& e : ring.edges) {
      const double disp = static_cast<double>(e.displacement[0]);
      const double dpsi = disp + f.at(e.v, 0) - f.at(e.u, 0);
      const double expect = (disp > 0 ? 1.0 : -1.0) * P / (e.record.conductance * inv);
      err = std::max(err, std::abs(dpsi - expect));
    }
    ring_err = std::max(ring_err, err);
    t.row({"ring", std::to_string(500 + s), std::to_string(ring.num_vertices()), fmt_double(err)});
  }

  // Pythagoras on random disordered tori, both conventions.
  double pyth = 0.0;
  CounterStream rng(9090);
  int done = 0;
  for (std::uint64_t s = 0; done < 50; ++s) {
    const double p = rng.uniform() < 0.5 ? 0.7 : 0.85;
    const ConductanceLaw law = (s % 2) ? ConductanceLaw::shifted_pareto(3.0) : ConductanceLaw::two_point(1.0, 20.0, 0.5);
    const std::int64_t n = 3 + static_cast<std::int64_t>(rng.next_u64() % 4);
    FiniteGraph torus;
    try {
      torus = periodize(env2(p, law, 7000 + s), n);
    } catch (const PeriodizeError&) {
      continue;
    }
    if (!torus.is_connected()) continue;
    const bool one = s % 5 == 0;
    const auto f = solve_corrector(one ? time_one_problem(torus, 2) : generator_problem(torus));
    note_solve(f);
    pyth = std::max(pyth, f.pythagoras_error());
    t.row({one ? "pythagoras_time_one" : "pythagoras_generator", std::to_string(7000 + s),
           std::to_string(torus.num_vertices()), fmt_double(f.pythagoras_error())});
    ++done;
  }
  t.write(g_out / "c03_corrector.csv");
  const bool pass = hom_norm < kHomogeneousTol && ring_err < kRingTol && pyth < kPythagorasTol;
  return {pass, "homogeneous |grad chi|^2 = " + f3(hom_norm) + ", ring error = " + f3(ring_err) +
                    ", Pythagoras error = " + f3(pyth) + " over 50 solves"};
}

Verdict c4() {
  // 5-site ring (d = 1, n = 2) with disordered conductances.
  const Environment env(1, 1.0, 41, ConductanceLaw::shifted_pareto(3.0));
  const FiniteGraph ring = periodize(env, 2);
  const int window = 8;
  const auto prob = time_one_problem(ring, window);
  const auto f = solve_corrector(prob);
  note_solve(f);
  const auto mk = martingale_check_kernel(ring, f, kMartingaleTol, window);
  // And a 2d torus for good measure.
  const FiniteGraph torus = periodize(env2(0.7, ConductanceLaw::shifted_pareto(3.0), 42), 4);
  const auto p2 = time_one_problem(torus, 3);
  const auto f2 = solve_corrector(p2);
  note_solve(f2);
  const auto mk2 = martingale_check_kernel(torus, f2, kMartingaleTol, 3);
  io::CsvTable t({"graph", "vertices", "escaped", "max_abs_mean", "residual"});
  t.row({"ring5", std::to_string(ring.num_vertices()), fmt_double(prob.escaped), fmt_double(mk.max_abs_mean),
         fmt_double(f.residual)});
  t.row({"torus9x9", std::to_string(torus.num_vertices()), fmt_double(p2.escaped), fmt_double(mk2.max_abs_mean),
         fmt_double(f2.residual)});
  t.write(g_out / "c04_harmonicity.csv");
  const bool pass = g_worst_residual <= kResidualTol && mk.pass && mk2.pass;
  return {pass, "worst residual " + f3(g_worst_residual) + " over " + std::to_string(g_solves) +
                    " solves; kernel martingale mean " + f3(mk.max_abs_mean) + " (5-site ring), " +
                    f3(mk2.max_abs_mean) + " (2d torus)"};
}

// ---------------------------------------------------------------------------
// 5. heat kernel

constexpr double kSpreadTol = 0.10;
constexpr double kTwoStateTol = 1e-10;
constexpr double kMcZ = 4.0;

Verdict c5() {
  const FiniteGraph torus = periodize(env2(1.0, ConductanceLaw::constant(1.0), 1), 32);
  const int o = *torus.index_of(LatticePoint::origin(2));
  std::vector<KernelEstimate> ests;
  for (double t : {4.0, 8.0, 16.0, 32.0, 64.0}) ests.push_back(kernel_uniformization(torus, o, t));
  const auto up = check_uniform_upper(ests, 2);
  io::CsvTable t({"t", "scaled_sup"});
  for (std::size_t i = 0; i < up.times.size(); ++i) t.row({fmt_double(up.times[i]), fmt_double(up.scaled_sup[i])});
  t.write(g_out / "c05_sup.csv");

  const FiniteGraph two = FiniteGraph::from_edges(2, {{0, 1, 1.0}});
  double two_err = 0.0;
  for (double s : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const auto k = kernel_uniformization(two, 0, s, 1e-15);
    two_err = std::max(two_err, std::abs(k.at(two.vertices[0]) - 0.5 * (1.0 + std::exp(-2.0 * s))));
    two_err = std::max(two_err, std::abs(k.at(two.vertices[1]) - 0.5 * (1.0 - std::exp(-2.0 * s))));
  }

  const FiniteGraph small = periodize(env2(1.0, ConductanceLaw::shifted_pareto(3.0), 5), 1);
  const auto exact = kernel_uniformization(small, 0, 1.0, 1e-15);
  const auto mc = kernel_monte_carlo(small, 0, 1.0, 100000, 55, g_workers);
  const auto ag = compare_kernels(exact, mc);
  io::CsvTable m({"target", "exact", "mc"});
  for (std::size_t i = 0; i < exact.targets.size(); ++i)
    m.row({std::to_string(i), fmt_double(exact.p[i]), fmt_double(mc.at(exact.targets[i]))});
  m.write(g_out / "c05_mc.csv");
  const bool pass = up.spread <= kSpreadTol && two_err <= kTwoStateTol && ag.max_z < kMcZ;
  return {pass, "sup spread " + f3(up.spread) + " over t in [4, 64], two-state error " + f3(two_err) +
                    ", MC max z " + f3(ag.max_z) + " over " + std::to_string(ag.entries) + " entries"};
}

// ---------------------------------------------------------------------------
// 6. oracle equivalences

double brute_iso(const FiniteGraph& g) {
  const int n = g.num_vertices();
  std::vector<std::uint32_t> nb1(n, 0), nb2(n, 0);  // neighbor masks, second layer for parallel edges
  std::vector<double> deg(n);
  for (int v = 0; v < n; ++v) deg[v] = g.measure(v);
  for (const auto& e : g.edges) {
    if (e.u == e.v) continue;
    for (auto [a, b] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      const std::uint32_t bit = 1u << b;
      if (nb1[a] & bit) nb2[a] |= bit;
      else nb1[a] |= bit;
    }
  }
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  for (std::uint32_t A = 1; A <= full && A != 0; ++A) {
    if (std::popcount(A) > n / 2) continue;
    double b = 0, m = 0;
    for (std::uint32_t r = A; r; r &= r - 1) {
      const int v = std::countr_zero(r);
      b += std::popcount(nb1[v] & ~A) + std::popcount(nb2[v] & ~A);
      m += deg[v];
    }
    if (m > 0) best = std::min(best, b / m);
  }
  return best;
}

Verdict c6() {
  CounterStream rng(6060);
  std::size_t hop_bad = 0, fpp_bad = 0, iso_bad = 0, dom_bad = 0, pairs = 0;
  io::CsvTable t({"instance", "kind", "vertices", "edges", "iso", "iso_brute"});
  for (int inst = 0; inst < 500; ++inst) {
    FiniteGraph g;
    std::string kind;
    if (inst % 2 == 0) {
      kind = "random";
      const int n = 8 + static_cast<int>(rng.next_u64() % 15);
      const double q = 0.1 + 0.3 * rng.uniform();
      std::vector<FiniteGraph::SimpleEdge> es;
      std::vector<int> deg(n, 0);
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (rng.uniform() < q) {
            es.push_back({u, v, ConductanceLaw::shifted_pareto(2.0).sample(rng.uniform())});
            ++deg[u], ++deg[v];
          }
      for (int u = 0; u < n; ++u)
        if (deg[u] == 0) {
          const int v = (u + 1 + static_cast<int>(rng.next_u64() % (n - 1))) % n;
          es.push_back({u, v, 1.0 + rng.uniform()});
          ++deg[u], ++deg[v];
        }
      g = FiniteGraph::from_edges(n, es);
    } else {
      kind = "box";
      for (std::uint64_t s = 0;; ++s) {
        const int d = 2 + static_cast<int>(rng.next_u64() % 2);
        const double p = 0.4 + 0.5 * rng.uniform();
        const Environment env(d, p, 60000 + inst * 100 + s, ConductanceLaw::shifted_pareto(3.0));
        g = restrict_to_box(env, LatticePoint::origin(d), d == 2 ? 2 : 1);
        if (g.num_vertices() >= 8 && g.num_vertices() <= 22) break;
      }
    }
    const int n = g.num_vertices();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> hop(n, std::vector<double>(n, inf)), fw(n, std::vector<double>(n, inf));
    for (int v = 0; v < n; ++v) hop[v][v] = fw[v][v] = 0.0;
    for (const auto& e : g.edges) {
      if (e.u == e.v) continue;
      const double w = 1.0 / std::sqrt(e.record.conductance);
      hop[e.u][e.v] = hop[e.v][e.u] = 1.0;
      fw[e.u][e.v] = fw[e.v][e.u] = std::min(fw[e.u][e.v], w);
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          hop[i][j] = std::min(hop[i][j], hop[i][k] + hop[k][j]);
          fw[i][j] = std::min(fw[i][j], fw[i][k] + fw[k][j]);
        }
    for (int x = 0; x < n; ++x) {
      const auto tree = fpp_tree(g, x);
      for (int y = 0; y < n; ++y) {
        const int h = graph_distance(g, x, y);
        const double hd = h == kUnreachable ? inf : static_cast<double>(h);
        if (hd != hop[x][y]) ++hop_bad;
        const double f = tree.dist[y];
        if (std::isinf(f) != std::isinf(fw[x][y]) ||
            (std::isfinite(f) && std::abs(f - fw[x][y]) > 1e-12 * std::max(1.0, fw[x][y])))
          ++fpp_bad;
        if (x == 0 && std::isfinite(f) && fpp_distance(g, x, y) != f) ++fpp_bad;
        if (std::isfinite(hd) && f > hd + 1e-12) ++dom_bad;
        ++pairs;
      }
    }
    const double iso = isoperimetric_constant(g).value;
    const double brute = brute_iso(g);
    if (std::abs(iso - brute) > 1e-12) ++iso_bad;
    t.row({std::to_string(inst), kind, std::to_string(n), std::to_string(g.num_edges()), fmt_double(iso),
           fmt_double(brute)});
  }
  t.write(g_out / "c06_oracles.csv");
  // The FPP study asserts d^f <= d_omega internally and throws on a violation.
  const auto st = estimate_C2(env2(0.7, ConductanceLaw::shifted_pareto(3.0), 66), {2, 4, 6}, {0.5, 1.0, 2.0}, 10, 67,
                              3.0, 8, g_workers);
  const bool pass = hop_bad == 0 && fpp_bad == 0 && iso_bad == 0 && dom_bad == 0;
  return {pass, "mismatches hop " + std::to_string(hop_bad) + ", fpp " + std::to_string(fpp_bad) + ", iso " +
                    std::to_string(iso_bad) + " on 500 instances; d^f > d_omega on " + std::to_string(dom_bad) +
                    " of " + std::to_string(pairs + st.domination_checks) + " pairs"};
}

// ---------------------------------------------------------------------------
// 7. distributional marginals

constexpr double kGofP = 1e-3;

Verdict c7() {
  const std::size_t N = 100000;
  const Environment env = env2(0.5, ConductanceLaw::shifted_pareto(3.0), 707);
  // Site density over a 317 x 317 block (~1e5 sites).
  double open = 0;
  std::size_t sites = 0;
  for (std::int64_t a = 0; a < 317; ++a)
    for (std::int64_t b = 0; b < 317; ++b, ++sites) open += env.site_open(LatticePoint{a, b}) ? 1 : 0;
  const double counts[] = {open, static_cast<double>(sites) - open};
  const double probs[] = {0.5, 0.5};
  const auto r_site = chi_square_gof(counts, probs);
  // Edge lengths: fresh queries from the open sites along distinct rows.
  std::vector<std::int64_t> lengths;
  for (std::int64_t row = 0; lengths.size() < N; ++row) {
    LatticePoint x{0, 100000 + row};
    while (!env.site_open(x)) ++x[0];
    for (int k = 0; k < 100 && lengths.size() < N; ++k) {
      const auto e = env.neighbor_along_axis(x, 0, 1);
      lengths.push_back(e.length);
      x = e.other_end();
    }
  }
  const auto r_len = geometric_gof(lengths, 0.5);
  // First holding times at the origin of one rooted environment.
  const Environment root = rooted_environment(env, 1);
  const LatticePoint o = LatticePoint::origin(2);
  const double mu = root.total_rate(o);
  std::vector<double> holds(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto tr = simulate_vsrw(root, o, 50.0 / mu, derive_seed(77, i));
    holds[i] = tr.jumps() > 0 ? tr.times[1] : tr.horizon;
  }
  const auto r_hold = ks_test(holds, [mu](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-mu * x); });
  io::CsvTable t({"test", "statistic", "p_value", "n"});
  t.row({"site_density", fmt_double(r_site.statistic), fmt_double(r_site.p_value), std::to_string(sites)});
  t.row({"edge_length", fmt_double(r_len.statistic), fmt_double(r_len.p_value), std::to_string(N)});
  t.row({"holding_time", fmt_double(r_hold.statistic), fmt_double(r_hold.p_value), std::to_string(N)});
  t.write(g_out / "c07_marginals.csv");
  const bool pass = r_site.p_value > kGofP && r_len.p_value > kGofP && r_hold.p_value > kGofP;
  return {pass, "p-values: site " + f3(r_site.p_value) + ", length " + f3(r_len.p_value) + ", holding " +
                    f3(r_hold.p_value) + " (want > 1e-3)"};
}

// ---------------------------------------------------------------------------
// 8. metric comparison tails

constexpr double kC8C0 = 3.9;
constexpr double kC8C1 = 1.0;
constexpr double kC8MinR2 = 0.8;

Verdict c8() {
  const Environment env = env2(0.5, ConductanceLaw::shifted_pareto(3.0), 2024);
  const auto st = comparison_study(env, kC8C0, kC8C1, 40, 200, 777, 2, 10, g_workers);
  io::CsvTable t({"n", "u_exceed", "u_prob", "v_exceed", "v_prob"});
  for (std::size_t i = 0; i < st.u_tail.size(); ++i)
    t.row({std::to_string(st.u_tail[i].n), std::to_string(st.u_tail[i].exceed), fmt_double(st.u_tail[i].prob),
           std::to_string(st.v_tail[i].exceed), fmt_double(st.v_tail[i].prob)});
  t.write(g_out / "c08_tails.csv");
  auto ok = [](const TailFit& f) { return f.strictly_decreasing && f.all_positive && f.slope < 0 && f.r2 >= kC8MinR2; };
  return {ok(st.u_fit) && ok(st.v_fit), "u: slope " + f3(st.u_fit.slope) + " R^2 " + f3(st.u_fit.r2) +
                                            (st.u_fit.strictly_decreasing ? " strictly decreasing" : " NOT decreasing") +
                                            "; v: slope " + f3(st.v_fit.slope) + " R^2 " + f3(st.v_fit.r2) +
                                            (st.v_fit.strictly_decreasing ? " strictly decreasing" : " NOT decreasing")};
}

// ---------------------------------------------------------------------------
// 9. isoperimetric scaling

constexpr double kC9MinFloor = 0.05;
constexpr double kC9MinSlope = -0.25;
constexpr double kC9PoincareSlope = 0.25;

Verdict c9() {
  const std::vector<std::int64_t> radii{2, 4, 6, 8, 10, 12, 14, 16};
  io::CsvTable t({"p", "n", "ensemble_min", "excluded"});
  bool pass = true;
  std::string detail;
  for (double p : {0.7, 1.0}) {
    const Environment env = env2(p, ConductanceLaw::shifted_pareto(3.0), 909);
    const auto rep = check_lemma5_scaling(env, radii, p < 1 ? 10 : 1, 919, g_workers);
    for (std::size_t i = 0; i < radii.size(); ++i)
      t.row({fmt_double(p), std::to_string(radii[i]), fmt_double(rep.ensemble_min[i]),
             std::to_string(rep.excluded[i])});
    const double floor = *std::min_element(rep.ensemble_min.begin(), rep.ensemble_min.end());
    pass = pass && floor >= kC9MinFloor && rep.log_slope >= kC9MinSlope;
    detail += "p=" + f3(p) + ": min n*lower " + f3(floor) + ", slope " + f3(rep.log_slope) + "; ";
  }
  t.write(g_out / "c09_cheeger.csv");
  io::CsvTable pt({"p", "n", "C_over_n2"});
  for (double p : {0.7, 1.0}) {
    const Environment env = env2(p, ConductanceLaw::shifted_pareto(3.0), 929);
    std::vector<double> ln, lc;
    for (std::int64_t n = 2; n <= 12; n += 2) {
      double worst = 0;
      for (std::uint64_t e = 0; e < (p < 1 ? 4u : 1u); ++e) {
        const Environment r = rooted_environment(env, derive_seed(939, e));
        worst = std::max(worst, weighted_poincare_check(r, LatticePoint::origin(2), n).C_over_n2());
      }
      pt.row({fmt_double(p), std::to_string(n), fmt_double(worst)});
      ln.push_back(std::log(static_cast<double>(n)));
      lc.push_back(std::log(worst));
    }
    const double slope = linear_fit(ln, lc).slope;
    pass = pass && slope <= kC9PoincareSlope;
    detail += "p=" + f3(p) + ": C_w/n^2 slope " + f3(slope) + "; ";
  }
  pt.write(g_out / "c09_poincare.csv");
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 10. CLT panel

constexpr double kC10Z = 3.0;
constexpr double kC10KsP = 1e-3;
constexpr double kC10Agree = 0.10;

Verdict c10() {
  const Environment base = env2(0.7, ConductanceLaw::shifted_pareto(3.0), 1010);
  const double grid[] = {100.0};
  EnsembleConfig cfg;
  cfg.walks = 10000;
  cfg.seed = 1011;
  cfg.workers = g_workers;
  const auto ens = run_ensemble(base, grid, cfg);
  const auto est = estimate_diffusion_msd(ens, grid).front();
  const auto iso = isotropy_test(est, kC10Z);
  std::vector<LatticePoint> ends;
  for (const auto& g : ens) ends.push_back(g.positions[0]);
  const auto raw = gaussianity_ks(ends, est.sigma2, est.t, 1012);
  // In one environment E X_t -> chi(0) (martingale decomposition), an O(1) offset
  // that KS at N = 1e4 resolves. Predict it from the corrector on a large torus.
  const Environment quenched = rooted_environment(base, cfg.seed);
  const FiniteGraph big = periodize(quenched, 45);
  const auto chi = solve_corrector(generator_problem(big));
  const int o = *big.index_of(LatticePoint::origin(2));
  const double center[] = {chi.at(o, 0), chi.at(o, 1)};
  const auto ks = gaussianity_ks(ends, est.sigma2, est.t, 1012, true, center);
  const auto sig = sigma_v_from_corrector(base, {10}, 16, 1013, true, g_workers);
  const auto& sm = sig.summary.front();
  const double rel = std::abs(sm.generator_mean / est.sigma2 - 1.0);
  const double rel1 = std::abs(sm.time_one_mean / est.sigma2 - 1.0);
  io::CsvTable t({"quantity", "value", "se"});
  t.row({"msd_sigma2", fmt_double(est.sigma2), fmt_double(est.sigma2_se)});
  t.row({"corrector_generator", fmt_double(sm.generator_mean), fmt_double(sm.generator_se)});
  t.row({"corrector_time_one", fmt_double(sm.time_one_mean), fmt_double(sm.time_one_se)});
  t.row({"isotropy_diag_z", fmt_double(iso.max_diag_z), ""});
  t.row({"isotropy_offdiag_z", fmt_double(iso.max_offdiag_z), ""});
  double mean[2] = {0, 0};
  for (const auto& x : ends)
    for (int i = 0; i < 2; ++i) mean[i] += static_cast<double>(x[i]) / static_cast<double>(ends.size());
  for (std::size_t i = 0; i < ks.p_value.size(); ++i) {
    t.row({"mean_" + std::to_string(i), fmt_double(mean[i]), fmt_double(std::sqrt(est.sigma2 * est.t / ends.size()))});
    t.row({"chi0_" + std::to_string(i), fmt_double(center[i]), ""});
    t.row({"ks_p_centered_" + std::to_string(i), fmt_double(ks.p_value[i]), ""});
    t.row({"ks_p_uncentered_" + std::to_string(i), fmt_double(raw.p_value[i]), ""});
  }
  t.write(g_out / "c10_clt.csv");
  const bool pass = iso.pass && ks.min_p_value() > kC10KsP && rel <= kC10Agree && rel1 <= kC10Agree;
  return {pass, "isotropy z " + f3(std::max(iso.max_diag_z, iso.max_offdiag_z)) + ", KS min p " +
                    f3(ks.min_p_value()) + " centered at chi(0) = (" + f3(center[0]) + ", " + f3(center[1]) +
                    ") [uncentered " + f3(raw.min_p_value()) + "], sigma^2 MSD " + f3(est.sigma2) + " vs corrector " +
                    f3(sm.generator_mean) + " / " + f3(sm.time_one_mean) + " (rel. diff " + f3(std::max(rel, rel1)) +
                    ")"};
}

// ---------------------------------------------------------------------------
// 11. degenerate CSRW

constexpr double kC11Drop = 0.5;
constexpr double kC11Flat = 0.2;

Verdict c11() {
  const Environment base = env2(0.7, ConductanceLaw::shifted_pareto(0.8), 1111);
  const double grid[] = {20.0, 200.0};
  const auto pr = degenerate_csrw_probe(base, grid, 4000, 1112, g_workers, true);
  io::CsvTable t({"t", "csrw", "csrw_se", "vsrw", "vsrw_se"});
  for (std::size_t i = 0; i < 2; ++i)
    t.row({fmt_double(grid[i]), fmt_double(pr.csrw[i].var_over_t), fmt_double(pr.csrw[i].se),
           fmt_double(pr.vsrw[i].var_over_t), fmt_double(pr.vsrw[i].se)});
  t.write(g_out / "c11_degenerate.csv");
  const bool pass = pr.csrw_ratio < kC11Drop && std::abs(pr.vsrw_ratio - 1.0) <= kC11Flat;
  return {pass, "CSRW Var/t ratio (t=200 over t=20) " + f3(pr.csrw_ratio) + " (want < 0.5), VSRW ratio " +
                    f3(pr.vsrw_ratio) + " (want within 20% of 1)"};
}

// ---------------------------------------------------------------------------
// 12. reproducibility

std::map<std::string, std::string> read_csvs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      out[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
  return out;
}

Verdict c12() {
  RunConfig cfg;
  cfg.experiment = "full-suite";
  cfg.seed = 1212;
  const fs::path a = g_out / "c12_run_a", b = g_out / "c12_run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  cfg.workers = 1;
  run_experiment(cfg, a);
  cfg.workers = 2;
  run_experiment(cfg, b);
  const auto ca = read_csvs(a), cb = read_csvs(b);
  std::size_t same = 0;
  for (const auto& [k, v] : ca)
    if (cb.count(k) && cb.at(k) == v) ++same;
  // Also rerun criterion 1 and compare its CSV.
  const fs::path first = g_out / "c01_homogeneous.csv";
  std::string before;
  if (fs::exists(first)) before = read_csvs(g_out).at("c01_homogeneous.csv");
  c1();
  const std::string after = read_csvs(g_out).at("c01_homogeneous.csv");
  const bool c1_same = before.empty() || before == after;
  const bool pass = !ca.empty() && same == ca.size() && ca.size() == cb.size() && c1_same;
  return {pass, std::to_string(same) + " of " + std::to_string(ca.size()) +
                    " full-suite CSVs byte-identical across worker counts 1 and 2; criterion-1 rerun " +
                    (c1_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  bool report = false;
  app.add_option("--only", only, "criterion ids to run")->delimiter(',');
  app.add_option("--workers", g_workers, "worker threads");
  app.add_option("--out", g_out, "directory for per-criterion CSVs");
  app.add_flag("--report", report, "exit 0 once every criterion has run, whatever the verdicts");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(g_out);

  const std::vector<Criterion> all{
      {1, "homogeneous VSRW diffusion", 120, c1},
      {2, "CSRW relation", 300, c2},
      {3, "corrector exactness", 60, c3},
      {4, "harmonicity", 60, c4},
      {5, "heat-kernel regimes", 300, c5},
      {6, "oracle equivalences", 180, c6},
      {7, "distributional marginals", 120, c7},
      {8, "metric-comparison tails", 600, c8},
      {9, "isoperimetric scaling", 600, c9},
      {10, "CLT panel", 900, c10},
      {11, "degenerate CSRW", 600, c11},
      {12, "reproducibility", 600, c12},
  };
  int failed = 0;
  io::CsvTable summary({"criterion", "pass", "seconds", "budget", "detail"});
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    // Criterion 4 reads the solves made by criterion 3.
    if (c.id == 4 && !only.empty() && std::find(only.begin(), only.end(), 3) == only.end()) c3();
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs <= c.budget_seconds;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail << " ["
              << f3(secs) << " s, budget " << c.budget_seconds << " s]" << std::endl;
    summary.row({std::to_string(c.id), pass ? "1" : "0", f3(secs), f3(c.budget_seconds), v.detail});
  }
  summary.write(g_out / "summary.csv");
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return report || failed == 0 ? 0 : 1;
}
