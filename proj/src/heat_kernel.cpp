#include "rcm/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/poisson.hpp>

#include "rcm/io.hpp"
#include "rcm/metrics.hpp"
#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"
#include "rcm/walk.hpp"

namespace rcm {

double KernelEstimate::total() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double KernelEstimate::max_entry() const {
  return p.empty() ? 0.0 : *std::max_element(p.begin(), p.end());
}

double KernelEstimate::at(const LatticePoint& y) const {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] == y) return p[i];
  return 0.0;
}

std::string KernelEstimate::to_csv() const {
  const int d = source.dim();
  std::vector<std::string> header{"t"};
  for (int i = 0; i < d; ++i) header.push_back("dx" + std::to_string(i));
  header.insert(header.end(), {"p", method == KernelMethod::kMonteCarlo ? "stderr" : "errbound"});
  io::CsvTable table(header);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    std::vector<std::string> row{io::fmt_double(t)};
    const LatticePoint dx = targets[k] - source;
    for (int i = 0; i < d; ++i) row.push_back(std::to_string(dx[i]));
    row.push_back(io::fmt_double(p[k]));
    row.push_back(io::fmt_double(err[k]));
    table.row(row);
  }
  return table.str();
}

nlohmann::json KernelEstimate::to_json() const {
  return {{"t", t},
          {"source", source.to_vector()},
          {"method", method == KernelMethod::kMonteCarlo ? "monte-carlo" : "uniformization"},
          {"truncation_radius", truncation_radius},
          {"truncation_bound", truncation_bound},
          {"steps", steps},
          {"targets", targets.size()},
          {"total", total()}};
}

namespace {

// Number of Poisson(lambda) terms so that the upper tail is below tol.
std::size_t poisson_terms(double lambda, double tol, std::size_t cap, double& tail) {
  if (lambda == 0.0) {
    tail = 0.0;
    return 1;
  }
  boost::math::poisson_distribution<double> pd(lambda);
  std::size_t k = static_cast<std::size_t>(lambda + 10.0 * std::sqrt(lambda) + 10.0);
  // Grow until the tail is small enough, then shrink back while it stays small.
  while ((tail = boost::math::cdf(boost::math::complement(pd, static_cast<double>(k)))) >= tol) {
    k = k + k / 4 + 1;
    if (k > cap) throw ResourceError("uniformization needs more than " + std::to_string(cap) + " terms");
  }
  while (k > 0) {
    const double t2 = boost::math::cdf(boost::math::complement(pd, static_cast<double>(k - 1)));
    if (t2 >= tol) break;
    tail = t2;
    --k;
  }
  if (k > cap) throw ResourceError("uniformization needs more than " + std::to_string(cap) + " terms");
  return k + 1;  // terms 0..k
}

double log_poisson(double lambda, std::size_t k) {
  return -lambda + static_cast<double>(k) * std::log(lambda) - std::lgamma(static_cast<double>(k) + 1.0);
}

std::vector<double> rates_for(const FiniteGraph& g, Boundary b) {
  std::vector<double> r(g.vertices.size());
  for (int v = 0; v < g.num_vertices(); ++v)
    r[v] = b == Boundary::kAbsorbing ? g.vertex_rate[v] : g.graph_rate(v);
  return r;
}

}  // namespace

KernelEstimate kernel_uniformization(const FiniteGraph& g, int source, double t, double tolerance,
                                     Boundary boundary, std::size_t step_cap) {
  if (t < 0) throw std::invalid_argument("time must be >= 0");
  if (!(tolerance > 0 && tolerance < 1)) throw std::invalid_argument("tolerance must be in (0, 1)");
  const int n = g.num_vertices();
  KernelEstimate est;
  est.t = t;
  est.source = g.vertices[source];
  est.source_vertex = source;
  est.truncation_radius = g.radius;
  est.targets = g.vertices;
  est.p.assign(n, 0.0);
  const auto rate = rates_for(g, boundary);
  const double Lambda = *std::max_element(rate.begin(), rate.end());
  const double lambda = Lambda * t;
  if (lambda == 0.0) {
    est.p[source] = 1.0;
    est.err.assign(n, 0.0);
    est.steps = 1;
    return est;
  }
  double tail = 0.0;
  const std::size_t terms = poisson_terms(lambda, tolerance, step_cap, tail);
  std::vector<double> v(n, 0.0), next(n);
  v[source] = 1.0;
  for (std::size_t k = 0; k < terms; ++k) {
    const double w = std::exp(log_poisson(lambda, k));
    for (int x = 0; x < n; ++x) est.p[x] += w * v[x];
    if (k + 1 == terms) break;
    for (int x = 0; x < n; ++x) next[x] = v[x] * (1.0 - rate[x] / Lambda);
    for (int x = 0; x < n; ++x) {
      if (v[x] == 0.0) continue;
      for (const auto& a : g.adjacency[x]) next[a.vertex] += v[x] * g.edges[a.edge].record.conductance / Lambda;
    }
    v.swap(next);
  }
  est.truncation_bound = tail;
  est.err.assign(n, tail);
  est.steps = terms;
  return est;
}

std::vector<std::vector<double>> kernel_matrix(const FiniteGraph& g, double t, double tolerance, Boundary boundary) {
  std::vector<std::vector<double>> out;
  for (int x = 0; x < g.num_vertices(); ++x) out.push_back(kernel_uniformization(g, x, t, tolerance, boundary).p);
  return out;
}

double LiftedKernel::second_moment() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.p * static_cast<double>(e.displacement.norm2_sq());
  return s;
}

LiftedKernel lifted_kernel(const FiniteGraph& torus, int source, double t, int window, double tolerance) {
  if (!torus.periodic) throw std::invalid_argument("lifted_kernel needs a periodized graph");
  const int n = torus.num_vertices();
  const int d = torus.dim;
  const int side = 2 * window + 1;
  int cells = 1;
  for (int i = 0; i < d; ++i) cells *= side;
  const std::int64_t P = torus.period;
  // Winding shift of each adjacency entry.
  std::vector<std::vector<int>> shift(n);
  for (int u = 0; u < n; ++u) {
    for (const auto& a : torus.adjacency[u]) {
      const LatticePoint D = a.sign > 0 ? torus.edges[a.edge].displacement
                                        : LatticePoint::origin(d) - torus.edges[a.edge].displacement;
      const LatticePoint s = torus.vertices[u] + D - torus.vertices[a.vertex];
      int code = 0;
      for (int i = d - 1; i >= 0; --i) code = code * 64 + static_cast<int>(s[i] / P) + 32;
      shift[u].push_back(code);
    }
  }
  auto move = [&](int cell, int code, bool& ok) {
    int out = 0, mul = 1;
    ok = true;
    for (int i = 0; i < d; ++i) {
      const int k = cell % side - window + (code % 64 - 32);
      cell /= side;
      code /= 64;
      if (k < -window || k > window) ok = false;
      out += (k + window) * mul;
      mul *= side;
    }
    return out;
  };
  const auto rate = rates_for(torus, Boundary::kPeriodic);
  const double Lambda = *std::max_element(rate.begin(), rate.end());
  const double lambda = Lambda * t;
  LiftedKernel lk;
  lk.source = source;
  lk.t = t;
  const std::size_t S = static_cast<std::size_t>(n) * cells;
  std::vector<double> acc(S, 0.0), v(S, 0.0), next(S);
  int origin_cell = 0;
  for (int i = 0, mul = 1; i < d; ++i, mul *= side) origin_cell += window * mul;
  v[static_cast<std::size_t>(source) * cells + origin_cell] = 1.0;
  double tail = 0.0;
  const std::size_t terms = lambda == 0.0 ? 1 : poisson_terms(lambda, tolerance, 2'000'000, tail);
  double escaped_mass = 0.0;  // mass that left the window, before Poisson weighting
  for (std::size_t k = 0; k < terms; ++k) {
    const double w = lambda == 0.0 ? 1.0 : std::exp(log_poisson(lambda, k));
    for (std::size_t s = 0; s < S; ++s) acc[s] += w * v[s];
    lk.escaped += w * escaped_mass;
    if (k + 1 == terms) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < n; ++x) {
      for (int c = 0; c < cells; ++c) {
        const double m = v[static_cast<std::size_t>(x) * cells + c];
        if (m == 0.0) continue;
        next[static_cast<std::size_t>(x) * cells + c] += m * (1.0 - rate[x] / Lambda);
        for (std::size_t j = 0; j < torus.adjacency[x].size(); ++j) {
          const auto& a = torus.adjacency[x][j];
          bool ok = true;
          const int c2 = move(c, shift[x][j], ok);
          const double q = m * torus.edges[a.edge].record.conductance / Lambda;
          if (ok) next[static_cast<std::size_t>(a.vertex) * cells + c2] += q;
          else escaped_mass += q;
        }
      }
    }
    v.swap(next);
  }
  lk.truncation_bound = tail;
  for (int y = 0; y < n; ++y) {
    for (int c = 0; c < cells; ++c) {
      const double m = acc[static_cast<std::size_t>(y) * cells + c];
      if (m == 0.0) continue;
      LatticePoint disp = torus.vertices[y] - torus.vertices[source];
      int cc = c;
      for (int i = 0; i < d; ++i) {
        disp[i] += static_cast<std::int64_t>(cc % side - window) * P;
        cc /= side;
      }
      lk.entries.push_back({y, disp, m});
    }
  }
  return lk;
}

namespace {

KernelEstimate from_counts(std::map<LatticePoint, std::size_t> counts, const LatticePoint& x, double t,
                           std::size_t N) {
  KernelEstimate est;
  est.t = t;
  est.source = x;
  est.method = KernelMethod::kMonteCarlo;
  est.steps = N;
  for (const auto& [y, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(N);
    est.targets.push_back(y);
    est.p.push_back(p);
    est.err.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(N)));
    est.truncation_radius = std::max(est.truncation_radius, (y - x).norm_inf());
  }
  return est;
}

}  // namespace

KernelEstimate kernel_monte_carlo(const Environment& env, const LatticePoint& x, double t, std::size_t N,
                                  std::uint64_t seed, int workers) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  std::vector<LatticePoint> ends(N);
  const double grid[1] = {t};
  parallel_for(N, workers, [&](std::size_t i) {
    ends[i] = sample_walk(env, x, grid, derive_seed(seed, i), WalkKind::kVariableSpeed).positions[0];
  });
  std::map<LatticePoint, std::size_t> counts;
  for (const auto& y : ends) ++counts[y];
  return from_counts(std::move(counts), x, t, N);
}

KernelEstimate kernel_monte_carlo(const FiniteGraph& g, int source, double t, std::size_t N, std::uint64_t seed,
                                  int workers) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  std::vector<int> ends(N);
  parallel_for(N, workers, [&](std::size_t i) {
    ends[i] = simulate_walk(g, source, t, derive_seed(seed, i), WalkKind::kVariableSpeed).vertices.back();
  });
  std::vector<std::size_t> c(g.vertices.size(), 0);
  for (int v : ends) ++c[v];
  KernelEstimate est;
  est.t = t;
  est.source = g.vertices[source];
  est.source_vertex = source;
  est.method = KernelMethod::kMonteCarlo;
  est.steps = N;
  est.truncation_radius = g.radius;
  est.targets = g.vertices;
  for (int v = 0; v < g.num_vertices(); ++v) {
    const double p = static_cast<double>(c[v]) / static_cast<double>(N);
    est.p.push_back(p);
    est.err.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(N)));
  }
  return est;
}

Agreement compare_kernels(const KernelEstimate& exact, const KernelEstimate& mc) {
  Agreement a;
  const double N = static_cast<double>(std::max<std::size_t>(mc.steps, 1));
  std::map<LatticePoint, double> emp;
  for (std::size_t i = 0; i < mc.targets.size(); ++i) emp[mc.targets[i]] = mc.p[i];
  for (std::size_t i = 0; i < exact.targets.size(); ++i) {
    const double p = exact.p[i];
    const auto it = emp.find(exact.targets[i]);
    const double ph = it == emp.end() ? 0.0 : it->second;
    const double se = std::max(std::sqrt(p * (1.0 - p) / N), 1.0 / N);
    a.max_abs = std::max(a.max_abs, std::abs(ph - p));
    a.max_z = std::max(a.max_z, std::abs(ph - p) / se);
    ++a.entries;
  }
  return a;
}

// ---------------------------------------------------------------------------

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kNearDiagonal: return "near-diagonal";
    case Regime::kGaussian: return "gaussian";
    case Regime::kExponential: return "exponential";
  }
  return "?";
}

Regime classify(std::int64_t dist_inf, double t, double c6) {
  const double r = static_cast<double>(dist_inf);
  if (r <= std::sqrt(t)) return Regime::kNearDiagonal;
  return t >= c6 * r ? Regime::kGaussian : Regime::kExponential;
}

std::vector<KernelProbe> probes_from(const std::vector<KernelEstimate>& ests, const FiniteGraph* g) {
  std::vector<KernelProbe> out;
  for (const auto& e : ests) {
    std::vector<int> hops;
    if (g && e.source_vertex >= 0) hops = bfs_distances(*g, e.source_vertex);
    for (std::size_t i = 0; i < e.targets.size(); ++i) {
      KernelProbe pr;
      pr.t = e.t;
      pr.dist_inf = (e.targets[i] - e.source).norm_inf();
      pr.p = e.p[i];
      if (!hops.empty()) {
        const auto v = g->index_of(e.targets[i]);
        pr.graph_dist = v ? hops[*v] : -1;
      }
      out.push_back(pr);
    }
  }
  return out;
}

nlohmann::json UniformUpperFit::to_json() const {
  return {{"c3", c3}, {"times", times}, {"scaled_sup", scaled_sup}, {"masked", masked}, {"spread", spread}};
}

UniformUpperFit check_uniform_upper(const std::vector<KernelEstimate>& ests, int d) {
  UniformUpperFit f;
  for (const auto& e : ests) {
    if (e.t < 1.0) {
      ++f.masked;
      continue;
    }
    f.times.push_back(e.t);
    f.scaled_sup.push_back(e.max_entry() * std::pow(e.t, 0.5 * d));
  }
  if (!f.scaled_sup.empty()) {
    const auto [lo, hi] = std::minmax_element(f.scaled_sup.begin(), f.scaled_sup.end());
    f.c3 = *hi;
    f.spread = *lo > 0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
  }
  return f;
}

nlohmann::json RegimeFit::to_json() const {
  return {{"regime", to_string(regime)}, {"c5", c5}, {"c4", c4}, {"probes", probes}};
}

RegimeFit check_gaussian_upper(const std::vector<KernelProbe>& probes, int d, const std::vector<double>& c5,
                               double c6) {
  RegimeFit f;
  f.regime = Regime::kGaussian;
  f.c5 = c5;
  f.c4.assign(c5.size(), 0.0);
  for (const auto& pr : probes) {
    if (pr.t <= 0 || pr.t < c6 * static_cast<double>(pr.dist_inf) || pr.p <= 0) continue;
    ++f.probes;
    const double r2 = static_cast<double>(pr.dist_inf * pr.dist_inf);
    for (std::size_t k = 0; k < c5.size(); ++k)
      f.c4[k] = std::max(f.c4[k], pr.p * std::pow(pr.t, 0.5 * d) * std::exp(c5[k] * r2 / pr.t));
  }
  return f;
}

namespace {
double exp_rate(std::int64_t r, double t) {
  const double x = static_cast<double>(r);
  return x * std::max(1.0, std::log(x / t));
}
}  // namespace

RegimeFit check_exponential_regime(const std::vector<KernelProbe>& probes, const std::vector<double>& c5,
                                   double c6) {
  RegimeFit f;
  f.regime = Regime::kExponential;
  f.c5 = c5;
  f.c4.assign(c5.size(), 0.0);
  for (const auto& pr : probes) {
    if (pr.t <= 0 || pr.dist_inf == 0 || pr.t > c6 * static_cast<double>(pr.dist_inf) || pr.p <= 0) continue;
    ++f.probes;
    for (std::size_t k = 0; k < c5.size(); ++k)
      f.c4[k] = std::max(f.c4[k], pr.p * std::exp(c5[k] * exp_rate(pr.dist_inf, pr.t)));
  }
  return f;
}

double regime_bound(const KernelProbe& pr, int d, double c4, double c5, double c6) {
  if (pr.t >= c6 * static_cast<double>(pr.dist_inf)) {
    const double r2 = static_cast<double>(pr.dist_inf * pr.dist_inf);
    return c4 * std::pow(pr.t, -0.5 * d) * std::exp(-c5 * r2 / pr.t);
  }
  return c4 * std::exp(-c5 * exp_rate(pr.dist_inf, pr.t));
}

nlohmann::json NearDiagonalFit::to_json() const {
  return {{"c8", c8}, {"admitted", admitted}, {"excluded", excluded}};
}

NearDiagonalFit check_near_diagonal_lower(const std::vector<KernelProbe>& probes, int d, double c7) {
  NearDiagonalFit f;
  f.c8 = std::numeric_limits<double>::infinity();
  for (const auto& pr : probes) {
    if (pr.graph_dist < 0 || pr.t <= 0 || static_cast<double>(pr.graph_dist) > c7 * std::sqrt(pr.t)) {
      ++f.excluded;
      continue;
    }
    ++f.admitted;
    f.c8 = std::min(f.c8, pr.p * std::pow(pr.t, 0.5 * d));
  }
  if (f.admitted == 0) f.c8 = 0.0;
  return f;
}

UEstimate estimate_U(const Environment& env, const LatticePoint& x, const UProbeConfig& cfg) {
  const FiniteGraph g = restrict_to_box(env, x, cfg.box_radius);
  const auto ox = g.index_of(x);
  if (!ox) throw std::invalid_argument("estimate_U: " + x.to_string() + " is closed");
  UEstimate u;
  std::int64_t worst = 0;
  for (double t : cfg.times) {
    const auto est = kernel_uniformization(g, *ox, t, 1e-14, Boundary::kAbsorbing);
    for (std::size_t i = 0; i < est.targets.size(); ++i) {
      KernelProbe pr{t, (est.targets[i] - x).norm_inf(), -1, est.p[i]};
      if (classify(pr.dist_inf, t, cfg.c6) == Regime::kNearDiagonal || pr.p <= cfg.floor) continue;
      if (pr.p > regime_bound(pr, env.dim(), cfg.c4, cfg.c5, cfg.c6)) {
        ++u.violations;
        worst = std::max(worst, pr.dist_inf);
      }
    }
  }
  u.value = std::max<std::int64_t>(1, worst);
  u.censored = worst >= cfg.box_radius - 2;
  return u;
}

}  // namespace rcm
