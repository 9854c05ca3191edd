#include "rcm/isoperimetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "rcm/metrics.hpp"
#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"
#include "rcm/stats.hpp"

namespace rcm {

std::vector<int> edge_boundary(const FiniteGraph& g, const std::vector<char>& in_A) {
  std::vector<int> out;
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto& E = g.edges[e];
    if (E.u != E.v && in_A[E.u] != in_A[E.v]) out.push_back(e);
  }
  return out;
}

std::vector<int> edge_boundary(const FiniteGraph& g, const std::vector<int>& A) {
  std::vector<char> in(g.vertices.size(), 0);
  for (int v : A) in[v] = 1;
  return edge_boundary(g, in);
}

double subset_measure(const FiniteGraph& g, const std::vector<int>& A) {
  double m = 0.0;
  for (int v : A) m += g.measure(v);
  return m;
}

std::vector<std::size_t> projection_sizes(const std::vector<LatticePoint>& A) {
  if (A.empty()) return {};
  const int d = A[0].dim();
  std::vector<std::size_t> out(d);
  for (int i = 0; i < d; ++i) {
    std::vector<LatticePoint> proj;
    proj.reserve(A.size());
    for (auto x : A) {
      x[i] = 0;
      proj.push_back(x);
    }
    std::sort(proj.begin(), proj.end());
    out[i] = static_cast<std::size_t>(std::unique(proj.begin(), proj.end()) - proj.begin());
  }
  return out;
}

SubsetCut make_cut(const FiniteGraph& g, const std::vector<int>& subset) {
  SubsetCut c;
  c.subset = subset;
  c.boundary = edge_boundary(g, subset);
  std::vector<LatticePoint> pts;
  for (int v : subset) pts.push_back(g.vertices[v]);
  c.projections = projection_sizes(pts);
  c.measure = subset_measure(g, subset);
  return c;
}

// ---------------------------------------------------------------------------

IsoResult isoperimetric_constant(const FiniteGraph& g, int cap) {
  const int n = g.num_vertices();
  if (n > cap || n > 62)
    throw ResourceError("exhaustive isoperimetric search capped at " + std::to_string(cap) +
                        " vertices, graph has " + std::to_string(n));
  IsoResult r;
  const auto comps = g.components();
  r.connected = comps.size() == 1;
  if (!r.connected) {
    // A whole component is a zero-boundary cut, provided it has mass and fits.
    // Isolated vertices have m = 0 and do not count.
    const std::vector<int>* best = nullptr;
    for (const auto& c : comps)
      if (subset_measure(g, c) > 0 && (!best || c.size() < best->size())) best = &c;
    if (best && 2 * best->size() <= static_cast<std::size_t>(n)) {
      r.witness = *best;
      r.boundary = 0;
      r.measure = static_cast<std::int64_t>(subset_measure(g, r.witness));
      r.value = 0.0;
      return r;
    }
  }
  r.value = std::numeric_limits<double>::infinity();
  r.boundary = 1;
  r.measure = 0;
  std::vector<char> in(n, 0);
  std::int64_t size = 0, measure = 0, boundary = 0;
  std::uint64_t state = 0, best_state = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const int v = std::countr_zero(k);
    const bool adding = !in[v];
    in[v] = adding;
    state ^= std::uint64_t{1} << v;
    size += adding ? 1 : -1;
    measure += (adding ? 1 : -1) * g.degree(v);
    for (const auto& a : g.adjacency[v]) {
      if (a.vertex == v) continue;
      const bool other = in[a.vertex];
      boundary += (adding == other) ? -1 : 1;
    }
    if (2 * size > n || measure == 0) continue;
    // boundary / measure < best.boundary / best.measure
    if (r.measure == 0 || boundary * r.measure < r.boundary * measure) {
      r.boundary = boundary;
      r.measure = measure;
      best_state = state;
    }
  }
  if (r.measure > 0) {
    r.value = static_cast<double>(r.boundary) / static_cast<double>(r.measure);
    for (int v = 0; v < n; ++v)
      if (best_state >> v & 1) r.witness.push_back(v);
  }
  return r;
}

std::vector<double> edge_congestion(const FiniteGraph& g, const std::vector<std::int64_t>& weights) {
  const int n = g.num_vertices();
  auto wt = [&](int e) { return weights.empty() ? std::int64_t{1} : weights[e]; };
  std::vector<double> load(g.edges.size(), 0.0);
  std::vector<std::int64_t> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> order;
  order.reserve(n);
  using Item = std::pair<std::int64_t, int>;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    order.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, s});
    std::vector<char> done(n, 0);
    while (!pq.empty()) {
      const auto [du, u] = pq.top();
      pq.pop();
      if (done[u]) continue;
      done[u] = 1;
      order.push_back(u);
      for (const auto& a : g.adjacency[u]) {
        const int w = a.vertex;
        const std::int64_t nd = du + wt(a.edge);
        if (dist[w] < 0 || nd < dist[w]) {
          dist[w] = nd;
          sigma[w] = 0.0;
          pq.push({nd, w});
        }
        if (nd == dist[w]) sigma[w] += sigma[u];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (const auto& a : g.adjacency[w]) {
        const int u = a.vertex;
        if (u != w && dist[u] + wt(a.edge) == dist[w]) {
          const double c = sigma[u] / sigma[w] * (1.0 + delta[w]);
          load[a.edge] += c;
          delta[u] += c;
        }
      }
    }
  }
  for (auto& l : load) l *= 0.5;  // ordered pairs were counted twice
  return load;
}

nlohmann::json CheegerBounds::to_json() const {
  return {{"lower", lower},        {"spectral_lower", spectral_lower}, {"flow_lower", flow_lower},
          {"upper", upper},        {"lambda2", lambda2},               {"connected", connected},
          {"spectral_computed", spectral_computed}};
}

namespace {

// Best prefix cut with |A| <= |V|/2 along a vertex order.
void sweep(const FiniteGraph& g, const std::vector<int>& order, double& best,
           std::vector<int>& witness) {
  const int n = g.num_vertices();
  std::vector<char> in(n, 0);
  std::int64_t boundary = 0, measure = 0;
  std::size_t best_k = 0;
  bool improved = false;
  for (std::size_t k = 0; 2 * (k + 1) <= static_cast<std::size_t>(n); ++k) {
    const int v = order[k];
    in[v] = 1;
    measure += g.degree(v);
    for (const auto& a : g.adjacency[v]) {
      if (a.vertex == v) continue;
      boundary += in[a.vertex] ? -1 : 1;
    }
    if (measure == 0) continue;
    const double ratio = static_cast<double>(boundary) / static_cast<double>(measure);
    if (ratio < best) {
      best = ratio;
      best_k = k + 1;
      improved = true;
    }
  }
  if (improved) witness.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_k));
}

void sweep_both_ways(const FiniteGraph& g, const std::vector<double>& key, double& best,
                     std::vector<int>& witness) {
  std::vector<int> order(g.vertices.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  sweep(g, order, best, witness);
  std::reverse(order.begin(), order.end());
  sweep(g, order, best, witness);
}

}  // namespace

CheegerBounds cheeger_bounds(const FiniteGraph& g, int dense_cap, bool fiedler_sweep) {
  CheegerBounds b;
  const int n = g.num_vertices();
  if (n < 2) throw std::invalid_argument("cheeger_bounds needs at least two vertices");
  if (!g.is_connected()) {
    b.connected = false;
    b.upper_witness = g.components().front();
    return b;
  }
  std::vector<int> degs(n);
  for (int v = 0; v < n; ++v) degs[v] = g.degree(v);
  const int half_up = (n + 1) / 2;
  std::vector<int> sorted = degs;
  std::sort(sorted.begin(), sorted.end());
  const double small_sum = std::accumulate(sorted.begin(), sorted.begin() + half_up, 0.0);
  const double vol = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  const int dmax = sorted.back();

  // Any routing certifies a bound; take the better of hop-shortest and
  // length-shortest paths (the latter keeps flow off long edges).
  std::vector<std::int64_t> lengths(g.edges.size());
  for (int e = 0; e < g.num_edges(); ++e) lengths[e] = g.edges[e].displacement.norm1();
  for (const auto& w : {std::vector<std::int64_t>{}, lengths}) {
    const auto load = edge_congestion(g, w);
    const double rho = *std::max_element(load.begin(), load.end());
    if (rho > 0) b.flow_lower = std::max(b.flow_lower, static_cast<double>(half_up) / (rho * dmax));
  }

  b.upper = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < g.dim; ++axis) {
    std::vector<double> key(n);
    for (int v = 0; v < n; ++v) key[v] = static_cast<double>(g.vertices[v][axis]);
    sweep_both_ways(g, key, b.upper, b.upper_witness);
  }

  if (n <= dense_cap) {
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges) {
      if (e.u == e.v) continue;
      N(e.u, e.v) -= 1.0;
      N(e.v, e.u) -= 1.0;
      N(e.u, e.u) += 1.0;
      N(e.v, e.v) += 1.0;
    }
    Eigen::VectorXd s(n);
    for (int v = 0; v < n; ++v) s[v] = 1.0 / std::sqrt(static_cast<double>(degs[v]));
    N = s.asDiagonal() * N * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        N, fiedler_sweep ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    // Shave a relative 1e-12 so round-off cannot push the bound above lambda_2.
    b.lambda2 = std::max(0.0, es.eigenvalues()[1] - 1e-12 * std::max(1.0, es.eigenvalues()[n - 1]));
    b.spectral_lower = b.lambda2 * small_sum / vol;
    b.spectral_computed = true;
    if (fiedler_sweep) {
      std::vector<double> key(n);
      for (int v = 0; v < n; ++v) key[v] = es.eigenvectors()(v, 1) * s[v];
      sweep_both_ways(g, key, b.upper, b.upper_witness);
    }
  }
  b.lower = std::max(b.spectral_lower, b.flow_lower);
  std::sort(b.upper_witness.begin(), b.upper_witness.end());
  return b;
}

nlohmann::json Lemma5Report::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"p", r.p},
                  {"n", r.n},
                  {"env_seed", r.env_seed},
                  {"connected", r.connected},
                  {"lower", r.lower},
                  {"n_lower", r.n_lower}});
  return {{"rows", rs},
          {"radii", radii},
          {"ensemble_min", ensemble_min},
          {"excluded", excluded},
          {"log_slope", log_slope}};
}

Lemma5Report check_lemma5_scaling(const Environment& base, const std::vector<std::int64_t>& radii,
                                  std::size_t environments, std::uint64_t seed, int workers) {
  Lemma5Report rep;
  rep.radii = radii;
  const std::size_t R = radii.size();
  rep.rows.resize(environments * R);
  const LatticePoint origin = LatticePoint::origin(base.dim());
  parallel_for(environments * R, workers, [&](std::size_t k) {
    const std::size_t e = k / R, r = k % R;
    const Environment env = rooted_environment(base, derive_seed(seed, e));
    const FiniteGraph g = restrict_to_box(env, origin, radii[r]);
    Lemma5Row row;
    row.p = base.p();
    row.n = radii[r];
    row.env_seed = env.seed();
    const auto b = cheeger_bounds(g, 2500, false);
    row.connected = b.connected;
    row.lower = b.lower;
    row.n_lower = b.lower * static_cast<double>(radii[r]);
    rep.rows[k] = row;
  });
  std::vector<double> lx, ly;
  for (std::size_t r = 0; r < R; ++r) {
    double mn = std::numeric_limits<double>::infinity();
    std::size_t excl = 0;
    for (std::size_t e = 0; e < environments; ++e) {
      const auto& row = rep.rows[e * R + r];
      if (!row.connected) {
        ++excl;
        continue;
      }
      mn = std::min(mn, row.n_lower);
    }
    rep.ensemble_min.push_back(std::isfinite(mn) ? mn : 0.0);
    rep.excluded.push_back(excl);
    if (std::isfinite(mn) && mn > 0) {
      lx.push_back(std::log(static_cast<double>(radii[r])));
      ly.push_back(std::log(mn));
    }
  }
  if (lx.size() >= 2) rep.log_slope = linear_fit(lx, ly).slope;
  return rep;
}

// ---------------------------------------------------------------------------

LoomisWhitney loomis_whitney_check(const std::vector<LatticePoint>& A, int d) {
  LoomisWhitney lw;
  if (A.empty()) throw std::invalid_argument("Loomis-Whitney check needs a nonempty set");
  lw.projections = projection_sizes(A);
  for (auto s : lw.projections) lw.lhs += static_cast<double>(s);
  lw.rhs = d * std::pow(static_cast<double>(A.size()), 1.0 - 1.0 / d);
  lw.holds = lw.lhs >= lw.rhs * (1.0 - 1e-12);
  return lw;
}

nlohmann::json DensityReport::to_json() const {
  return {{"n", n},
          {"L", L},
          {"p", p},
          {"min_line", min_line},
          {"max_line", max_line},
          {"lines", lines},
          {"line_violations", line_violations},
          {"min_projection", min_projection},
          {"projections", projections},
          {"projection_violations", projection_violations}};
}

int default_parallel_lines(double p) {
  if (p >= 1.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(4.0) / -std::log(1.0 - p))));
}

DensityReport lemma3_densities(const Environment& env, std::int64_t n, int L) {
  if (n < 1 || L < 1) throw std::invalid_argument("lemma3_densities needs n >= 1 and L >= 1");
  const int d = env.dim();
  const std::int64_t side = 2 * n + 1;
  DensityReport r;
  r.n = n;
  r.L = L;
  r.p = env.p();
  const double floor_proj = 1.0 - 2.0 * std::pow(1.0 - env.p(), L);
  LatticePoint origin = LatticePoint::origin(d);
  // Every line along axis j is identified by a box point with x_j = -n.
  for (int j = 0; j < d; ++j) {
    for (const auto& base : ball_linf(origin, n)) {
      if (base[j] != -n) continue;
      std::int64_t open = 0;
      LatticePoint y = base;
      for (std::int64_t s = 0; s < side; ++s) {
        y[j] = -n + s;
        open += env.site_open(y) ? 1 : 0;
      }
      const double dens = static_cast<double>(open) / static_cast<double>(side);
      r.min_line = std::min(r.min_line, dens);
      r.max_line = std::max(r.max_line, dens);
      ++r.lines;
      if (dens < env.p() / 2 || dens > 2 * env.p()) ++r.line_violations;
      // L parallel lines along j stacked along axis i, projected along i.
      for (int i = 0; i < d; ++i) {
        if (i == j || base[i] > n - L + 1) continue;
        std::int64_t covered = 0;
        for (std::int64_t s = 0; s < side; ++s) {
          LatticePoint z = base;
          z[j] = -n + s;
          bool any = false;
          for (int m = 0; m < L && !any; ++m) {
            LatticePoint w = z;
            w[i] = base[i] + m;
            any = env.site_open(w);
          }
          covered += any ? 1 : 0;
        }
        const double pd = static_cast<double>(covered) / static_cast<double>(side);
        r.min_projection = std::min(r.min_projection, pd);
        ++r.projections;
        if (pd < floor_proj) ++r.projection_violations;
      }
    }
  }
  return r;
}

DichotomySample sampled_dichotomy(const FiniteGraph& g, double eps, std::size_t samples,
                                  std::uint64_t seed) {
  DichotomySample out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  const int n = g.num_vertices();
  if (n == 0) return out;
  CounterStream rng(seed);
  const double cap = (1.0 - eps) * n;
  for (std::size_t s = 0; s < samples; ++s) {
    const int center = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    const int radius = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(2 * g.radius + 2));
    const double keep = 0.5 + 0.5 * rng.uniform();
    const auto ball = ball_graph(g, center, radius);
    std::vector<int> A;
    for (int v : ball)
      if (rng.uniform() < keep) A.push_back(v);
    if (A.empty() || static_cast<double>(A.size()) >= cap) continue;
    const auto cut = make_cut(g, A);
    double proj = 0.0;
    for (auto p : cut.projections) proj += static_cast<double>(p);
    out.min_ratio = std::min(out.min_ratio, static_cast<double>(cut.boundary.size()) / proj);
    ++out.samples;
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json PoincareReport::to_json() const {
  return {{"radius", radius}, {"vertices", vertices}, {"weights", weights},
          {"lambda2", lambda2}, {"C", C},             {"C_over_n2", C_over_n2()},
          {"variational", variational}};
}

namespace {

void fill_defaults(const FiniteGraph& g, std::vector<double>& w, std::vector<double>& m) {
  if (w.empty()) w.assign(g.edges.size(), 1.0);
  if (m.empty()) {
    m.resize(g.vertices.size());
    for (int v = 0; v < g.num_vertices(); ++v) m[v] = g.measure(v);
  }
  if (w.size() != g.edges.size() || m.size() != g.vertices.size())
    throw std::invalid_argument("weight vector sizes do not match the graph");
  for (double x : m)
    if (!(x > 0)) throw std::invalid_argument("vertex measure must be positive");
}

// M^{-1/2} L_w M^{-1/2}
Eigen::MatrixXd scaled_laplacian(const FiniteGraph& g, const std::vector<double>& w,
                                 const std::vector<double>& m) {
  const int n = g.num_vertices();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto& E = g.edges[e];
    if (E.u == E.v) continue;
    A(E.u, E.u) += w[e];
    A(E.v, E.v) += w[e];
    A(E.u, E.v) -= w[e];
    A(E.v, E.u) -= w[e];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) /= std::sqrt(m[i] * m[j]);
  return A;
}

double variance_ratio(const FiniteGraph& g, const std::vector<double>& f, const std::vector<double>& w,
                      const std::vector<double>& m) {
  double mm = 0, mf = 0;
  for (std::size_t v = 0; v < f.size(); ++v) {
    mm += m[v];
    mf += m[v] * f[v];
  }
  const double a = mf / mm;
  double var = 0, dir = 0;
  for (std::size_t v = 0; v < f.size(); ++v) var += (f[v] - a) * (f[v] - a) * m[v];
  for (int e = 0; e < g.num_edges(); ++e) {
    const double df = f[g.edges[e].u] - f[g.edges[e].v];
    dir += w[e] * df * df;
  }
  return var / dir;
}

}  // namespace

PoincareReport poincare_constant(const FiniteGraph& g, std::vector<double> edge_weights,
                                 std::vector<double> measure) {
  fill_defaults(g, edge_weights, measure);
  if (!g.is_connected()) throw std::invalid_argument("poincare_constant needs a connected graph");
  const int n = g.num_vertices();
  if (n < 2) throw std::invalid_argument("poincare_constant needs at least two vertices");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled_laplacian(g, edge_weights, measure));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  PoincareReport r;
  r.vertices = static_cast<std::size_t>(n);
  r.radius = g.radius;
  r.lambda2 = es.eigenvalues()[1];
  r.C = 1.0 / r.lambda2;
  r.fiedler.resize(n);
  for (int v = 0; v < n; ++v) r.fiedler[v] = es.eigenvectors()(v, 1) / std::sqrt(measure[v]);
  r.variational = variance_ratio(g, r.fiedler, edge_weights, measure);
  return r;
}

double poincare_constant_iterative(const FiniteGraph& g, std::vector<double> edge_weights,
                                   std::vector<double> measure, double tol, std::size_t max_iter) {
  fill_defaults(g, edge_weights, measure);
  const int n = g.num_vertices();
  // Power iteration on c I - A, A = M^{-1/2} L M^{-1/2}, deflating sqrt(m).
  std::vector<double> sm(n), diag(n, 0.0);
  for (int v = 0; v < n; ++v) sm[v] = std::sqrt(measure[v]);
  for (int e = 0; e < g.num_edges(); ++e) {
    if (g.edges[e].u == g.edges[e].v) continue;
    diag[g.edges[e].u] += edge_weights[e];
    diag[g.edges[e].v] += edge_weights[e];
  }
  double c = 0.0;
  for (int v = 0; v < n; ++v) c = std::max(c, 2.0 * diag[v] / measure[v]);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> u(n);
    for (int v = 0; v < n; ++v) u[v] = x[v] / sm[v];
    std::vector<double> lu(n, 0.0);
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto& E = g.edges[e];
      if (E.u == E.v) continue;
      const double df = edge_weights[e] * (u[E.u] - u[E.v]);
      lu[E.u] += df;
      lu[E.v] -= df;
    }
    for (int v = 0; v < n; ++v) y[v] = c * x[v] - lu[v] / sm[v];
  };
  const double s0 = std::sqrt(std::accumulate(measure.begin(), measure.end(), 0.0));
  auto deflate = [&](std::vector<double>& x) {
    double dot = 0.0;
    for (int v = 0; v < n; ++v) dot += x[v] * sm[v] / s0;
    double norm = 0.0;
    for (int v = 0; v < n; ++v) {
      x[v] -= dot * sm[v] / s0;
      norm += x[v] * x[v];
    }
    norm = std::sqrt(norm);
    for (auto& xv : x) xv /= norm;
  };
  std::vector<double> x(n), y(n);
  CounterStream rng(0x9001);
  for (auto& xv : x) xv = rng.uniform() - 0.5;
  deflate(x);
  double mu = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply(x, y);
    double next = 0.0;
    for (int v = 0; v < n; ++v) next += x[v] * y[v];
    deflate(y);
    x.swap(y);
    if (it > 10 && std::abs(next - mu) <= tol * std::abs(next)) {
      mu = next;
      break;
    }
    mu = next;
  }
  return 1.0 / (c - mu);
}

WeightedBall weighted_ball(const Environment& env, const LatticePoint& x, std::int64_t n,
                           std::int64_t box_radius) {
  if (n < 1) throw std::invalid_argument("ball radius must be >= 1");
  const FiniteGraph box = restrict_to_box(env, x, box_radius);
  const auto ox = box.index_of(x);
  if (!ox) throw std::invalid_argument("ball center " + x.to_string() + " is closed");
  const auto dist = bfs_distances(box, *ox, static_cast<int>(n + 1));
  std::vector<int> layer;
  for (int v = 0; v < box.num_vertices(); ++v) {
    if (dist[v] == kUnreachable) continue;
    if (dist[v] <= n && box.is_truncated(v))
      throw TruncationError("ball of radius " + std::to_string(n) + " reaches the boundary of the box of radius " +
                            std::to_string(box_radius));
    if (dist[v] == n + 1) layer.push_back(v);
  }
  const auto to_out = bfs_distances(box, layer);
  WeightedBall wb;
  std::vector<int> local(box.vertices.size(), -1);
  wb.ball.dim = box.dim;
  wb.ball.center = x;
  wb.ball.radius = n;
  for (int v = 0; v < box.num_vertices(); ++v) {
    if (dist[v] == kUnreachable || dist[v] > n) continue;
    local[v] = wb.ball.num_vertices();
    wb.ball.vertices.push_back(box.vertices[v]);
    const int bd = to_out[v];
    wb.boundary_distance.push_back(bd);
    const double r = static_cast<double>(std::min<std::int64_t>(n, bd)) / static_cast<double>(n);
    wb.phi.push_back(r * r);
  }
  wb.ball.adjacency.assign(wb.ball.vertices.size(), {});
  for (const auto& e : box.edges) {
    if (local[e.u] < 0 || local[e.v] < 0) continue;
    wb.ball.add_edge(local[e.u], local[e.v], e.record, e.displacement);
  }
  wb.ball.vertex_rate.assign(wb.ball.vertices.size(), 0.0);
  for (int v = 0; v < box.num_vertices(); ++v)
    if (local[v] >= 0) wb.ball.vertex_rate[local[v]] = box.vertex_rate[v];
  wb.ball.rebuild_index();
  return wb;
}

PoincareReport weighted_poincare_check(const Environment& env, const LatticePoint& x, std::int64_t n) {
  std::int64_t R = 2 * n + 4;
  for (int attempt = 0;; ++attempt) {
    try {
      const WeightedBall wb = weighted_ball(env, x, n, R);
      const int d = env.dim();
      std::vector<double> w(wb.ball.edges.size()), m(wb.phi.size());
      for (std::size_t e = 0; e < w.size(); ++e)
        w[e] = std::min(wb.phi[wb.ball.edges[e].u], wb.phi[wb.ball.edges[e].v]);
      for (std::size_t v = 0; v < m.size(); ++v) m[v] = wb.phi[v] * 2.0 * d;
      auto rep = poincare_constant(wb.ball, w, m);
      rep.weights = "phi";
      rep.radius = n;
      return rep;
    } catch (const TruncationError&) {
      if (attempt >= 6) throw;
      R *= 2;
    }
  }
}

// ---------------------------------------------------------------------------

nlohmann::json NashReport::to_json() const {
  return {{"min_ratio", min_ratio},
          {"min_indicator", min_indicator},
          {"min_tent", min_tent},
          {"min_random", min_random},
          {"probes", probes}};
}

double nash_ratio(const FiniteGraph& g, const std::vector<double>& f) {
  double dir = 0.0;
  for (const auto& e : g.edges) {
    const double df = f[e.u] - f[e.v];
    dir += df * df;  // (1/2) * two directed copies
  }
  double l1 = 0.0, l2 = 0.0;
  for (int v = 0; v < g.num_vertices(); ++v) {
    l1 += std::abs(f[v]) * g.measure(v);
    l2 += f[v] * f[v] * g.measure(v);
  }
  if (l1 == 0.0) throw std::invalid_argument("nash_ratio of the zero function");
  const double d = g.dim;
  const double l2norm = std::sqrt(l2);
  return dir / (std::pow(l2norm, 2.0 + 4.0 / d) * std::pow(l1, -4.0 / d));
}

NashReport nash_constant_witness(const FiniteGraph& g, std::size_t random_probes, std::uint64_t seed) {
  NashReport r;
  const double inf = std::numeric_limits<double>::infinity();
  r.min_indicator = r.min_tent = r.min_random = inf;
  std::vector<int> interior;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (!g.is_truncated(v)) interior.push_back(v);
  if (interior.empty()) throw std::invalid_argument("graph has no interior vertices for probes");
  const int n = g.num_vertices();
  for (int v : interior) {
    std::vector<double> f(n, 0.0);
    f[v] = 1.0;
    r.min_indicator = std::min(r.min_indicator, nash_ratio(g, f));
    ++r.probes;
  }
  std::vector<char> is_interior(n, 0);
  for (int v : interior) is_interior[v] = 1;
  const std::size_t step = std::max<std::size_t>(1, interior.size() / 16);
  for (std::size_t k = 0; k < interior.size(); k += step) {
    const auto dist = bfs_distances(g, interior[k]);
    for (int radius = 1; radius <= std::max<std::int64_t>(1, g.radius); ++radius) {
      std::vector<double> f(n, 0.0);
      for (int v : interior)
        if (dist[v] != kUnreachable && dist[v] < radius) f[v] = radius - dist[v];
      r.min_tent = std::min(r.min_tent, nash_ratio(g, f));
      ++r.probes;
    }
  }
  CounterStream rng(seed);
  for (std::size_t k = 0; k < random_probes; ++k) {
    std::vector<double> f(n, 0.0);
    bool any = false;
    for (int v : interior) {
      const double u = rng.uniform();
      f[v] = u < 0.5 ? 1.0 : -1.0;
      any = true;
    }
    if (!any) continue;
    r.min_random = std::min(r.min_random, nash_ratio(g, f));
    ++r.probes;
  }
  r.min_ratio = std::min({r.min_indicator, r.min_tent, r.min_random});
  return r;
}

}  // namespace rcm
