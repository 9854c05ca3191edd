#include "rcm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"
#include "rcm/stats.hpp"

namespace rcm {

std::vector<int> bfs_distances(const FiniteGraph& g, const std::vector<int>& sources, int max_depth) {
  std::vector<int> dist(g.vertices.size(), kUnreachable);
  std::deque<int> q;
  for (int s : sources) {
    if (dist[s] == kUnreachable) {
      dist[s] = 0;
      q.push_back(s);
    }
  }
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    if (max_depth >= 0 && dist[u] >= max_depth) continue;
    for (const auto& a : g.adjacency[u]) {
      if (dist[a.vertex] == kUnreachable) {
        dist[a.vertex] = dist[u] + 1;
        q.push_back(a.vertex);
      }
    }
  }
  return dist;
}

std::vector<int> bfs_distances(const FiniteGraph& g, int source, int max_depth) {
  return bfs_distances(g, std::vector<int>{source}, max_depth);
}

int graph_distance(const FiniteGraph& g, int x, int y) {
  if (x == y) return 0;
  return bfs_distances(g, x)[y];
}

int graph_distance(const FiniteGraph& g, const LatticePoint& x, const LatticePoint& y) {
  auto ix = g.index_of(x), iy = g.index_of(y);
  if (!ix || !iy) throw std::invalid_argument("point is not a vertex of the graph");
  return graph_distance(g, *ix, *iy);
}

std::vector<int> ball_graph(const FiniteGraph& g, int x, int n) {
  const auto dist = bfs_distances(g, x, n);
  std::vector<int> out;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (dist[v] != kUnreachable) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

LatticePoint project(LatticePoint x, int axis) {
  x[axis] = 0;
  return x;
}

// Smallest axis j with x_j != 0 and P_j(x) open, or -1.
int projectable_axis(const Environment& env, const LatticePoint& x) {
  for (int j = 0; j < x.dim(); ++j)
    if (x[j] != 0 && env.site_open(project(x, j))) return j;
  return -1;
}

void walk_segment(const Environment& env, PathRecord& rec, const LatticePoint& from,
                  const LatticePoint& to, int axis) {
  const std::int64_t step = to[axis] > from[axis] ? 1 : -1;
  LatticePoint y = from;
  while (y[axis] != to[axis]) {
    y[axis] += step;
    rec.sites.push_back(y);
    if (env.site_open(y)) rec.vertices.push_back(y);
  }
}

}  // namespace

PathRecord greedy_path(const Environment& env, const LatticePoint& x) {
  if (!env.site_open(x)) throw std::invalid_argument("greedy_path: start " + x.to_string() + " is closed");
  const LatticePoint origin = LatticePoint::origin(env.dim());
  if (!env.site_open(origin)) throw std::invalid_argument("greedy_path: origin is closed");
  PathRecord rec;
  rec.l1 = x.norm1();
  rec.sites.push_back(x);
  rec.vertices.push_back(x);
  LatticePoint cur = x;
  while (!(cur == origin)) {
    int j = projectable_axis(env, cur);
    if (j < 0) {
      int i = 0;
      while (cur[i] == 0) ++i;
      const std::int64_t dir = cur[i] > 0 ? -1 : 1;
      LatticePoint y = cur;
      std::int64_t moved = 0;
      while (true) {
        y[i] += dir;
        if (++moved > env.scan_limit())
          throw ScanLimitExceeded("greedy slide from " + cur.to_string() + " exceeded the scan limit");
        if (env.site_open(y) && (j = projectable_axis(env, y)) >= 0) break;
      }
      PathSegment s{cur, y, i, true, cur[i] * y[i] < 0};
      walk_segment(env, rec, cur, y, i);
      if (s.crossing) {
        ++rec.crossings;
        rec.eta += std::llabs(y[i]);
      }
      rec.segments.push_back(s);
      cur = y;
    }
    const LatticePoint next = project(cur, j);
    walk_segment(env, rec, cur, next, j);
    rec.segments.push_back({cur, next, j, false, false});
    cur = next;
  }
  return rec;
}

// ---------------------------------------------------------------------------

namespace {

// Hop distances from x on the infinite graph, up to `depth`.
std::unordered_map<LatticePoint, int, LatticePointHash> lazy_bfs(const Environment& env,
                                                                const LatticePoint& x, int depth) {
  std::unordered_map<LatticePoint, int, LatticePointHash> dist;
  dist.emplace(x, 0);
  std::vector<LatticePoint> frontier{x};
  for (int k = 1; k <= depth && !frontier.empty(); ++k) {
    std::vector<LatticePoint> next;
    for (const auto& y : frontier) {
      for (int axis = 0; axis < env.dim(); ++axis) {
        for (int dir : {1, -1}) {
          const EdgeRecord e = env.neighbor_along_axis(y, axis, dir);
          const LatticePoint z = y + LatticePoint::unit(env.dim(), axis, dir * e.length);
          if (dist.emplace(z, k).second) next.push_back(z);
        }
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

// Smallest n in [1, n_max] with ok[m] for every m in [n, n_max].
RadiusEstimate from_flags(const std::vector<bool>& ok, std::int64_t n_max) {
  RadiusEstimate r;
  std::int64_t n = n_max + 1;
  for (std::int64_t m = n_max; m >= 1 && ok[m]; --m) n = m;
  r.value = n;
  r.censored = n > n_max;
  return r;
}

}  // namespace

RadiusEstimate estimate_u(const Environment& env, const LatticePoint& x, double C0,
                          std::int64_t n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const auto dist = lazy_bfs(env, x, static_cast<int>(n_max));
  std::vector<std::int64_t> reach(n_max + 1, 0);  // max |y - x|_inf at hop distance exactly m
  for (const auto& [y, k] : dist) reach[k] = std::max(reach[k], (y - x).norm_inf());
  std::vector<bool> ok(n_max + 1, true);
  std::int64_t r = 0;
  for (std::int64_t m = 1; m <= n_max; ++m) {
    r = std::max(r, reach[m]);
    ok[m] = static_cast<double>(r) <= C0 * static_cast<double>(m);
  }
  return from_flags(ok, n_max);
}

RadiusEstimate estimate_v(const Environment& env, const LatticePoint& x, double C1,
                          std::int64_t n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const int depth = static_cast<int>(std::floor(C1 * static_cast<double>(n_max)));
  const auto dist = lazy_bfs(env, x, depth);
  // worst[m]: largest hop distance to an open site at l_inf distance exactly m
  std::vector<std::int64_t> worst(n_max + 1, 0);
  const std::int64_t unreached = std::numeric_limits<std::int64_t>::max();
  for (const auto& y : ball_linf(x, n_max)) {
    if (!env.site_open(y)) continue;
    const std::int64_t m = (y - x).norm_inf();
    auto it = dist.find(y);
    worst[m] = std::max(worst[m], it == dist.end() ? unreached : static_cast<std::int64_t>(it->second));
  }
  std::vector<bool> ok(n_max + 1, true);
  std::int64_t w = 0;
  for (std::int64_t m = 1; m <= n_max; ++m) {
    w = std::max(w, worst[m]);
    ok[m] = w != unreached && static_cast<double>(w) <= C1 * static_cast<double>(m);
  }
  return from_flags(ok, n_max);
}

std::vector<TailPoint> tail_curve(const std::vector<RadiusEstimate>& samples, std::int64_t n_lo,
                                  std::int64_t n_hi) {
  std::vector<TailPoint> out;
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    TailPoint t;
    t.n = n;
    for (const auto& s : samples)
      if (s.value > n) ++t.exceed;
    t.prob = samples.empty() ? 0.0 : static_cast<double>(t.exceed) / static_cast<double>(samples.size());
    out.push_back(t);
  }
  return out;
}

TailFit fit_tail(const std::vector<TailPoint>& tail) {
  TailFit f;
  f.all_positive = !tail.empty();
  f.strictly_decreasing = true;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    if (tail[i].exceed == 0) f.all_positive = false;
    if (i > 0 && !(tail[i].exceed < tail[i - 1].exceed)) f.strictly_decreasing = false;
  }
  std::vector<double> xs, ys;
  for (const auto& t : tail) {
    if (t.exceed == 0) continue;
    xs.push_back(static_cast<double>(t.n));
    ys.push_back(std::log(t.prob));
  }
  if (xs.size() >= 2) {
    const auto lf = linear_fit(xs, ys);
    f.slope = lf.slope;
    f.r2 = lf.r2;
  }
  return f;
}

nlohmann::json ComparisonStats::to_json() const {
  auto tail = [](const std::vector<TailPoint>& t) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : t) a.push_back({{"n", p.n}, {"exceed", p.exceed}, {"prob", p.prob}});
    return a;
  };
  auto fit = [](const TailFit& f) {
    return nlohmann::json{{"slope", f.slope},
                          {"r2", f.r2},
                          {"strictly_decreasing", f.strictly_decreasing},
                          {"all_positive", f.all_positive}};
  };
  return {{"C0", C0},          {"C1", C1},          {"n_max", n_max},
          {"samples", u.size()}, {"u_tail", tail(u_tail)}, {"v_tail", tail(v_tail)},
          {"u_fit", fit(u_fit)}, {"v_fit", fit(v_fit)}};
}

ComparisonStats comparison_study(const Environment& base, double C0, double C1,
                                 std::int64_t n_max, std::size_t environments, std::uint64_t seed,
                                 std::int64_t tail_lo, std::int64_t tail_hi, int workers) {
  ComparisonStats s;
  s.C0 = C0;
  s.C1 = C1;
  s.n_max = n_max;
  s.u.resize(environments);
  s.v.resize(environments);
  s.env_seeds.resize(environments);
  const LatticePoint origin = LatticePoint::origin(base.dim());
  parallel_for(environments, workers, [&](std::size_t i) {
    const Environment env = rooted_environment(base, derive_seed(seed, i));
    s.env_seeds[i] = env.seed();
    s.u[i] = estimate_u(env, origin, C0, n_max);
    s.v[i] = estimate_v(env, origin, C1, n_max);
  });
  s.u_tail = tail_curve(s.u, tail_lo, tail_hi);
  s.v_tail = tail_curve(s.v, tail_lo, tail_hi);
  s.u_fit = fit_tail(s.u_tail);
  s.v_fit = fit_tail(s.v_tail);
  return s;
}

}  // namespace rcm
