#include "rcm/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "rcm/metrics.hpp"
#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"

namespace rcm {

double passage_weight(double conductance) {
  if (!(conductance >= 1.0)) throw std::invalid_argument("conductance must be >= 1");
  return 1.0 / std::sqrt(conductance);
}

PassageTree fpp_tree(const FiniteGraph& g, int source) {
  PassageTree t;
  t.dist.assign(g.vertices.size(), kInfDistance);
  t.parent.assign(g.vertices.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  std::vector<char> done(g.vertices.size(), 0);
  t.dist[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    for (const auto& a : g.adjacency[u]) {
      const double nd = d + passage_weight(g.edges[a.edge].record.conductance);
      if (nd < t.dist[a.vertex] || (nd == t.dist[a.vertex] && !done[a.vertex] && u < t.parent[a.vertex])) {
        t.dist[a.vertex] = nd;
        t.parent[a.vertex] = u;
        pq.push({nd, a.vertex});
      }
    }
  }
  return t;
}

double fpp_distance(const FiniteGraph& g, int x, int y) {
  if (x == y) return 0.0;
  return fpp_tree(g, x).dist[y];
}

std::vector<int> fpp_geodesic(const FiniteGraph& g, int x, int y) {
  const auto t = fpp_tree(g, x);
  if (t.dist[y] == kInfDistance) return {};
  std::vector<int> path;
  for (int v = y; v != -1; v = t.parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> ball_fpp(const FiniteGraph& g, int x, double r) {
  const auto t = fpp_tree(g, x);
  std::vector<int> out;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (t.dist[v] <= r) out.push_back(v);
  return out;
}

nlohmann::json C2Study::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"n", r.n},
                  {"C2", r.C2},
                  {"violations", r.violations},
                  {"samples", r.samples},
                  {"voided", r.voided}});
  nlohmann::json f = nlohmann::json::array();
  for (const auto& [n, c] : fitted) f.push_back({{"n", n}, {"C2", c}});
  return {{"rows", rs}, {"fitted", f}, {"domination_checks", domination_checks}};
}

C2Study estimate_C2(const Environment& base, const std::vector<std::int64_t>& radii,
                    const std::vector<double>& candidates, std::size_t environments,
                    std::uint64_t seed, double box_factor, std::int64_t box_margin, int workers) {
  const std::size_t R = radii.size(), K = candidates.size();
  // outcome[(env * R + r) * K + k]: 0 ok, 1 violation, 2 void
  std::vector<char> outcome(environments * R * K, 0);
  std::vector<std::size_t> checks(environments, 0);
  const LatticePoint origin = LatticePoint::origin(base.dim());
  parallel_for(environments, workers, [&](std::size_t e) {
    const Environment env = rooted_environment(base, derive_seed(seed, e));
    for (std::size_t r = 0; r < R; ++r) {
      const std::int64_t n = radii[r];
      const auto box_r = static_cast<std::int64_t>(std::ceil(box_factor * static_cast<double>(n))) + box_margin;
      const FiniteGraph g = restrict_to_box(env, origin, box_r);
      const int o = *g.index_of(origin);
      const auto hops = bfs_distances(g, o);
      const auto tree = fpp_tree(g, o);
      for (int v = 0; v < g.num_vertices(); ++v) {
        if (hops[v] == kUnreachable) continue;
        ++checks[e];
        if (!(tree.dist[v] <= hops[v] + 1e-9))
          throw std::logic_error("passage distance exceeds hop distance at " + g.vertices[v].to_string());
      }
      for (std::size_t k = 0; k < K; ++k) {
        const double radius = candidates[k] * static_cast<double>(n);
        bool voided = false, violated = false;
        for (int v = 0; v < g.num_vertices(); ++v) {
          const bool in_f = tree.dist[v] <= radius + 1e-12;
          const bool in_w = hops[v] != kUnreachable && hops[v] <= n;
          if ((in_f || in_w) && g.is_truncated(v)) voided = true;
          if (in_f && !in_w) violated = true;
        }
        outcome[(e * R + r) * K + k] = voided ? 2 : (violated ? 1 : 0);
      }
    }
  });
  C2Study s;
  for (auto c : checks) s.domination_checks += c;
  for (std::size_t r = 0; r < R; ++r) {
    double best = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      C2Row row;
      row.n = radii[r];
      row.C2 = candidates[k];
      for (std::size_t e = 0; e < environments; ++e) {
        const char o = outcome[(e * R + r) * K + k];
        if (o == 2) ++row.voided;
        else {
          ++row.samples;
          if (o == 1) ++row.violations;
        }
      }
      if (row.violations == 0 && row.samples > 0) best = std::max(best, row.C2);
      s.rows.push_back(row);
    }
    s.fitted.emplace_back(radii[r], best);
  }
  return s;
}

}  // namespace rcm
