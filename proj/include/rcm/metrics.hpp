#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

inline constexpr int kUnreachable = -1;

/// Hop distances from `source` (every edge counts 1). Vertices beyond
/// `max_depth` (when >= 0) or in other components get kUnreachable.
std::vector<int> bfs_distances(const FiniteGraph& g, int source, int max_depth = -1);
/// Multi-source variant: distance to the nearest source.
std::vector<int> bfs_distances(const FiniteGraph& g, const std::vector<int>& sources,
                               int max_depth = -1);

/// d_omega between vertex indices; kUnreachable if not connected in g.
int graph_distance(const FiniteGraph& g, int x, int y);
int graph_distance(const FiniteGraph& g, const LatticePoint& x, const LatticePoint& y);

/// Sorted vertex indices within hop distance n of x.
std::vector<int> ball_graph(const FiniteGraph& g, int x, int n);

struct PathSegment {
  LatticePoint from;
  LatticePoint to;
  int axis = 0;
  bool slide = false;     // true for the search move along an axis
  bool crossing = false;  // slide that passes through the hyperplane x_axis = 0
};

/// Output of the greedy projection procedure from x to the origin.
struct PathRecord {
  std::vector<LatticePoint> sites;     // every lattice point visited, in order
  std::vector<LatticePoint> vertices;  // the open ones
  std::vector<PathSegment> segments;
  int crossings = 0;
  std::int64_t eta = 0;  // total overshoot of the crossing segments
  std::int64_t l1 = 0;   // |x|_1

  std::size_t edges() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  /// Lattice steps (sites - 1) <= |x|_1 + 2 eta.
  bool satisfies_size_bound() const {
    return static_cast<std::int64_t>(sites.size()) - 1 <= l1 + 2 * eta;
  }
};

/// Requires x and the origin open. Each round projects the current point
/// onto a coordinate hyperplane along the smallest admissible axis; if none is
/// open it slides along the smallest nonzero axis toward (and possibly past) 0.
PathRecord greedy_path(const Environment& env, const LatticePoint& x);

struct RadiusEstimate {
  std::int64_t value = 0;  // n_max + 1 when censored
  bool censored = false;
};

/// u_x: smallest n <= n_max with B_d(x, m) inside B_inf(x, C0 m) for every
/// m in [n, n_max]. Distances are exact (lazy search on the infinite graph).
RadiusEstimate estimate_u(const Environment& env, const LatticePoint& x, double C0,
                          std::int64_t n_max);
/// v_x: smallest n <= n_max with B_inf(x, m) cap V inside B_d(x, C1 m) for
/// every m in [n, n_max]. Sites farther than C1 n_max hops count as violations.
RadiusEstimate estimate_v(const Environment& env, const LatticePoint& x, double C1,
                          std::int64_t n_max);

struct TailPoint {
  std::int64_t n = 0;
  std::size_t exceed = 0;  // samples with value > n
  double prob = 0.0;
};
std::vector<TailPoint> tail_curve(const std::vector<RadiusEstimate>& samples, std::int64_t n_lo,
                                  std::int64_t n_hi);

struct TailFit {
  double slope = 0.0;  // least-squares slope of ln P(X > n) against n
  double r2 = 0.0;
  bool strictly_decreasing = false;
  bool all_positive = false;
};
TailFit fit_tail(const std::vector<TailPoint>& tail);

struct ComparisonStats {
  double C0 = 0.0;
  double C1 = 0.0;
  std::int64_t n_max = 0;
  std::vector<std::uint64_t> env_seeds;
  std::vector<RadiusEstimate> u;
  std::vector<RadiusEstimate> v;
  std::vector<TailPoint> u_tail;
  std::vector<TailPoint> v_tail;
  TailFit u_fit;
  TailFit v_fit;
  nlohmann::json to_json() const;
};

/// u_0 and v_0 over `environments` rooted environments derived from `seed`.
ComparisonStats comparison_study(const Environment& base, double C0, double C1,
                                 std::int64_t n_max, std::size_t environments, std::uint64_t seed,
                                 std::int64_t tail_lo, std::int64_t tail_hi, int workers = 1);

}  // namespace rcm
