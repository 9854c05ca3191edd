#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

/// Traversal time t(e) = mu(e)^(-1/2), in (0, 1] for mu >= 1.
double passage_weight(double conductance);

inline constexpr double kInfDistance = std::numeric_limits<double>::infinity();

struct PassageTree {
  std::vector<double> dist;  // kInfDistance if unreachable
  std::vector<int> parent;   // -1 for the source and unreachable vertices
};

/// Dijkstra under passage weights. Equal tentative distances are settled in
/// vertex-index order, which is lexicographic for box and torus graphs.
PassageTree fpp_tree(const FiniteGraph& g, int source);
double fpp_distance(const FiniteGraph& g, int x, int y);
/// Geodesic vertex sequence from x to y (empty if unreachable).
std::vector<int> fpp_geodesic(const FiniteGraph& g, int x, int y);
/// Sorted vertices with d^f(x, y) <= r.
std::vector<int> ball_fpp(const FiniteGraph& g, int x, double r);

struct C2Row {
  std::int64_t n = 0;
  double C2 = 0.0;
  std::size_t violations = 0;
  std::size_t samples = 0;  // non-void samples
  std::size_t voided = 0;
};

struct C2Study {
  std::vector<C2Row> rows;
  /// Per n: largest candidate with no violation among the valid samples (0 if none).
  std::vector<std::pair<std::int64_t, double>> fitted;
  /// Ordered pairs (origin, y) where d^f <= d_omega was checked; all passed.
  std::size_t domination_checks = 0;
  nlohmann::json to_json() const;
};

/// Tests B_{d^f}(0, C2 n) inside B_{d_omega}(0, n) on boxes of radius
/// box_factor * n + box_margin around the origin of rooted environments.
/// A sample is void when either ball reaches a box-truncated vertex.
C2Study estimate_C2(const Environment& base, const std::vector<std::int64_t>& radii,
                    const std::vector<double>& candidates, std::size_t environments,
                    std::uint64_t seed, double box_factor = 3.0, std::int64_t box_margin = 8,
                    int workers = 1);

}  // namespace rcm
