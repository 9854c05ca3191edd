#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rcm/lattice.hpp"

namespace rcm {

/// Raised when no open site is found within the configured scan limit.
/// This is a resource limit of the artifact, not a property of the model.
class ScanLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computation would exceed a configured memory or step budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by periodize() when some torus line contains no open site.
class PeriodizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LawKind { kConstant, kShiftedPareto, kShiftedExponential, kTwoPoint };

/// Conductance distribution supported on [1, inf). Sampling is by inversion
/// of a single uniform, so every draw is >= 1 by construction.
struct ConductanceLaw {
  LawKind kind = LawKind::kConstant;
  double value = 1.0;  // constant value; tail exponent a for pareto; rate for exponential
  double v1 = 1.0;     // two-point support
  double v2 = 1.0;
  double prob = 0.5;   // P(mu = v1) for two-point

  static ConductanceLaw constant(double c) { return {LawKind::kConstant, c}; }
  /// Density a * v^(-a-1) on [1, inf).
  static ConductanceLaw shifted_pareto(double a) { return {LawKind::kShiftedPareto, a}; }
  /// 1 + Exp(rate).
  static ConductanceLaw shifted_exponential(double rate) {
    return {LawKind::kShiftedExponential, rate};
  }
  static ConductanceLaw two_point(double v1, double v2, double prob) {
    return {LawKind::kTwoPoint, 0.0, v1, v2, prob};
  }

  void validate() const;
  /// u uniform in [0, 1).
  double sample(double u) const;
  /// E mu(e); +inf for pareto with a <= 1.
  double mean() const;
  std::string name() const;

  nlohmann::json to_json() const;
  static ConductanceLaw from_json(const nlohmann::json& j);
};

/// Axis-parallel edge (base, base + length * e_axis) of the long-range graph.
struct EdgeRecord {
  LatticePoint base;  // lesser endpoint along the axis
  int axis = 0;       // 0-based
  std::int64_t length = 1;
  double conductance = 1.0;

  LatticePoint other_end() const { return base + LatticePoint::unit(base.dim(), axis, length); }
};

/// Seed-deterministic infinite environment. Every query is a pure function of
/// (seed, query), so instances are freely shareable across threads.
class Environment {
 public:
  Environment(int dim, double p, std::uint64_t seed, ConductanceLaw law = ConductanceLaw::constant(1.0),
              std::int64_t scan_limit = 0);

  int dim() const { return dim_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  const ConductanceLaw& law() const { return law_; }
  std::int64_t scan_limit() const { return scan_limit_; }
  /// d = 1 is supported for solver oracles only; the model needs d >= 2.
  bool within_model_assumptions() const { return dim_ >= 2; }

  bool site_open(const LatticePoint& x) const;
  /// Nearest open site from open x along +/- e_axis (direction = +1 or -1).
  EdgeRecord neighbor_along_axis(const LatticePoint& x, int axis, int direction) const;
  /// Conductance of the edge keyed by (lesser endpoint, axis).
  double edge_conductance(const LatticePoint& base, int axis) const;
  /// mu(x): sum of the 2d incident conductances.
  double total_rate(const LatticePoint& x) const;

  Environment with_seed(std::uint64_t seed) const {
    return Environment(dim_, p_, seed, law_, scan_limit_);
  }

  nlohmann::json to_json() const;
  static Environment from_json(const nlohmann::json& j);

 private:
  void check_point(const LatticePoint& x) const;
  /// Smallest h in [1, limit] with x + h*dir*e_axis open, or 0 if none.
  std::int64_t scan(const LatticePoint& x, int axis, int direction, std::int64_t limit) const;

  int dim_;
  double p_;
  std::uint64_t seed_;
  ConductanceLaw law_;
  std::int64_t scan_limit_;
};

/// First environment in the sequence derived from `base` whose origin is open.
/// Sampling this way realizes the conditional measure given 0 in V exactly.
Environment rooted_environment(const Environment& base, std::uint64_t seed);

struct GraphEdge {
  int u = 0;
  int v = 0;
  EdgeRecord record;
  LatticePoint displacement;  // lifted position of v minus lifted position of u
};

struct Adjacent {
  int vertex = 0;
  int edge = 0;
  int sign = 1;  // +1 if traversing edge from u to v, -1 otherwise
};

/// Materialized finite graph: an induced box subgraph, a torus, or an
/// arbitrary weighted graph built from an edge list.
class FiniteGraph {
 public:
  int dim = 1;
  LatticePoint center;
  std::int64_t radius = 0;
  bool periodic = false;
  std::int64_t period = 0;
  std::vector<LatticePoint> vertices;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<Adjacent>> adjacency;
  /// Total jump rate mu(y) in the infinite environment. Equals the sum of the
  /// incident conductances in the graph unless edges were cut by the box.
  std::vector<double> vertex_rate;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int degree(int v) const { return static_cast<int>(adjacency[v].size()); }
  /// Counting measure m(y) = degree of y.
  double measure(int v) const { return static_cast<double>(degree(v)); }
  /// Sum of incident conductances within the graph.
  double graph_rate(int v) const;
  std::optional<int> index_of(const LatticePoint& x) const;
  bool is_connected() const;
  /// Connected components as vertex lists, ordered by smallest member.
  std::vector<std::vector<int>> components() const;
  /// True if some vertex lost an incident edge to the box cut.
  bool is_truncated(int v) const { return degree(v) < 2 * dim; }

  /// Arbitrary weighted graph; vertex i is placed at (i) in d = 1.
  struct SimpleEdge {
    int u;
    int v;
    double conductance;
  };
  static FiniteGraph from_edges(int num_vertices, const std::vector<SimpleEdge>& edges);

  /// Appends an edge and updates adjacency. Endpoints must already exist.
  void add_edge(int u, int v, const EdgeRecord& rec, const LatticePoint& displacement);
  void rebuild_index();

  std::string to_csv() const;
  nlohmann::json to_json() const;

 private:
  std::unordered_map<LatticePoint, int, LatticePointHash> index_;
};

/// Induced subgraph on the open sites of B_inf(center, n).
FiniteGraph restrict_to_box(const Environment& env, const LatticePoint& center, std::int64_t n,
                            std::int64_t max_sites = 50'000'000);

/// Torus on [-n, n]^d: axis edges join cyclically consecutive open sites.
FiniteGraph periodize(const Environment& env, std::int64_t n, std::int64_t max_sites = 50'000'000);

}  // namespace rcm
