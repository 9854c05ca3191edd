#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

/// Raised when a ball reaches vertices whose edges were cut by the working box.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Cuts

/// Edge ids with exactly one endpoint in A. Self-loops never count.
std::vector<int> edge_boundary(const FiniteGraph& g, const std::vector<char>& in_A);
std::vector<int> edge_boundary(const FiniteGraph& g, const std::vector<int>& A);
/// m(A): sum of degrees.
double subset_measure(const FiniteGraph& g, const std::vector<int>& A);

/// |P_i(A)| for each axis: number of distinct points after zeroing coordinate i.
std::vector<std::size_t> projection_sizes(const std::vector<LatticePoint>& A);

struct SubsetCut {
  std::vector<int> subset;
  std::vector<int> boundary;
  std::vector<std::size_t> projections;
  double measure = 0.0;
};
SubsetCut make_cut(const FiniteGraph& g, const std::vector<int>& subset);

// ---------------------------------------------------------------------------
// Isoperimetric constant

struct IsoResult {
  std::int64_t boundary = 0;  // |dA| of the witness
  std::int64_t measure = 1;   // m(A) of the witness
  double value = 0.0;         // boundary / measure
  std::vector<int> witness;
  bool connected = true;
};

/// Exact min over nonempty A with |A| <= |V|/2 of |dA| / m(A), by Gray-code
/// enumeration. Subsets with m(A) = 0 are skipped. A disconnected graph gives 0
/// with its smallest component of positive mass when that fits in |V|/2.
IsoResult isoperimetric_constant(const FiniteGraph& g, int cap = 22);

struct CheegerBounds {
  double lower = 0.0;           // max of the two certified bounds
  double spectral_lower = 0.0;  // lambda_2 * (smallest ceil(|V|/2) degrees) / vol(V)
  double flow_lower = 0.0;      // ceil(|V|/2) / (max edge congestion * max degree)
  double upper = 0.0;           // best sweep cut found
  double lambda2 = 0.0;         // normalized Laplacian
  std::vector<int> upper_witness;
  bool connected = true;
  bool spectral_computed = false;
  nlohmann::json to_json() const;
};

/// Certified bracket for the isoperimetric constant. The spectral part needs
/// a dense eigensolve and is skipped above `dense_cap` vertices; the sweep
/// over the Fiedler vector is done only when `fiedler_sweep` is set.
CheegerBounds cheeger_bounds(const FiniteGraph& g, int dense_cap = 2500, bool fiedler_sweep = true);

/// Shortest-path edge congestion: for every unordered vertex pair one unit of
/// flow split evenly over all shortest paths (Brandes accumulation). Paths are
/// shortest for the integer edge weights, or in hops when `weights` is empty.
std::vector<double> edge_congestion(const FiniteGraph& g, const std::vector<std::int64_t>& weights = {});

struct Lemma5Row {
  double p = 0.0;
  std::int64_t n = 0;
  std::uint64_t env_seed = 0;
  bool connected = true;
  double lower = 0.0;
  double n_lower = 0.0;
};

struct Lemma5Report {
  std::vector<Lemma5Row> rows;
  /// Per n: min over connected samples of n * lower, and the excluded count.
  std::vector<std::int64_t> radii;
  std::vector<double> ensemble_min;
  std::vector<std::size_t> excluded;
  /// Least-squares slope of log(ensemble_min) against log(n).
  double log_slope = 0.0;
  nlohmann::json to_json() const;
};

Lemma5Report check_lemma5_scaling(const Environment& base, const std::vector<std::int64_t>& radii,
                                  std::size_t environments, std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// Projections and densities

struct LoomisWhitney {
  std::vector<std::size_t> projections;
  double lhs = 0.0;  // sum_i |P_i(A)|
  double rhs = 0.0;  // d |A|^(1 - 1/d)
  bool holds = true;
};
LoomisWhitney loomis_whitney_check(const std::vector<LatticePoint>& A, int d);

struct DensityReport {
  std::int64_t n = 0;
  int L = 1;
  double p = 0.0;
  double min_line = 1.0;
  double max_line = 0.0;
  std::size_t lines = 0;
  std::size_t line_violations = 0;  // outside [p/2, 2p]
  double min_projection = 1.0;
  std::size_t projections = 0;
  std::size_t projection_violations = 0;  // below 1 - 2 (1-p)^L
  nlohmann::json to_json() const;
};

/// L = ceil(log 4 / -log(1-p)), at least 1.
int default_parallel_lines(double p);
DensityReport lemma3_densities(const Environment& env, std::int64_t n, int L);

struct DichotomySample {
  double min_ratio = 0.0;  // min |dA| / sum_i |P_i(A)|
  std::size_t samples = 0;
};
/// Random subsets with |A| < (1 - eps)|V|, grown as graph balls and thinned.
DichotomySample sampled_dichotomy(const FiniteGraph& g, double eps, std::size_t samples,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Poincare and Nash

struct PoincareReport {
  std::int64_t radius = 0;
  std::size_t vertices = 0;
  std::string weights = "uniform";
  double lambda2 = 0.0;
  double C = 0.0;            // 1 / lambda2
  double variational = 0.0;  // Var/Dirichlet ratio of the returned eigenfunction
  std::vector<double> fiedler;
  double C_over_n2() const { return radius > 0 ? C / static_cast<double>(radius * radius) : C; }
  nlohmann::json to_json() const;
};

/// Best C in inf_a sum (f - a)^2 m <= C sum_e w_e (f(u) - f(v))^2, i.e. one over
/// the second generalized eigenvalue of (L_w, diag m). Empty `edge_weights`
/// means unit weights; empty `measure` means the degree measure.
PoincareReport poincare_constant(const FiniteGraph& g, std::vector<double> edge_weights = {},
                                 std::vector<double> measure = {});
/// Same quantity by deflated power iteration (independent of the dense solver).
double poincare_constant_iterative(const FiniteGraph& g, std::vector<double> edge_weights = {},
                                   std::vector<double> measure = {}, double tol = 1e-13,
                                   std::size_t max_iter = 2'000'000);

struct WeightedBall {
  FiniteGraph ball;         // induced subgraph on B_d(x, n)
  std::vector<double> phi;  // cutoff weight per ball vertex
  std::vector<int> boundary_distance;
};
/// phi(y) = ((n ^ d(y, B^c)) / n)^2 on B_d(x, n), computed on a box of the
/// given radius around x. Throws TruncationError if the box is too small.
WeightedBall weighted_ball(const Environment& env, const LatticePoint& x, std::int64_t n,
                           std::int64_t box_radius);

/// Weighted Poincare constant on B_d(x, n): LHS measure phi m, edge weights
/// phi(y) ^ phi(y'). The box grows until the ball fits.
PoincareReport weighted_poincare_check(const Environment& env, const LatticePoint& x, std::int64_t n);

struct NashReport {
  double min_ratio = 0.0;
  double min_indicator = 0.0;
  double min_tent = 0.0;
  double min_random = 0.0;
  std::size_t probes = 0;
  nlohmann::json to_json() const;
};

/// (1/2) sum over directed edges (f(x)-f(y))^2 divided by
/// ||f||_2^(2+4/d) ||f||_1^(-4/d), minimized over probes supported on
/// non-truncated vertices.
double nash_ratio(const FiniteGraph& g, const std::vector<double>& f);
NashReport nash_constant_witness(const FiniteGraph& g, std::size_t random_probes, std::uint64_t seed);

}  // namespace rcm
