#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

enum class KernelMethod { kUniformization, kMonteCarlo };
enum class Boundary { kPeriodic, kAbsorbing };

/// P^(t)(x, .) over a list of target sites.
struct KernelEstimate {
  double t = 0.0;
  LatticePoint source;
  int source_vertex = -1;
  KernelMethod method = KernelMethod::kUniformization;
  std::int64_t truncation_radius = 0;
  std::vector<LatticePoint> targets;
  std::vector<double> p;
  /// Binomial standard error (Monte Carlo) or the Poisson truncation bound (exact).
  std::vector<double> err;
  double truncation_bound = 0.0;
  std::size_t steps = 0;  // uniformization terms, or walks for Monte Carlo
  double total() const;
  double max_entry() const;
  /// p at a target, 0 if it is not listed.
  double at(const LatticePoint& y) const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Exact e^{tQ} row out of `source` by uniformization with Lambda = max rate.
/// Periodic: rates are graph rates, rows sum to 1. Absorbing: rates are the
/// infinite-environment rates, so jumps across the box cut are lost.
KernelEstimate kernel_uniformization(const FiniteGraph& g, int source, double t,
                                     double tolerance = 1e-13, Boundary boundary = Boundary::kPeriodic,
                                     std::size_t step_cap = 2'000'000);
/// All rows at once as a dense |V| x |V| matrix (small graphs only).
std::vector<std::vector<double>> kernel_matrix(const FiniteGraph& g, double t, double tolerance = 1e-14,
                                               Boundary boundary = Boundary::kPeriodic);

/// Time-t kernel on a torus with lifted displacements: entries (target, displacement).
/// Windings are tracked within +-window periods per axis; mass that leaves the
/// window is reported as `escaped`.
struct LiftedEntry {
  int target = 0;
  LatticePoint displacement;
  double p = 0.0;
};
struct LiftedKernel {
  int source = 0;
  double t = 0.0;
  std::vector<LiftedEntry> entries;
  double escaped = 0.0;
  double truncation_bound = 0.0;
  /// sum_y p |displacement|^2
  double second_moment() const;
};
LiftedKernel lifted_kernel(const FiniteGraph& torus, int source, double t, int window = 1,
                           double tolerance = 1e-14);

/// Empirical law of X_t over N VSRW runs.
KernelEstimate kernel_monte_carlo(const Environment& env, const LatticePoint& x, double t, std::size_t N,
                                  std::uint64_t seed, int workers = 1);
/// Graph version; targets are the graph vertices.
KernelEstimate kernel_monte_carlo(const FiniteGraph& g, int source, double t, std::size_t N,
                                  std::uint64_t seed, int workers = 1);

/// Largest |p_hat - p| / stderr over entries, with stderr floored at 1/N.
struct Agreement {
  double max_z = 0.0;
  double max_abs = 0.0;
  std::size_t entries = 0;
};
Agreement compare_kernels(const KernelEstimate& exact, const KernelEstimate& mc);

// ---------------------------------------------------------------------------
// Regimes

enum class Regime { kNearDiagonal, kGaussian, kExponential };
const char* to_string(Regime r);

/// |x-y|_inf <= sqrt(t): near-diagonal; otherwise Gaussian if t >= c6 |x-y|_inf,
/// exponential if not.
Regime classify(std::int64_t dist_inf, double t, double c6 = 1.0);

struct KernelProbe {
  double t = 0.0;
  std::int64_t dist_inf = 0;
  int graph_dist = -1;
  double p = 0.0;
};
/// Flattens estimates into probes (graph distances are filled when a graph is given).
std::vector<KernelProbe> probes_from(const std::vector<KernelEstimate>& ests, const FiniteGraph* g = nullptr);

struct UniformUpperFit {
  double c3 = 0.0;
  std::vector<double> times;
  std::vector<double> scaled_sup;  // sup_y p(t, x, y) t^(d/2)
  std::size_t masked = 0;          // estimates with t < 1
  double spread = 0.0;             // max / min of scaled_sup, minus 1
  nlohmann::json to_json() const;
};
UniformUpperFit check_uniform_upper(const std::vector<KernelEstimate>& ests, int d);

struct RegimeFit {
  Regime regime = Regime::kGaussian;
  std::vector<double> c5;  // candidate decay constants
  std::vector<double> c4;  // smallest prefactor for each c5
  std::size_t probes = 0;
  nlohmann::json to_json() const;
};
RegimeFit check_gaussian_upper(const std::vector<KernelProbe>& probes, int d, const std::vector<double>& c5,
                               double c6 = 1.0);
RegimeFit check_exponential_regime(const std::vector<KernelProbe>& probes, const std::vector<double>& c5,
                                   double c6 = 1.0);
/// Bound value for one probe in its regime (near-diagonal probes use the Gaussian form).
double regime_bound(const KernelProbe& pr, int d, double c4, double c5, double c6 = 1.0);

struct NearDiagonalFit {
  double c8 = 0.0;  // min p t^(d/2) over admitted probes
  std::size_t admitted = 0;
  std::size_t excluded = 0;
  nlohmann::json to_json() const;
};
/// Admits probes with graph distance <= c7 sqrt(t).
NearDiagonalFit check_near_diagonal_lower(const std::vector<KernelProbe>& probes, int d, double c7 = 0.5);

struct UProbeConfig {
  std::vector<double> times{1.0, 2.0, 4.0, 8.0};
  std::int64_t box_radius = 16;
  double c4 = 1.0;
  double c5 = 0.1;
  double c6 = 1.0;
  /// Entries below this are treated as numerically zero.
  double floor = 1e-300;
};
struct UEstimate {
  std::int64_t value = 1;
  bool censored = false;
  std::size_t violations = 0;
};
/// Smallest r >= 1 such that every probe with r < |x-y|_inf (outside the
/// near-diagonal zone) obeys the bound with the configured constants.
/// Censored when a violation sits within 2 sites of the box edge.
UEstimate estimate_U(const Environment& env, const LatticePoint& x, const UProbeConfig& cfg);

}  // namespace rcm
