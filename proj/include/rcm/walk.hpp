#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"
#include "rcm/rng.hpp"

namespace rcm {

enum class WalkKind { kVariableSpeed, kConstantSpeed };

const char* to_string(WalkKind kind);

struct JumpOption {
  LatticePoint target;  // lifted position after the jump
  int vertex = -1;      // torus/graph vertex index, -1 in the infinite environment
  double conductance = 0.0;
  double probability = 0.0;
};

/// One-step law mu(x,y)/mu(x) out of x.
struct StepDistribution {
  LatticePoint source;
  std::vector<JumpOption> options;
  double total_rate = 0.0;
};

StepDistribution step_distribution(const Environment& env, const LatticePoint& x);
/// Graph variant: lifted targets are `lifted + displacement` of each incident edge.
StepDistribution step_distribution(const FiniteGraph& g, int vertex, const LatticePoint& lifted);

/// Time-stamped jump sequence. times[0] = 0 and positions[k] is occupied on
/// [times[k], times[k+1]). The state is frozen at the horizon.
struct Trajectory {
  WalkKind kind = WalkKind::kVariableSpeed;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<LatticePoint> positions;
  std::vector<int> vertices;   // graph walks only
  /// Holding rate of the walk's clock at each position: mu(x) for the VSRW, 1 for the CSRW.
  std::vector<double> rates;
  /// mu(x) at each position; slope of A(t) on that segment.
  std::vector<double> site_rates;

  std::size_t jumps() const { return times.empty() ? 0 : times.size() - 1; }
  /// X_t for t in [0, horizon] (right-continuous).
  const LatticePoint& position_at(double t) const;
  /// A(t) = int_0^t mu(X_s) ds, exact piecewise-linear evaluation.
  double conductance_time(double t) const;
  /// A(horizon).
  double total_conductance_time() const { return conductance_time(horizon); }
};

/// Walk-driver randomness is keyed by (walk seed, event index): event k uses
/// counters 2k (holding time) and 2k+1 (jump choice).
Trajectory simulate_vsrw(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed);
Trajectory simulate_csrw(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed);
Trajectory simulate_walk(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed, WalkKind kind);
/// Walk on a finite graph (torus or box); positions are lifted through edge displacements.
Trajectory simulate_walk(const FiniteGraph& g, int start, double horizon, std::uint64_t seed,
                         WalkKind kind);

/// Positions and A(t) at the grid times without storing the full path.
struct GridSample {
  std::vector<LatticePoint> positions;  // one per grid time
  std::vector<double> conductance_time;
  std::uint64_t jumps = 0;
};
GridSample sample_walk(const Environment& env, const LatticePoint& x0, std::span<const double> grid,
                       std::uint64_t seed, WalkKind kind);
GridSample sample_walk(const FiniteGraph& g, int start, std::span<const double> grid,
                       std::uint64_t seed, WalkKind kind);

/// CSRW path X_{theta(t)} obtained by inverting A on a VSRW trajectory.
/// The result covers [0, A(horizon)].
Trajectory time_change(const Trajectory& vsrw);

/// eps * X_{s / eps^2} on the uniform grid s = k / steps, k = 0..steps.
struct RescaledPath {
  double eps = 1.0;
  std::vector<double> s;
  std::vector<std::array<double, kMaxDim>> values;
  int dim = 0;
};
RescaledPath rescale(const Trajectory& traj, double eps, int steps);

/// X_0, X_1, ..., X_n at integer times.
std::vector<LatticePoint> discretize(const Trajectory& traj, std::int64_t n);
std::vector<int> discretize_vertices(const Trajectory& traj, std::int64_t n);

/// Binary columnar dump: header "RCMTRJ01", u64 count, u32 dim, f64 times[count],
/// i64 positions[count * dim]; plus a JSON sidecar with seeds and horizon.
void write_trajectory(const Trajectory& traj, const nlohmann::json& env_spec,
                      const std::filesystem::path& bin_path);
Trajectory read_trajectory(const std::filesystem::path& bin_path);

}  // namespace rcm
