#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

enum class WeightConvention { kGenerator, kTimeOne };
const char* to_string(WeightConvention c);

/// Undirected weighted pair; disp is the lifted displacement from u to v, so
/// phi(v) - phi(u) = disp. Pairs with u == v carry a winding (disp != 0).
struct WeightedPair {
  int u = 0;
  int v = 0;
  double weight = 0.0;
  LatticePoint disp;
};

struct HarmonicProblem {
  const FiniteGraph* torus = nullptr;
  WeightConvention convention = WeightConvention::kGenerator;
  std::vector<WeightedPair> pairs;
  /// Time-one convention only: average over x of E_x |X_1|^2, and the mass
  /// that wound too far to be tracked.
  double second_moment = 0.0;
  double escaped = 0.0;
  int dim() const { return torus->dim; }
  int num_vertices() const { return torus->num_vertices(); }
};

/// Weights mu(e) on the torus edges.
HarmonicProblem generator_problem(const FiniteGraph& torus);
/// Weights P^(1)(x, y) from the lifted time-one kernel.
HarmonicProblem time_one_problem(const FiniteGraph& torus, int window = 1, double tolerance = 1e-14,
                                 int workers = 1);

/// Per-vertex vector field, stored row-major (vertex * d + axis).
struct CorrectorField {
  int dim = 0;
  WeightConvention convention = WeightConvention::kGenerator;
  std::vector<LatticePoint> vertices;
  std::vector<double> chi;
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Normalized Dirichlet norms: sum over pairs of w |df|^2, divided by |V|.
  double norm_phi = 0.0;
  double norm_chi = 0.0;
  double norm_psi = 0.0;
  /// Normalized <grad psi, grad chi>.
  double cross = 0.0;
  double at(int v, int axis) const { return chi[static_cast<std::size_t>(v) * dim + axis]; }
  /// |norm_psi - (norm_phi - norm_chi)| / norm_phi.
  double pythagoras_error() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Zero field on the problem's torus (for residual baselines).
CorrectorField zero_field(const HarmonicProblem& prob);

/// Solves L chi = -L phi per coordinate by preconditioned conjugate gradients,
/// then fixes the gauge to mean zero.
CorrectorField solve_corrector(const HarmonicProblem& prob, double tolerance = 1e-10);

/// sum over pairs of w |f(v) - f(u) + shift * disp|^2 for a d-vector field f,
/// i.e. half the directed sum. shift = 1 adds phi.
double dirichlet_norm(const HarmonicProblem& prob, const std::vector<double>& f, double shift = 0.0);

/// max_x,i |sum_y w(x,y) ((phi + chi)(y) - (phi + chi)(x))_i|
double harmonicity_residual(const HarmonicProblem& prob, const CorrectorField& field);

/// Fills the norm fields and residual of `field` against `prob`.
void evaluate_field(const HarmonicProblem& prob, CorrectorField& field);

struct SigmaRow {
  std::int64_t n = 0;
  std::uint64_t env_seed = 0;
  std::size_t vertices = 0;
  double sigma2_generator = 0.0;  // (2/d) ||grad psi||^2 under mu
  double sigma2_time_one = 0.0;   // (E|X_1|^2 - 2 ||grad chi||^2) / d
  double second_moment = 0.0;
  double chi_norm = 0.0;          // time-one ||grad chi||^2
  double escaped = 0.0;
  double residual = 0.0;
};
struct SigmaSummary {
  std::int64_t n = 0;
  std::size_t environments = 0;
  double generator_mean = 0.0;
  double generator_se = 0.0;
  double time_one_mean = 0.0;
  double time_one_se = 0.0;
};
struct SigmaReport {
  std::vector<SigmaRow> rows;
  std::vector<SigmaSummary> summary;
  bool positive = true;
  nlohmann::json to_json() const;
};

/// Per-box estimates over environments derived from `seed`. The time-one
/// route is skipped when `time_one` is false.
SigmaReport sigma_v_from_corrector(const Environment& base, const std::vector<std::int64_t>& radii,
                                   std::size_t environments, std::uint64_t seed, bool time_one = true,
                                   int workers = 1);

struct SublinearityRow {
  std::int64_t n = 0;
  std::vector<double> eps;
  std::vector<double> density;  // (2n+1)^-d #{x : |chi(x)|_inf >= eps n}
  double max_ratio = 0.0;       // max_x |chi(x)|_inf / n
  double axis_ratio = 0.0;      // max over open x on the first axis of |chi(x)|_inf / |x|
};
struct SublinearityReport {
  std::vector<SublinearityRow> rows;
  double max_ratio_slope = 0.0;  // log-log trend of max_ratio against n
  double axis_ratio_slope = 0.0;
  nlohmann::json to_json() const;
};
/// Fields are re-gauged so that chi(0) = 0 when the origin is a vertex.
SublinearityReport sublinearity_diagnostic(const std::vector<CorrectorField>& fields,
                                           const std::vector<std::int64_t>& radii,
                                           const std::vector<double>& eps);

struct MartingaleReport {
  std::string method;         // "kernel" or "simulation"
  double max_abs_mean = 0.0;  // largest conditional mean increment
  double max_z = 0.0;         // simulation: largest |mean / se|
  double z_threshold = 0.0;
  std::size_t states = 0;     // vertices with enough visits (or all, for kernel)
  std::size_t flagged = 0;    // states with |z| above threshold
  double coverage = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};

/// Exact E[M_{n+1} - M_n | X_n = x] = sum_y P^(1)(x, y)(disp + chi(y) - chi(x)).
/// Use the window the field was solved with; escaped mass shows up in the means.
MartingaleReport martingale_check_kernel(const FiniteGraph& torus, const CorrectorField& field,
                                         double tolerance = 1e-8, int window = 1);
/// Simulated walks on the torus sampled at integer times; states need `min_visits`.
MartingaleReport martingale_check(const FiniteGraph& torus, const CorrectorField& field, std::size_t walks,
                                  std::int64_t steps, std::uint64_t seed, std::size_t min_visits = 50,
                                  int workers = 1);

}  // namespace rcm
