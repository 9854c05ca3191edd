#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"
#include "rcm/walk.hpp"

namespace rcm {

// ---------------------------------------------------------------------------
// Generic helpers

double mean_of(std::span<const double> x);
/// Unbiased sample variance.
double variance_of(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;  // chi-square only
  std::size_t n = 0;
};

/// Asymptotic Kolmogorov tail with Stephens' finite-n correction.
double kolmogorov_pvalue(double d, std::size_t n);
/// One-sample KS test against a continuous CDF.
TestResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Chi-square goodness of fit. Adjacent cells are merged until every expected
/// count is at least 5; `probs` may sum to less than one, the remainder is an
/// implicit overflow cell fed by `overflow_count`.
TestResult chi_square_gof(std::span<const double> counts, std::span<const double> probs,
                          double overflow_count = 0.0);
/// Lengths h >= 1 against Geometric(p) with pmf p (1-p)^(h-1).
TestResult geometric_gof(std::span<const std::int64_t> lengths, double p);

// ---------------------------------------------------------------------------
// Diffusion estimates

struct DiffusionEstimate {
  int dim = 0;
  double t = 0.0;
  std::size_t n_walks = 0;
  std::size_t n_environments = 0;
  bool annealed = false;
  std::vector<double> cov;  // Cov(X_t)/t, row-major dim x dim
  std::vector<double> se;   // standard errors of cov entries
  std::vector<double> diag_diff_se;  // standard error of cov(i,i) - cov(j,j)
  /// Average diagonal entry: the estimate of sigma^2.
  double sigma2 = 0.0;
  double sigma2_se = 0.0;

  double at(int i, int j) const { return cov[i * dim + j]; }
  double se_at(int i, int j) const { return se[i * dim + j]; }
  nlohmann::json to_json() const;
};

DiffusionEstimate estimate_diffusion(std::span<const LatticePoint> endpoints, double t,
                                     bool annealed = false, std::size_t n_environments = 1);

/// One estimate per grid time from an ensemble of grid samples.
std::vector<DiffusionEstimate> estimate_diffusion_msd(std::span<const GridSample> ensemble,
                                                      std::span<const double> grid,
                                                      bool annealed = false,
                                                      std::size_t n_environments = 1);

struct IsotropyResult {
  double max_offdiag_z = 0.0;
  double max_diag_z = 0.0;
  bool pass = false;
};
IsotropyResult isotropy_test(const DiffusionEstimate& est, double z_threshold = 3.0);

struct GaussianityResult {
  double t = 0.0;
  double sigma2 = 0.0;
  std::vector<double> ks_statistic;  // per coordinate
  std::vector<double> p_value;
  double min_p_value() const;
};

/// Per-coordinate KS against Normal(0, sigma2 * t). Integer positions get a
/// deterministic U(-1/2, 1/2) jitter keyed by `jitter_seed`, and the reference
/// variance becomes sigma2 * t + 1/12 (the jitter is independent of X_t).
/// With `jitter = false` the raw lattice values are tested.
/// `center`, when given, shifts the reference mean per coordinate.
GaussianityResult gaussianity_ks(std::span<const LatticePoint> endpoints, double sigma2, double t,
                                 std::uint64_t jitter_seed, bool jitter = true,
                                 std::span<const double> center = {});

struct CsrwRelation {
  double sigma_v2 = 0.0;
  double sigma_c2 = 0.0;
  double mean_mu = 0.0;
  double t_v = 0.0;
  double t_c = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;
  nlohmann::json to_json() const;
};

/// sigma_c^2 (2 d E mu) / sigma_v^2 from VSRW endpoints at t_v and CSRW endpoints at t_c.
CsrwRelation csrw_relation_test(std::span<const LatticePoint> vsrw, double t_v,
                                std::span<const LatticePoint> csrw, double t_c, double mean_mu);

struct LlnPoint {
  double t = 0.0;
  double mean = 0.0;  // mean of A(t)/t
  double se = 0.0;
};
/// Ensemble mean of A(t)/t at every grid time.
std::vector<LlnPoint> time_change_lln(std::span<const GridSample> ensemble,
                                      std::span<const double> grid);

struct ScalingPoint {
  double t = 0.0;
  double var_over_t = 0.0;  // per-coordinate average of Var(X_t)/t
  double se = 0.0;
};
std::vector<ScalingPoint> variance_scaling(std::span<const GridSample> ensemble,
                                           std::span<const double> grid);

struct DegenerateProbe {
  std::vector<ScalingPoint> csrw;
  std::vector<ScalingPoint> vsrw;
  double csrw_ratio = 0.0;  // Var/t at the last grid time over the first
  double vsrw_ratio = 0.0;
  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Ensemble runners

struct EnsembleConfig {
  WalkKind kind = WalkKind::kVariableSpeed;
  std::size_t walks = 1000;
  std::uint64_t seed = 1;
  /// true: every walk in its own environment rooted at 0 (annealed);
  /// false: all walks in rooted_environment(base, seed) (quenched).
  bool annealed = false;
  int workers = 1;
};

/// Walk i uses walk seed derive_seed(seed, 2i + 1); in annealed mode its
/// environment is rooted_environment(base, derive_seed(seed, 2i)).
std::vector<GridSample> run_ensemble(const Environment& base, std::span<const double> grid,
                                     const EnsembleConfig& cfg);

DegenerateProbe degenerate_csrw_probe(const Environment& base, std::span<const double> grid,
                                      std::size_t walks, std::uint64_t seed, int workers,
                                      bool annealed = true);

}  // namespace rcm
