#include "rcm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"

namespace rcm {

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  if (sxx == 0.0) throw std::invalid_argument("linear_fit needs distinct x values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_pvalue(double d, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  TestResult r;
  r.n = samples.size();
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  r.statistic = d;
  r.p_value = kolmogorov_pvalue(d, samples.size());
  return r;
}

TestResult chi_square_gof(std::span<const double> counts, std::span<const double> probs,
                          double overflow_count) {
  if (counts.size() != probs.size()) throw std::invalid_argument("counts/probs size mismatch");
  double total = overflow_count;
  for (double c : counts) total += c;
  double psum = 0.0;
  for (double p : probs) psum += p;
  std::vector<std::pair<double, double>> cells;  // observed, expected
  for (std::size_t i = 0; i < counts.size(); ++i) cells.emplace_back(counts[i], probs[i] * total);
  if (1.0 - psum > 1e-12 || overflow_count > 0) cells.emplace_back(overflow_count, (1.0 - psum) * total);
  // merge small cells into their left neighbour, sweeping from the right
  std::vector<std::pair<double, double>> merged;
  std::pair<double, double> acc{0, 0};
  for (auto it = cells.rbegin(); it != cells.rend(); ++it) {
    acc.first += it->first;
    acc.second += it->second;
    if (acc.second >= 5.0) {
      merged.push_back(acc);
      acc = {0, 0};
    }
  }
  if (acc.second > 0 || acc.first > 0) {
    if (merged.empty()) {
      merged.push_back(acc);
    } else {
      merged.back().first += acc.first;
      merged.back().second += acc.second;
    }
  }
  TestResult r;
  r.n = static_cast<std::size_t>(total);
  for (const auto& [o, e] : merged) {
    if (e > 0) r.statistic += (o - e) * (o - e) / e;
    else if (o > 0) r.statistic = std::numeric_limits<double>::infinity();
  }
  r.dof = static_cast<double>(merged.size()) - 1.0;
  if (r.dof < 1) {
    r.p_value = 1.0;
  } else if (!std::isfinite(r.statistic)) {
    r.p_value = 0.0;
  } else {
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  }
  return r;
}

TestResult geometric_gof(std::span<const std::int64_t> lengths, double p) {
  if (lengths.empty()) return {};
  std::int64_t hmax = 1;
  for (auto h : lengths) {
    if (h < 1) throw std::invalid_argument("geometric sample must be >= 1");
    hmax = std::max(hmax, h);
  }
  if (p >= 1.0) {
    TestResult r;
    r.n = lengths.size();
    r.p_value = hmax == 1 ? 1.0 : 0.0;
    return r;
  }
  std::vector<double> counts(static_cast<std::size_t>(hmax), 0.0), probs(counts.size());
  for (auto h : lengths) counts[static_cast<std::size_t>(h - 1)] += 1.0;
  for (std::size_t k = 0; k < probs.size(); ++k) probs[k] = p * std::pow(1.0 - p, static_cast<double>(k));
  return chi_square_gof(counts, probs, 0.0);
}

// ---------------------------------------------------------------------------

nlohmann::json DiffusionEstimate::to_json() const {
  return {{"dim", dim},         {"t", t},
          {"n_walks", n_walks}, {"n_environments", n_environments},
          {"annealed", annealed}, {"cov_over_t", cov},
          {"se", se},           {"sigma2", sigma2},
          {"sigma2_se", sigma2_se}};
}

DiffusionEstimate estimate_diffusion(std::span<const LatticePoint> endpoints, double t,
                                     bool annealed, std::size_t n_environments) {
  if (endpoints.empty()) throw std::invalid_argument("empty ensemble");
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  DiffusionEstimate e;
  const int d = endpoints[0].dim();
  e.dim = d;
  e.t = t;
  e.n_walks = endpoints.size();
  e.n_environments = n_environments;
  e.annealed = annealed;
  const double n = static_cast<double>(endpoints.size());
  std::vector<double> mean(d, 0.0);
  for (const auto& x : endpoints)
    for (int i = 0; i < d; ++i) mean[i] += static_cast<double>(x[i]);
  for (auto& m : mean) m /= n;
  e.cov.assign(d * d, 0.0);
  e.se.assign(d * d, 0.0);
  e.diag_diff_se.assign(d * d, 0.0);
  std::vector<double> sq(d * d, 0.0), dd(d * d, 0.0), dd2(d * d, 0.0);
  double avg = 0.0, avg2 = 0.0;
  for (const auto& x : endpoints) {
    double a = 0.0;
    for (int i = 0; i < d; ++i) {
      const double xi = static_cast<double>(x[i]) - mean[i];
      a += xi * xi / d;
      for (int j = 0; j < d; ++j) {
        const double xj = static_cast<double>(x[j]) - mean[j];
        e.cov[i * d + j] += xi * xj;
        sq[i * d + j] += xi * xj * xi * xj;
        const double diff = xi * xi - xj * xj;
        dd[i * d + j] += diff;
        dd2[i * d + j] += diff * diff;
      }
    }
    avg += a;
    avg2 += a * a;
  }
  const double denom = n > 1 ? n - 1 : 1;
  for (int k = 0; k < d * d; ++k) {
    const double m = e.cov[k] / n;
    const double var = std::max(0.0, sq[k] / n - m * m);
    e.se[k] = std::sqrt(var / n) / t;
    const double md = dd[k] / n;
    e.diag_diff_se[k] = std::sqrt(std::max(0.0, dd2[k] / n - md * md) / n) / t;
    e.cov[k] = e.cov[k] / denom / t;
  }
  for (int i = 0; i < d; ++i) e.sigma2 += e.cov[i * d + i] / d;
  const double ma = avg / n;
  e.sigma2_se = std::sqrt(std::max(0.0, avg2 / n - ma * ma) / n) / t;
  return e;
}

std::vector<DiffusionEstimate> estimate_diffusion_msd(std::span<const GridSample> ensemble,
                                                      std::span<const double> grid, bool annealed,
                                                      std::size_t n_environments) {
  std::vector<DiffusionEstimate> out;
  std::vector<LatticePoint> pts(ensemble.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] > 0.0)) continue;
    for (std::size_t w = 0; w < ensemble.size(); ++w) pts[w] = ensemble[w].positions.at(g);
    out.push_back(estimate_diffusion(pts, grid[g], annealed, n_environments));
  }
  return out;
}

IsotropyResult isotropy_test(const DiffusionEstimate& est, double z_threshold) {
  IsotropyResult r;
  const int d = est.dim;
  auto z = [](double v, double se) {
    if (se > 0) return std::abs(v) / se;
    return v == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      r.max_offdiag_z = std::max(r.max_offdiag_z, z(est.at(i, j), est.se_at(i, j)));
      r.max_diag_z = std::max(r.max_diag_z, z(est.at(i, i) - est.at(j, j),
                                              est.diag_diff_se.empty()
                                                  ? std::hypot(est.se_at(i, i), est.se_at(j, j))
                                                  : est.diag_diff_se[i * d + j]));
    }
  }
  r.pass = r.max_offdiag_z < z_threshold && r.max_diag_z < z_threshold;
  return r;
}

double GaussianityResult::min_p_value() const {
  return p_value.empty() ? 1.0 : *std::min_element(p_value.begin(), p_value.end());
}

GaussianityResult gaussianity_ks(std::span<const LatticePoint> endpoints, double sigma2, double t,
                                 std::uint64_t jitter_seed, bool jitter, std::span<const double> center) {
  GaussianityResult r;
  r.t = t;
  r.sigma2 = sigma2;
  if (endpoints.empty()) return r;
  const int d = endpoints[0].dim();
  const double var = sigma2 * t + (jitter ? 1.0 / 12.0 : 0.0);
  const double sd = std::sqrt(var);
  const std::uint64_t key = combine(mix64(jitter_seed), static_cast<std::uint64_t>(Channel::kJitter));
  for (int c = 0; c < d; ++c) {
    std::vector<double> xs;
    xs.reserve(endpoints.size());
    for (std::size_t w = 0; w < endpoints.size(); ++w) {
      double v = static_cast<double>(endpoints[w][c]);
      if (jitter) v += to_unit(combine(key, w * kMaxDim + c)) - 0.5;
      xs.push_back(v);
    }
    const double m = center.empty() ? 0.0 : center[c];
    auto res = ks_test(std::move(xs), [sd, m](double x) { return normal_cdf((x - m) / sd); });
    r.ks_statistic.push_back(res.statistic);
    r.p_value.push_back(res.p_value);
  }
  return r;
}

nlohmann::json CsrwRelation::to_json() const {
  return {{"sigma_v2", sigma_v2}, {"sigma_c2", sigma_c2}, {"mean_mu", mean_mu},
          {"t_v", t_v},           {"t_c", t_c},           {"ratio", ratio},
          {"ratio_se", ratio_se}};
}

CsrwRelation csrw_relation_test(std::span<const LatticePoint> vsrw, double t_v,
                                std::span<const LatticePoint> csrw, double t_c, double mean_mu) {
  const auto ev = estimate_diffusion(vsrw, t_v, true, vsrw.size());
  const auto ec = estimate_diffusion(csrw, t_c, true, csrw.size());
  CsrwRelation r;
  r.sigma_v2 = ev.sigma2;
  r.sigma_c2 = ec.sigma2;
  r.mean_mu = mean_mu;
  r.t_v = t_v;
  r.t_c = t_c;
  const int d = ev.dim;
  r.ratio = ec.sigma2 * 2.0 * d * mean_mu / ev.sigma2;
  r.ratio_se = r.ratio * std::hypot(ec.sigma2_se / ec.sigma2, ev.sigma2_se / ev.sigma2);
  return r;
}

std::vector<LlnPoint> time_change_lln(std::span<const GridSample> ensemble,
                                      std::span<const double> grid) {
  std::vector<LlnPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] > 0.0)) continue;
    std::vector<double> v;
    v.reserve(ensemble.size());
    for (const auto& s : ensemble) v.push_back(s.conductance_time.at(g) / grid[g]);
    LlnPoint p;
    p.t = grid[g];
    p.mean = mean_of(v);
    p.se = std::sqrt(variance_of(v) / static_cast<double>(v.size()));
    out.push_back(p);
  }
  return out;
}

std::vector<ScalingPoint> variance_scaling(std::span<const GridSample> ensemble,
                                           std::span<const double> grid) {
  std::vector<ScalingPoint> out;
  for (const auto& e : estimate_diffusion_msd(ensemble, grid)) out.push_back({e.t, e.sigma2, e.sigma2_se});
  return out;
}

nlohmann::json DegenerateProbe::to_json() const {
  auto pts = [](const std::vector<ScalingPoint>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({{"t", p.t}, {"var_over_t", p.var_over_t}, {"se", p.se}});
    return a;
  };
  return {{"csrw", pts(csrw)},
          {"vsrw", pts(vsrw)},
          {"csrw_ratio", csrw_ratio},
          {"vsrw_ratio", vsrw_ratio}};
}

std::vector<GridSample> run_ensemble(const Environment& base, std::span<const double> grid,
                                     const EnsembleConfig& cfg) {
  std::vector<GridSample> out(cfg.walks);
  const LatticePoint origin = LatticePoint::origin(base.dim());
  std::optional<Environment> quenched;
  if (!cfg.annealed) quenched = rooted_environment(base, cfg.seed);
  parallel_for(cfg.walks, cfg.workers, [&](std::size_t i) {
    const std::uint64_t walk_seed = derive_seed(cfg.seed, 2 * i + 1);
    if (cfg.annealed) {
      const Environment env = rooted_environment(base, derive_seed(cfg.seed, 2 * i));
      out[i] = sample_walk(env, origin, grid, walk_seed, cfg.kind);
    } else {
      out[i] = sample_walk(*quenched, origin, grid, walk_seed, cfg.kind);
    }
  });
  return out;
}

DegenerateProbe degenerate_csrw_probe(const Environment& base, std::span<const double> grid,
                                      std::size_t walks, std::uint64_t seed, int workers,
                                      bool annealed) {
  DegenerateProbe r;
  EnsembleConfig cfg;
  cfg.walks = walks;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.annealed = annealed;
  cfg.kind = WalkKind::kConstantSpeed;
  r.csrw = variance_scaling(run_ensemble(base, grid, cfg), grid);
  cfg.kind = WalkKind::kVariableSpeed;
  r.vsrw = variance_scaling(run_ensemble(base, grid, cfg), grid);
  if (!r.csrw.empty()) r.csrw_ratio = r.csrw.back().var_over_t / r.csrw.front().var_over_t;
  if (!r.vsrw.empty()) r.vsrw_ratio = r.vsrw.back().var_over_t / r.vsrw.front().var_over_t;
  return r;
}

}  // namespace rcm
