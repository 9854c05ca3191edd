#include "rcm/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <boost/math/distributions/normal.hpp>

#include "rcm/heat_kernel.hpp"
#include "rcm/io.hpp"
#include "rcm/parallel.hpp"
#include "rcm/rng.hpp"
#include "rcm/stats.hpp"
#include "rcm/walk.hpp"

namespace rcm {

const char* to_string(WeightConvention c) {
  return c == WeightConvention::kGenerator ? "generator" : "time-one";
}

HarmonicProblem generator_problem(const FiniteGraph& torus) {
  if (!torus.periodic) throw std::invalid_argument("corrector problems live on periodized graphs");
  HarmonicProblem prob;
  prob.torus = &torus;
  prob.convention = WeightConvention::kGenerator;
  for (const auto& e : torus.edges) prob.pairs.push_back({e.u, e.v, e.record.conductance, e.displacement});
  return prob;
}

HarmonicProblem time_one_problem(const FiniteGraph& torus, int window, double tolerance, int workers) {
  if (!torus.periodic) throw std::invalid_argument("corrector problems live on periodized graphs");
  const int n = torus.num_vertices();
  const LatticePoint zero = LatticePoint::origin(torus.dim);
  std::vector<std::vector<WeightedPair>> per(n);
  std::vector<double> moment(n), escaped(n);
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    const int x = static_cast<int>(i);
    const auto lk = lifted_kernel(torus, x, 1.0, window, tolerance);
    moment[x] = lk.second_moment();
    escaped[x] = lk.escaped;
    for (const auto& e : lk.entries) {
      if (e.target < x) continue;
      if (e.target == x && !(zero < e.displacement)) continue;
      per[x].push_back({x, e.target, e.p, e.displacement});
    }
  });
  HarmonicProblem prob;
  prob.torus = &torus;
  prob.convention = WeightConvention::kTimeOne;
  for (int x = 0; x < n; ++x) {
    prob.pairs.insert(prob.pairs.end(), per[x].begin(), per[x].end());
    prob.second_moment += moment[x];
    prob.escaped = std::max(prob.escaped, escaped[x]);
  }
  prob.second_moment /= n;
  return prob;
}

double CorrectorField::pythagoras_error() const {
  return std::abs(norm_psi - (norm_phi - norm_chi)) / norm_phi;
}

std::string CorrectorField::to_csv() const {
  std::vector<std::string> header;
  for (int i = 0; i < dim; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 0; i < dim; ++i) header.push_back("chi_" + std::to_string(i + 1));
  io::CsvTable t(header);
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    std::vector<std::string> row;
    for (int i = 0; i < dim; ++i) row.push_back(std::to_string(vertices[v][i]));
    for (int i = 0; i < dim; ++i) row.push_back(io::fmt_double(at(static_cast<int>(v), i)));
    t.row(row);
  }
  return t.str();
}

nlohmann::json CorrectorField::to_json() const {
  return {{"convention", to_string(convention)},
          {"vertices", vertices.size()},
          {"residual", residual},
          {"iterations", iterations},
          {"norm_phi", norm_phi},
          {"norm_chi", norm_chi},
          {"norm_psi", norm_psi},
          {"cross", cross},
          {"pythagoras_error", norm_phi > 0 ? pythagoras_error() : 0.0}};
}

double dirichlet_norm(const HarmonicProblem& prob, const std::vector<double>& f, double shift) {
  const int d = prob.dim();
  double s = 0.0;
  for (const auto& p : prob.pairs) {
    for (int i = 0; i < d; ++i) {
      const double df = f[static_cast<std::size_t>(p.v) * d + i] - f[static_cast<std::size_t>(p.u) * d + i] +
                        shift * static_cast<double>(p.disp[i]);
      s += p.weight * df * df;
    }
  }
  return s;
}

double harmonicity_residual(const HarmonicProblem& prob, const CorrectorField& field) {
  const int d = prob.dim();
  std::vector<double> r(static_cast<std::size_t>(prob.num_vertices()) * d, 0.0);
  for (const auto& p : prob.pairs) {
    if (p.u == p.v) continue;  // the two directions cancel
    for (int i = 0; i < d; ++i) {
      const double inc = static_cast<double>(p.disp[i]) + field.at(p.v, i) - field.at(p.u, i);
      r[static_cast<std::size_t>(p.u) * d + i] += p.weight * inc;
      r[static_cast<std::size_t>(p.v) * d + i] -= p.weight * inc;
    }
  }
  double m = 0.0;
  for (double x : r) m = std::max(m, std::abs(x));
  return m;
}

void evaluate_field(const HarmonicProblem& prob, CorrectorField& field) {
  const double V = prob.num_vertices();
  const std::vector<double> zero(field.chi.size(), 0.0);
  field.norm_phi = dirichlet_norm(prob, zero, 1.0) / V;
  field.norm_chi = dirichlet_norm(prob, field.chi, 0.0) / V;
  field.norm_psi = dirichlet_norm(prob, field.chi, 1.0) / V;
  const int d = prob.dim();
  double c = 0.0;
  for (const auto& p : prob.pairs) {
    for (int i = 0; i < d; ++i) {
      const double dchi = field.at(p.v, i) - field.at(p.u, i);
      c += p.weight * (dchi + static_cast<double>(p.disp[i])) * dchi;
    }
  }
  field.cross = c / V;
  field.residual = harmonicity_residual(prob, field);
}

CorrectorField zero_field(const HarmonicProblem& prob) {
  CorrectorField f;
  f.dim = prob.dim();
  f.convention = prob.convention;
  f.vertices = prob.torus->vertices;
  f.chi.assign(static_cast<std::size_t>(prob.num_vertices()) * f.dim, 0.0);
  evaluate_field(prob, f);
  return f;
}

CorrectorField solve_corrector(const HarmonicProblem& prob, double tolerance) {
  const FiniteGraph& g = *prob.torus;
  if (!g.is_connected()) throw std::invalid_argument("solve_corrector: torus is disconnected");
  const int n = g.num_vertices();
  const int d = g.dim;
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(prob.pairs.size() * 4);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, d);
  for (const auto& p : prob.pairs) {
    if (!(p.weight >= 0)) throw std::invalid_argument("negative weight in harmonic problem");
    if (p.u == p.v) continue;
    trips.emplace_back(p.u, p.u, p.weight);
    trips.emplace_back(p.v, p.v, p.weight);
    trips.emplace_back(p.u, p.v, -p.weight);
    trips.emplace_back(p.v, p.u, -p.weight);
    for (int i = 0; i < d; ++i) {
      b(p.u, i) += p.weight * static_cast<double>(p.disp[i]);
      b(p.v, i) -= p.weight * static_cast<double>(p.disp[i]);
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  CorrectorField f;
  f.dim = d;
  f.convention = prob.convention;
  f.vertices = g.vertices;
  f.chi.assign(static_cast<std::size_t>(n) * d, 0.0);
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setMaxIterations(50 * static_cast<Eigen::Index>(n));
  cg.compute(A);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd rhs = b.col(i);
    rhs.array() -= rhs.mean();  // consistent system
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double tol = tolerance;
    for (int attempt = 0; attempt < 4; ++attempt) {
      cg.setTolerance(tol);
      x = cg.solveWithGuess(rhs, x);
      f.iterations += static_cast<std::size_t>(cg.iterations());
      if ((A * x - rhs).cwiseAbs().maxCoeff() <= 1e-9 || rhs.squaredNorm() == 0.0) break;
      tol *= 1e-2;
    }
    x.array() -= x.mean();
    for (int v = 0; v < n; ++v) f.chi[static_cast<std::size_t>(v) * d + i] = x[v];
  }
  evaluate_field(prob, f);
  if (!(f.residual <= 1e-6 * std::max(1.0, b.cwiseAbs().maxCoeff())))
    throw std::runtime_error("conjugate gradients did not converge: residual " + io::fmt_double(f.residual));
  return f;
}

// ---------------------------------------------------------------------------

nlohmann::json SigmaReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"n", r.n},
                  {"env_seed", r.env_seed},
                  {"vertices", r.vertices},
                  {"sigma2_generator", r.sigma2_generator},
                  {"sigma2_time_one", r.sigma2_time_one},
                  {"second_moment", r.second_moment},
                  {"chi_norm", r.chi_norm},
                  {"escaped", r.escaped},
                  {"residual", r.residual}});
  nlohmann::json ss = nlohmann::json::array();
  for (const auto& s : summary)
    ss.push_back({{"n", s.n},
                  {"environments", s.environments},
                  {"generator_mean", s.generator_mean},
                  {"generator_se", s.generator_se},
                  {"time_one_mean", s.time_one_mean},
                  {"time_one_se", s.time_one_se}});
  return {{"rows", rs}, {"summary", ss}, {"positive", positive}};
}

namespace {

FiniteGraph torus_for(const Environment& base, std::int64_t n, std::uint64_t seed, Environment& used) {
  for (std::uint64_t a = 0;; ++a) {
    used = rooted_environment(base, a == 0 ? seed : derive_seed(seed, a));
    try {
      return periodize(used, n);
    } catch (const PeriodizeError&) {
      if (a > 1000) throw;
    }
  }
}

std::pair<double, double> mean_se(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  const double se = xs.size() > 1 ? std::sqrt(variance_of(xs) / static_cast<double>(xs.size())) : 0.0;
  return {m, se};
}

}  // namespace

SigmaReport sigma_v_from_corrector(const Environment& base, const std::vector<std::int64_t>& radii,
                                   std::size_t environments, std::uint64_t seed, bool time_one, int workers) {
  SigmaReport rep;
  const std::size_t R = radii.size();
  rep.rows.resize(R * environments);
  const int d = base.dim();
  parallel_for(R * environments, workers, [&](std::size_t k) {
    const std::size_t r = k / environments, e = k % environments;
    Environment env = base;
    const FiniteGraph torus = torus_for(base, radii[r], derive_seed(seed, e), env);
    SigmaRow row;
    row.n = radii[r];
    row.env_seed = env.seed();
    row.vertices = static_cast<std::size_t>(torus.num_vertices());
    const auto gp = generator_problem(torus);
    const auto gf = solve_corrector(gp);
    row.sigma2_generator = 2.0 * gf.norm_psi / d;
    row.residual = gf.residual;
    if (time_one) {
      const auto tp = time_one_problem(torus);
      const auto tf = solve_corrector(tp);
      row.second_moment = tp.second_moment;
      row.escaped = tp.escaped;
      row.chi_norm = tf.norm_chi;
      row.sigma2_time_one = (tp.second_moment - 2.0 * tf.norm_chi) / d;
      row.residual = std::max(row.residual, tf.residual);
    }
    rep.rows[k] = row;
  });
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<double> g, t;
    for (std::size_t e = 0; e < environments; ++e) {
      const auto& row = rep.rows[r * environments + e];
      g.push_back(row.sigma2_generator);
      t.push_back(row.sigma2_time_one);
      if (!(row.sigma2_generator > 0) || (time_one && !(row.sigma2_time_one > 0))) rep.positive = false;
    }
    SigmaSummary s;
    s.n = radii[r];
    s.environments = environments;
    std::tie(s.generator_mean, s.generator_se) = mean_se(g);
    if (time_one) std::tie(s.time_one_mean, s.time_one_se) = mean_se(t);
    rep.summary.push_back(s);
  }
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json SublinearityReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"n", r.n}, {"eps", r.eps}, {"density", r.density}, {"max_ratio", r.max_ratio},
                  {"axis_ratio", r.axis_ratio}});
  return {{"rows", rs}, {"max_ratio_slope", max_ratio_slope}, {"axis_ratio_slope", axis_ratio_slope}};
}

SublinearityReport sublinearity_diagnostic(const std::vector<CorrectorField>& fields,
                                           const std::vector<std::int64_t>& radii, const std::vector<double>& eps) {
  if (fields.size() != radii.size()) throw std::invalid_argument("one radius per field");
  SublinearityReport rep;
  std::vector<double> ln, lm, la;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const auto& f = fields[k];
    const std::int64_t n = radii[k];
    const int d = f.dim;
    std::vector<double> ref(d, 0.0);
    const LatticePoint origin = LatticePoint::origin(d);
    for (std::size_t v = 0; v < f.vertices.size(); ++v)
      if (f.vertices[v] == origin)
        for (int i = 0; i < d; ++i) ref[i] = f.at(static_cast<int>(v), i);
    SublinearityRow row;
    row.n = n;
    row.eps = eps;
    row.density.assign(eps.size(), 0.0);
    const double sites = std::pow(2.0 * static_cast<double>(n) + 1.0, d);
    for (std::size_t v = 0; v < f.vertices.size(); ++v) {
      double m = 0.0;
      for (int i = 0; i < d; ++i) m = std::max(m, std::abs(f.at(static_cast<int>(v), i) - ref[i]));
      for (std::size_t j = 0; j < eps.size(); ++j)
        if (m >= eps[j] * static_cast<double>(n)) row.density[j] += 1.0 / sites;
      row.max_ratio = std::max(row.max_ratio, m / static_cast<double>(n));
      bool on_axis = f.vertices[v][0] != 0;
      for (int i = 1; i < d; ++i) on_axis = on_axis && f.vertices[v][i] == 0;
      if (on_axis) row.axis_ratio = std::max(row.axis_ratio, m / static_cast<double>(std::llabs(f.vertices[v][0])));
    }
    if (row.max_ratio > 0) {
      ln.push_back(std::log(static_cast<double>(n)));
      lm.push_back(std::log(row.max_ratio));
      la.push_back(std::log(std::max(row.axis_ratio, 1e-300)));
    }
    rep.rows.push_back(row);
  }
  if (ln.size() >= 2) {
    rep.max_ratio_slope = linear_fit(ln, lm).slope;
    rep.axis_ratio_slope = linear_fit(ln, la).slope;
  }
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json MartingaleReport::to_json() const {
  return {{"method", method},   {"max_abs_mean", max_abs_mean}, {"max_z", max_z},
          {"z_threshold", z_threshold}, {"states", states},     {"flagged", flagged},
          {"coverage", coverage}, {"pass", pass}};
}

MartingaleReport martingale_check_kernel(const FiniteGraph& torus, const CorrectorField& field, double tolerance,
                                         int window) {
  MartingaleReport rep;
  rep.method = "kernel";
  const int d = torus.dim;
  for (int x = 0; x < torus.num_vertices(); ++x) {
    const auto lk = lifted_kernel(torus, x, 1.0, window);
    for (int i = 0; i < d; ++i) {
      double m = 0.0;
      for (const auto& e : lk.entries)
        m += e.p * (static_cast<double>(e.displacement[i]) + field.at(e.target, i) - field.at(x, i));
      rep.max_abs_mean = std::max(rep.max_abs_mean, std::abs(m));
    }
    ++rep.states;
  }
  rep.coverage = 1.0;
  rep.z_threshold = tolerance;
  rep.pass = rep.max_abs_mean <= tolerance;
  return rep;
}

MartingaleReport martingale_check(const FiniteGraph& torus, const CorrectorField& field, std::size_t walks,
                                  std::int64_t steps, std::uint64_t seed, std::size_t min_visits, int workers) {
  const int n = torus.num_vertices();
  const int d = torus.dim;
  struct Acc {
    std::vector<double> sum, sq;
    std::vector<std::size_t> visits;
  };
  std::vector<Acc> parts(walks);
  parallel_for(walks, workers, [&](std::size_t w) {
    auto& a = parts[w];
    a.sum.assign(static_cast<std::size_t>(n) * d, 0.0);
    a.sq.assign(static_cast<std::size_t>(n) * d, 0.0);
    a.visits.assign(n, 0);
    const std::uint64_t s = derive_seed(seed, w);
    const int start = static_cast<int>(mix64(s) % static_cast<std::uint64_t>(n));
    const auto traj = simulate_walk(torus, start, static_cast<double>(steps), s, WalkKind::kVariableSpeed);
    const auto pos = discretize(traj, steps);
    const auto ver = discretize_vertices(traj, steps);
    for (std::int64_t k = 0; k < steps; ++k) {
      const int x = ver[k], y = ver[k + 1];
      ++a.visits[x];
      for (int i = 0; i < d; ++i) {
        const double inc = static_cast<double>(pos[k + 1][i] - pos[k][i]) + field.at(y, i) - field.at(x, i);
        a.sum[static_cast<std::size_t>(x) * d + i] += inc;
        a.sq[static_cast<std::size_t>(x) * d + i] += inc * inc;
      }
    }
  });
  // Fixed-order reduction.
  Acc tot;
  tot.sum.assign(static_cast<std::size_t>(n) * d, 0.0);
  tot.sq.assign(static_cast<std::size_t>(n) * d, 0.0);
  tot.visits.assign(n, 0);
  for (const auto& a : parts) {
    for (std::size_t j = 0; j < tot.sum.size(); ++j) {
      tot.sum[j] += a.sum[j];
      tot.sq[j] += a.sq[j];
    }
    for (int v = 0; v < n; ++v) tot.visits[v] += a.visits[v];
  }
  MartingaleReport rep;
  rep.method = "simulation";
  for (int v = 0; v < n; ++v)
    if (tot.visits[v] >= min_visits) ++rep.states;
  rep.coverage = static_cast<double>(rep.states) / n;
  const double tests = std::max<double>(1.0, static_cast<double>(rep.states) * d);
  rep.z_threshold = boost::math::quantile(boost::math::complement(boost::math::normal(), 1e-3 / (2.0 * tests)));
  for (int v = 0; v < n; ++v) {
    if (tot.visits[v] < min_visits) continue;
    const double N = static_cast<double>(tot.visits[v]);
    bool flagged = false;
    for (int i = 0; i < d; ++i) {
      const std::size_t j = static_cast<std::size_t>(v) * d + i;
      const double m = tot.sum[j] / N;
      const double var = std::max(tot.sq[j] / N - m * m, 0.0) * N / (N - 1.0);
      const double z = var > 0 ? m / std::sqrt(var / N) : (m == 0 ? 0.0 : std::numeric_limits<double>::infinity());
      rep.max_abs_mean = std::max(rep.max_abs_mean, std::abs(m));
      rep.max_z = std::max(rep.max_z, std::abs(z));
      if (std::abs(z) > rep.z_threshold) flagged = true;
    }
    if (flagged) ++rep.flagged;
  }
  rep.pass = rep.states > 0 && rep.flagged == 0;
  return rep;
}

}  // namespace rcm
