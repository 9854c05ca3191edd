#include "rcm/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rcm/io.hpp"

namespace rcm {

const char* to_string(WalkKind kind) {
  return kind == WalkKind::kVariableSpeed ? "vsrw" : "csrw";
}

StepDistribution step_distribution(const Environment& env, const LatticePoint& x) {
  StepDistribution sd;
  sd.source = x;
  sd.options.reserve(2 * env.dim());
  for (int axis = 0; axis < env.dim(); ++axis) {
    for (int dir : {1, -1}) {
      const EdgeRecord e = env.neighbor_along_axis(x, axis, dir);
      JumpOption o;
      o.target = x + LatticePoint::unit(env.dim(), axis, dir * e.length);
      o.conductance = e.conductance;
      sd.total_rate += e.conductance;
      sd.options.push_back(o);
    }
  }
  for (auto& o : sd.options) o.probability = o.conductance / sd.total_rate;
  return sd;
}

StepDistribution step_distribution(const FiniteGraph& g, int vertex, const LatticePoint& lifted) {
  StepDistribution sd;
  sd.source = lifted;
  for (const auto& a : g.adjacency[vertex]) {
    const GraphEdge& e = g.edges[a.edge];
    JumpOption o;
    o.target = lifted;
    if (a.sign > 0)
      o.target += e.displacement;
    else
      o.target -= e.displacement;
    o.vertex = a.vertex;
    o.conductance = e.record.conductance;
    sd.total_rate += o.conductance;
    sd.options.push_back(o);
  }
  if (sd.options.empty()) throw std::invalid_argument("isolated vertex has no jump options");
  for (auto& o : sd.options) o.probability = o.conductance / sd.total_rate;
  return sd;
}

const LatticePoint& Trajectory::position_at(double t) const {
  if (times.empty()) throw std::logic_error("empty trajectory");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return positions[k];
}

double Trajectory::conductance_time(double t) const {
  t = std::min(t, horizon);
  double a = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double end = k + 1 < times.size() ? times[k + 1] : horizon;
    if (t <= end) return a + site_rates[k] * (t - times[k]);
    a += site_rates[k] * (end - times[k]);
  }
  return a;
}

namespace {

// Remembers the last two step laws; a walk bouncing across one heavy edge
// never rescans the environment.
class EnvMedium {
 public:
  explicit EnvMedium(const Environment& env) : env_(env) {}
  const StepDistribution& at(const LatticePoint& x, int /*vertex*/) {
    for (auto& c : cache_)
      if (c.valid && c.sd.source == x) return c.sd;
    Slot& s = cache_[next_];
    next_ ^= 1;
    s.sd = step_distribution(env_, x);
    s.valid = true;
    return s.sd;
  }

 private:
  struct Slot {
    StepDistribution sd;
    bool valid = false;
  };
  const Environment& env_;
  Slot cache_[2];
  int next_ = 0;
};

class GraphMedium {
 public:
  explicit GraphMedium(const FiniteGraph& g) : g_(g) {}
  const StepDistribution& at(const LatticePoint& lifted, int vertex) {
    sd_ = step_distribution(g_, vertex, lifted);
    return sd_;
  }

 private:
  const FiniteGraph& g_;
  StepDistribution sd_;
};

// Event k consumes counters 2k (holding time) and 2k+1 (jump choice).
// on_segment(pos, vertex, site_rate, start, end) is called for every
// maximal constant stretch inside [0, horizon].
template <class Medium, class OnSegment>
std::uint64_t drive(Medium& medium, LatticePoint pos, int vertex, double horizon,
                    std::uint64_t seed, WalkKind kind, OnSegment&& on_segment) {
  CounterStream stream(seed);
  double t = 0.0;
  std::uint64_t k = 0;
  while (true) {
    const StepDistribution& sd = medium.at(pos, vertex);
    const double rate = kind == WalkKind::kVariableSpeed ? sd.total_rate : 1.0;
    const double hold = -std::log(to_open_unit(stream.at(2 * k))) / rate;
    if (!(t + hold < horizon)) {
      on_segment(pos, vertex, sd.total_rate, t, horizon, true);
      return k;
    }
    on_segment(pos, vertex, sd.total_rate, t, t + hold, false);
    t += hold;
    double u = to_unit(stream.at(2 * k + 1)) * sd.total_rate;
    std::size_t pick = sd.options.size() - 1;
    for (std::size_t i = 0; i < sd.options.size(); ++i) {
      if (u < sd.options[i].conductance) {
        pick = i;
        break;
      }
      u -= sd.options[i].conductance;
    }
    const JumpOption& o = sd.options[pick];
    vertex = o.vertex;
    pos = o.target;
    ++k;
  }
}

template <class Medium>
Trajectory record(Medium& medium, const LatticePoint& x0, int v0, double horizon,
                  std::uint64_t seed, WalkKind kind, bool graph) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  Trajectory tr;
  tr.kind = kind;
  tr.horizon = horizon;
  tr.seed = seed;
  drive(medium, x0, v0, horizon, seed, kind,
        [&](const LatticePoint& pos, int v, double mu, double start, double, bool) {
          tr.times.push_back(start);
          tr.positions.push_back(pos);
          if (graph) tr.vertices.push_back(v);
          tr.rates.push_back(kind == WalkKind::kVariableSpeed ? mu : 1.0);
          tr.site_rates.push_back(mu);
        });
  return tr;
}

template <class Medium>
GridSample sample(Medium& medium, const LatticePoint& x0, int v0, std::span<const double> grid,
                  std::uint64_t seed, WalkKind kind) {
  GridSample out;
  if (grid.empty()) return out;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw std::invalid_argument("time grid must be nondecreasing");
  if (grid.front() < 0.0) throw std::invalid_argument("time grid must be >= 0");
  out.positions.reserve(grid.size());
  out.conductance_time.reserve(grid.size());
  std::size_t next = 0;
  double a = 0.0;
  out.jumps = drive(medium, x0, v0, grid.back(), seed, kind,
                    [&](const LatticePoint& pos, int, double mu, double start, double end,
                        bool last) {
                      while (next < grid.size() && (grid[next] < end || last)) {
                        out.positions.push_back(pos);
                        out.conductance_time.push_back(a + mu * (grid[next] - start));
                        ++next;
                      }
                      a += mu * (end - start);
                    });
  return out;
}

void check_start(const Environment& env, const LatticePoint& x0) {
  if (!env.site_open(x0)) throw std::invalid_argument("start " + x0.to_string() + " is closed");
}

}  // namespace

Trajectory simulate_walk(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed, WalkKind kind) {
  check_start(env, x0);
  EnvMedium m(env);
  return record(m, x0, -1, horizon, seed, kind, false);
}

Trajectory simulate_vsrw(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed) {
  return simulate_walk(env, x0, horizon, seed, WalkKind::kVariableSpeed);
}

Trajectory simulate_csrw(const Environment& env, const LatticePoint& x0, double horizon,
                         std::uint64_t seed) {
  return simulate_walk(env, x0, horizon, seed, WalkKind::kConstantSpeed);
}

Trajectory simulate_walk(const FiniteGraph& g, int start, double horizon, std::uint64_t seed,
                         WalkKind kind) {
  if (start < 0 || start >= g.num_vertices()) throw std::out_of_range("start vertex");
  GraphMedium m(g);
  return record(m, g.vertices[start], start, horizon, seed, kind, true);
}

GridSample sample_walk(const Environment& env, const LatticePoint& x0, std::span<const double> grid,
                       std::uint64_t seed, WalkKind kind) {
  check_start(env, x0);
  EnvMedium m(env);
  return sample(m, x0, -1, grid, seed, kind);
}

GridSample sample_walk(const FiniteGraph& g, int start, std::span<const double> grid,
                       std::uint64_t seed, WalkKind kind) {
  if (start < 0 || start >= g.num_vertices()) throw std::out_of_range("start vertex");
  GraphMedium m(g);
  return sample(m, g.vertices[start], start, grid, seed, kind);
}

Trajectory time_change(const Trajectory& vsrw) {
  if (vsrw.kind != WalkKind::kVariableSpeed)
    throw std::invalid_argument("time_change expects a VSRW trajectory");
  Trajectory out = vsrw;
  out.kind = WalkKind::kConstantSpeed;
  double a = 0.0;
  for (std::size_t k = 0; k < vsrw.times.size(); ++k) {
    out.times[k] = a;
    out.rates[k] = 1.0;
    const double end = k + 1 < vsrw.times.size() ? vsrw.times[k + 1] : vsrw.horizon;
    a += vsrw.site_rates[k] * (end - vsrw.times[k]);
  }
  out.horizon = a;
  return out;
}

RescaledPath rescale(const Trajectory& traj, double eps, int steps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  const double need = 1.0 / (eps * eps);
  if (traj.horizon < need * (1.0 - 1e-12))
    throw std::invalid_argument("horizon " + io::fmt_double(traj.horizon) + " shorter than 1/eps^2 = " +
                                io::fmt_double(need));
  RescaledPath r;
  r.eps = eps;
  r.dim = traj.positions.front().dim();
  for (int k = 0; k <= steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    const LatticePoint& x = traj.position_at(std::min(s * need, traj.horizon));
    std::array<double, kMaxDim> v{};
    for (int i = 0; i < r.dim; ++i) v[i] = eps * static_cast<double>(x[i]);
    r.s.push_back(s);
    r.values.push_back(v);
  }
  return r;
}

std::vector<LatticePoint> discretize(const Trajectory& traj, std::int64_t n) {
  if (n < 0 || traj.horizon < static_cast<double>(n))
    throw std::invalid_argument("horizon shorter than the requested number of steps");
  std::vector<LatticePoint> out;
  out.reserve(n + 1);
  for (std::int64_t k = 0; k <= n; ++k) out.push_back(traj.position_at(static_cast<double>(k)));
  return out;
}

std::vector<int> discretize_vertices(const Trajectory& traj, std::int64_t n) {
  if (traj.vertices.empty()) throw std::invalid_argument("trajectory carries no vertex indices");
  if (n < 0 || traj.horizon < static_cast<double>(n))
    throw std::invalid_argument("horizon shorter than the requested number of steps");
  std::vector<int> out;
  for (std::int64_t k = 0; k <= n; ++k) {
    auto it = std::upper_bound(traj.times.begin(), traj.times.end(), static_cast<double>(k));
    out.push_back(traj.vertices[static_cast<std::size_t>(it - traj.times.begin()) - 1]);
  }
  return out;
}

namespace {
constexpr char kMagic[8] = {'R', 'C', 'M', 'T', 'R', 'J', '0', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated trajectory file");
  return v;
}
}  // namespace

void write_trajectory(const Trajectory& traj, const nlohmann::json& env_spec,
                      const std::filesystem::path& bin_path) {
  if (bin_path.has_parent_path()) std::filesystem::create_directories(bin_path.parent_path());
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin_path.string());
  const std::uint64_t count = traj.times.size();
  const std::uint32_t dim = count ? static_cast<std::uint32_t>(traj.positions[0].dim()) : 0;
  out.write(kMagic, sizeof(kMagic));
  put(out, count);
  put(out, dim);
  for (double t : traj.times) put(out, t);
  for (const auto& x : traj.positions)
    for (std::uint32_t i = 0; i < dim; ++i) put(out, x[static_cast<int>(i)]);
  for (double r : traj.site_rates) put(out, r);

  nlohmann::json side;
  side["format"] = "RCMTRJ01";
  side["kind"] = to_string(traj.kind);
  side["horizon"] = traj.horizon;
  side["walk_seed"] = traj.seed;
  side["count"] = count;
  side["dim"] = dim;
  side["horizon_convention"] = "frozen";
  side["environment"] = env_spec;
  io::write_json(std::filesystem::path(bin_path).replace_extension(".json"), side);
}

Trajectory read_trajectory(const std::filesystem::path& bin_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin_path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a trajectory file: " + bin_path.string());
  const auto count = get<std::uint64_t>(in);
  const auto dim = get<std::uint32_t>(in);
  Trajectory tr;
  tr.times.resize(count);
  for (auto& t : tr.times) t = get<double>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    LatticePoint x(static_cast<int>(dim));
    for (std::uint32_t i = 0; i < dim; ++i) x[static_cast<int>(i)] = get<std::int64_t>(in);
    tr.positions.push_back(x);
  }
  tr.site_rates.resize(count);
  for (auto& r : tr.site_rates) r = get<double>(in);

  std::ifstream js(std::filesystem::path(bin_path).replace_extension(".json"));
  if (js) {
    nlohmann::json side = nlohmann::json::parse(js);
    tr.kind = side.at("kind") == "vsrw" ? WalkKind::kVariableSpeed : WalkKind::kConstantSpeed;
    tr.horizon = side.at("horizon").get<double>();
    tr.seed = side.at("walk_seed").get<std::uint64_t>();
  }
  tr.rates.resize(count);
  for (std::uint64_t k = 0; k < count; ++k)
    tr.rates[k] = tr.kind == WalkKind::kVariableSpeed ? tr.site_rates[k] : 1.0;
  return tr;
}

}  // namespace rcm
