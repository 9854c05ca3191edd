#include "rcm/environment.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "rcm/io.hpp"
#include "rcm/rng.hpp"

namespace rcm {

std::string LatticePoint::to_string() const {
  std::string s = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) s += ",";
    s += std::to_string(c_[i]);
  }
  return s + ")";
}

std::vector<LatticePoint> ball_linf(const LatticePoint& center, std::int64_t n) {
  const int d = center.dim();
  std::vector<LatticePoint> out;
  if (n < 0) return out;
  LatticePoint offset(d);
  for (int i = 0; i < d; ++i) offset[i] = -n;
  while (true) {
    out.push_back(center + offset);
    int i = d - 1;
    while (i >= 0 && offset[i] == n) offset[i--] = -n;
    if (i < 0) break;
    ++offset[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// ConductanceLaw

void ConductanceLaw::validate() const {
  switch (kind) {
    case LawKind::kConstant:
      if (!(value >= 1.0) || !std::isfinite(value))
        throw std::invalid_argument("constant conductance must be finite and >= 1");
      break;
    case LawKind::kShiftedPareto:
      if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument("pareto tail exponent must be positive");
      break;
    case LawKind::kShiftedExponential:
      if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument("exponential rate must be positive");
      break;
    case LawKind::kTwoPoint:
      if (!(v1 >= 1.0) || !(v2 >= 1.0) || !std::isfinite(v1) || !std::isfinite(v2))
        throw std::invalid_argument("two-point support must be finite and >= 1");
      if (!(prob >= 0.0 && prob <= 1.0))
        throw std::invalid_argument("two-point probability must lie in [0, 1]");
      break;
  }
}

double ConductanceLaw::sample(double u) const {
  switch (kind) {
    case LawKind::kConstant:
      return value;
    case LawKind::kShiftedPareto:
      return std::pow(1.0 - u, -1.0 / value);
    case LawKind::kShiftedExponential:
      return 1.0 - std::log1p(-u) / value;
    case LawKind::kTwoPoint:
      return u < prob ? v1 : v2;
  }
  return 1.0;
}

double ConductanceLaw::mean() const {
  switch (kind) {
    case LawKind::kConstant:
      return value;
    case LawKind::kShiftedPareto:
      return value > 1.0 ? value / (value - 1.0) : std::numeric_limits<double>::infinity();
    case LawKind::kShiftedExponential:
      return 1.0 + 1.0 / value;
    case LawKind::kTwoPoint:
      return prob * v1 + (1.0 - prob) * v2;
  }
  return 1.0;
}

std::string ConductanceLaw::name() const {
  switch (kind) {
    case LawKind::kConstant:
      return "constant(" + io::fmt_double(value) + ")";
    case LawKind::kShiftedPareto:
      return "pareto(" + io::fmt_double(value) + ")";
    case LawKind::kShiftedExponential:
      return "exponential(" + io::fmt_double(value) + ")";
    case LawKind::kTwoPoint:
      return "two-point(" + io::fmt_double(v1) + "," + io::fmt_double(v2) + "," +
             io::fmt_double(prob) + ")";
  }
  return "?";
}

nlohmann::json ConductanceLaw::to_json() const {
  switch (kind) {
    case LawKind::kConstant:
      return {{"kind", "constant"}, {"value", value}};
    case LawKind::kShiftedPareto:
      return {{"kind", "pareto"}, {"a", value}};
    case LawKind::kShiftedExponential:
      return {{"kind", "exponential"}, {"rate", value}};
    case LawKind::kTwoPoint:
      return {{"kind", "two-point"}, {"v1", v1}, {"v2", v2}, {"prob", prob}};
  }
  return {};
}

ConductanceLaw ConductanceLaw::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  ConductanceLaw law;
  if (kind == "constant") {
    law = constant(j.value("value", 1.0));
  } else if (kind == "pareto") {
    law = shifted_pareto(j.at("a").get<double>());
  } else if (kind == "exponential") {
    law = shifted_exponential(j.at("rate").get<double>());
  } else if (kind == "two-point") {
    law = two_point(j.at("v1").get<double>(), j.at("v2").get<double>(),
                    j.at("prob").get<double>());
  } else {
    throw std::invalid_argument("unknown conductance law kind '" + kind + "'");
  }
  law.validate();
  return law;
}

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(int dim, double p, std::uint64_t seed, ConductanceLaw law,
                         std::int64_t scan_limit)
    : dim_(dim), p_(p), seed_(seed), law_(law), scan_limit_(scan_limit) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  law_.validate();
  if (scan_limit_ <= 0) scan_limit_ = static_cast<std::int64_t>(std::ceil(64.0 / p));
}

void Environment::check_point(const LatticePoint& x) const {
  if (x.dim() != dim_)
    throw std::invalid_argument("point " + x.to_string() + " has dimension " +
                                std::to_string(x.dim()) + ", environment has " +
                                std::to_string(dim_));
}

bool Environment::site_open(const LatticePoint& x) const {
  check_point(x);
  if (p_ >= 1.0) return true;
  return to_unit(hash_point(seed_, Channel::kSite, x)) < p_;
}

std::int64_t Environment::scan(const LatticePoint& x, int axis, int direction,
                               std::int64_t limit) const {
  LatticePoint y = x;
  for (std::int64_t h = 1; h <= limit; ++h) {
    y[axis] += direction;
    if (site_open(y)) return h;
  }
  return 0;
}

EdgeRecord Environment::neighbor_along_axis(const LatticePoint& x, int axis, int direction) const {
  check_point(x);
  if (axis < 0 || axis >= dim_) throw std::invalid_argument("axis out of range");
  if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
  if (!site_open(x)) throw std::invalid_argument("site " + x.to_string() + " is closed");
  const std::int64_t h = scan(x, axis, direction, scan_limit_);
  if (h == 0)
    throw ScanLimitExceeded("no open site within " + std::to_string(scan_limit_) + " of " +
                            x.to_string() + " along axis " + std::to_string(axis));
  EdgeRecord e;
  e.axis = axis;
  e.length = h;
  e.base = x;
  if (direction < 0) e.base[axis] -= h;
  e.conductance = edge_conductance(e.base, axis);
  return e;
}

double Environment::edge_conductance(const LatticePoint& base, int axis) const {
  check_point(base);
  if (axis < 0 || axis >= dim_) throw std::invalid_argument("axis out of range");
  if (law_.kind == LawKind::kConstant) return law_.value;
  return law_.sample(
      to_unit(hash_point(seed_, Channel::kConductance, base, static_cast<std::uint64_t>(axis))));
}

double Environment::total_rate(const LatticePoint& x) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int dir : {1, -1}) s += neighbor_along_axis(x, i, dir).conductance;
  return s;
}

nlohmann::json Environment::to_json() const {
  return {{"dim", dim_},
          {"p", p_},
          {"seed", seed_},
          {"law", law_.to_json()},
          {"scan_limit", scan_limit_}};
}

Environment Environment::from_json(const nlohmann::json& j) {
  const auto law = j.contains("law") ? ConductanceLaw::from_json(j.at("law"))
                                     : ConductanceLaw::constant(1.0);
  return Environment(j.at("dim").get<int>(), j.at("p").get<double>(),
                     j.value("seed", std::uint64_t{0}), law, j.value("scan_limit", std::int64_t{0}));
}

Environment rooted_environment(const Environment& base, std::uint64_t seed) {
  const LatticePoint origin = LatticePoint::origin(base.dim());
  for (std::uint64_t k = 0;; ++k) {
    Environment env = base.with_seed(derive_seed(seed, k));
    if (env.site_open(origin)) return env;
  }
}

// ---------------------------------------------------------------------------
// FiniteGraph

double FiniteGraph::graph_rate(int v) const {
  double s = 0.0;
  for (const auto& a : adjacency[v]) s += edges[a.edge].record.conductance;
  return s;
}

std::optional<int> FiniteGraph::index_of(const LatticePoint& x) const {
  auto it = index_.find(x);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FiniteGraph::rebuild_index() {
  index_.clear();
  index_.reserve(vertices.size());
  for (int i = 0; i < num_vertices(); ++i) index_.emplace(vertices[i], i);
}

void FiniteGraph::add_edge(int u, int v, const EdgeRecord& rec, const LatticePoint& displacement) {
  const int id = num_edges();
  edges.push_back({u, v, rec, displacement});
  adjacency[u].push_back({v, id, 1});
  adjacency[v].push_back({u, id, -1});
}

std::vector<std::vector<int>> FiniteGraph::components() const {
  std::vector<int> comp(vertices.size(), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < num_vertices(); ++s) {
    if (comp[s] >= 0) continue;
    const int c = static_cast<int>(out.size());
    out.emplace_back();
    std::queue<int> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      out[c].push_back(x);
      for (const auto& a : adjacency[x]) {
        if (comp[a.vertex] < 0) {
          comp[a.vertex] = c;
          q.push(a.vertex);
        }
      }
    }
    std::sort(out[c].begin(), out[c].end());
  }
  return out;
}

bool FiniteGraph::is_connected() const { return num_vertices() <= 1 || components().size() == 1; }

FiniteGraph FiniteGraph::from_edges(int num_vertices, const std::vector<SimpleEdge>& list) {
  FiniteGraph g;
  g.dim = 1;
  g.center = LatticePoint::origin(1);
  g.vertices.reserve(num_vertices);
  for (int i = 0; i < num_vertices; ++i) g.vertices.push_back(LatticePoint{i});
  g.adjacency.assign(num_vertices, {});
  for (const auto& e : list) {
    if (e.u < 0 || e.v < 0 || e.u >= num_vertices || e.v >= num_vertices || e.u == e.v)
      throw std::invalid_argument("invalid edge in edge list");
    if (!(e.conductance > 0.0)) throw std::invalid_argument("conductance must be positive");
    const int lo = std::min(e.u, e.v);
    EdgeRecord rec;
    rec.base = g.vertices[lo];
    rec.axis = 0;
    rec.length = std::abs(e.v - e.u);
    rec.conductance = e.conductance;
    g.add_edge(e.u, e.v, rec, g.vertices[e.v] - g.vertices[e.u]);
  }
  g.vertex_rate.resize(num_vertices);
  for (int i = 0; i < num_vertices; ++i) g.vertex_rate[i] = g.graph_rate(i);
  g.rebuild_index();
  return g;
}

std::string FiniteGraph::to_csv() const {
  std::vector<std::string> header;
  for (int i = 0; i < dim; ++i) header.push_back("base_x" + std::to_string(i));
  header.insert(header.end(), {"axis", "length", "conductance"});
  io::CsvTable t(header);
  for (const auto& e : edges) {
    std::vector<std::string> row;
    for (int i = 0; i < dim; ++i) row.push_back(std::to_string(e.record.base[i]));
    row.push_back(std::to_string(e.record.axis));
    row.push_back(std::to_string(e.record.length));
    row.push_back(io::fmt_double(e.record.conductance));
    t.row(row);
  }
  return t.str();
}

nlohmann::json FiniteGraph::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["periodic"] = periodic;
  j["period"] = period;
  j["center"] = center.to_vector();
  j["radius"] = radius;
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& v : vertices) vs.push_back(v.to_vector());
  auto& es = j["edges"] = nlohmann::json::array();
  for (const auto& e : edges) {
    es.push_back({{"u", e.u},
                  {"v", e.v},
                  {"base", e.record.base.to_vector()},
                  {"axis", e.record.axis},
                  {"length", e.record.length},
                  {"conductance", e.record.conductance}});
  }
  return j;
}

namespace {

// Row-major index helper over the box [lo, lo + side)^d.
struct BoxIndexer {
  int dim;
  std::int64_t side;
  LatticePoint lo;

  std::int64_t total() const {
    std::int64_t t = 1;
    for (int i = 0; i < dim; ++i) t *= side;
    return t;
  }
  std::int64_t index(const LatticePoint& x) const {
    std::int64_t k = 0;
    for (int i = 0; i < dim; ++i) k = k * side + (x[i] - lo[i]);
    return k;
  }
  LatticePoint point(std::int64_t k) const {
    LatticePoint x(dim);
    for (int i = dim - 1; i >= 0; --i) {
      x[i] = lo[i] + k % side;
      k /= side;
    }
    return x;
  }
};

void check_budget(int dim, std::int64_t side, std::int64_t max_sites) {
  double total = 1.0;
  for (int i = 0; i < dim; ++i) total *= static_cast<double>(side);
  if (total > static_cast<double>(max_sites))
    throw ResourceError("box with side " + std::to_string(side) + " in d=" + std::to_string(dim) +
                        " exceeds the budget of " + std::to_string(max_sites) + " sites");
}

}  // namespace

FiniteGraph restrict_to_box(const Environment& env, const LatticePoint& center, std::int64_t n,
                            std::int64_t max_sites) {
  if (n < 1) throw std::invalid_argument("box radius must be >= 1");
  if (center.dim() != env.dim()) throw std::invalid_argument("center dimension mismatch");
  const int d = env.dim();
  const std::int64_t side = 2 * n + 1;
  check_budget(d, side, max_sites);
  LatticePoint lo = center;
  for (int i = 0; i < d; ++i) lo[i] -= n;
  BoxIndexer box{d, side, lo};
  const std::int64_t total = box.total();

  std::vector<int> vid(static_cast<std::size_t>(total), -1);
  FiniteGraph g;
  g.dim = d;
  g.center = center;
  g.radius = n;
  for (std::int64_t k = 0; k < total; ++k) {
    LatticePoint x = box.point(k);
    if (env.site_open(x)) {
      vid[k] = g.num_vertices();
      g.vertices.push_back(x);
    }
  }
  g.adjacency.assign(g.vertices.size(), {});
  for (int u = 0; u < g.num_vertices(); ++u) {
    const LatticePoint& x = g.vertices[u];
    for (int axis = 0; axis < d; ++axis) {
      LatticePoint y = x;
      for (std::int64_t h = 1; y[axis] < center[axis] + n; ++h) {
        ++y[axis];
        const int v = vid[box.index(y)];
        if (v >= 0) {
          EdgeRecord rec{x, axis, h, env.edge_conductance(x, axis)};
          g.add_edge(u, v, rec, LatticePoint::unit(d, axis, h));
          break;
        }
      }
    }
  }
  g.vertex_rate.resize(g.vertices.size());
  for (int v = 0; v < g.num_vertices(); ++v)
    g.vertex_rate[v] = g.is_truncated(v) ? env.total_rate(g.vertices[v]) : g.graph_rate(v);
  g.rebuild_index();
  return g;
}

FiniteGraph periodize(const Environment& env, std::int64_t n, std::int64_t max_sites) {
  if (n < 1) throw std::invalid_argument("torus radius must be >= 1");
  const int d = env.dim();
  const std::int64_t side = 2 * n + 1;
  check_budget(d, side, max_sites);
  LatticePoint lo(d);
  for (int i = 0; i < d; ++i) lo[i] = -n;
  BoxIndexer box{d, side, lo};
  const std::int64_t total = box.total();

  std::vector<int> vid(static_cast<std::size_t>(total), -1);
  FiniteGraph g;
  g.dim = d;
  g.center = LatticePoint::origin(d);
  g.radius = n;
  g.periodic = true;
  g.period = side;
  for (std::int64_t k = 0; k < total; ++k) {
    LatticePoint x = box.point(k);
    if (env.site_open(x)) {
      vid[k] = g.num_vertices();
      g.vertices.push_back(x);
    }
  }
  // Every axis line must carry an open site.
  for (int axis = 0; axis < d; ++axis) {
    for (std::int64_t k = 0; k < total; ++k) {
      LatticePoint x = box.point(k);
      if (x[axis] != -n) continue;
      bool any = false;
      LatticePoint y = x;
      for (std::int64_t s = 0; s < side && !any; ++s) {
        y[axis] = -n + s;
        any = vid[box.index(y)] >= 0;
      }
      if (!any)
        throw PeriodizeError("torus line through " + x.to_string() + " along axis " +
                             std::to_string(axis) + " has no open site");
    }
  }
  g.adjacency.assign(g.vertices.size(), {});
  for (int u = 0; u < g.num_vertices(); ++u) {
    const LatticePoint& x = g.vertices[u];
    for (int axis = 0; axis < d; ++axis) {
      LatticePoint y = x;
      for (std::int64_t h = 1; h <= side; ++h) {
        y[axis] = x[axis] + h;
        if (y[axis] > n) y[axis] -= side;
        const int v = vid[box.index(y)];
        if (v >= 0) {
          EdgeRecord rec{x, axis, h, env.edge_conductance(x, axis)};
          g.add_edge(u, v, rec, LatticePoint::unit(d, axis, h));
          break;
        }
      }
    }
  }
  g.vertex_rate.resize(g.vertices.size());
  for (int v = 0; v < g.num_vertices(); ++v) g.vertex_rate[v] = g.graph_rate(v);
  g.rebuild_index();
  return g;
}

}  // namespace rcm
