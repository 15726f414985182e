#include "gsc/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "gsc/error.hpp"

namespace gsc {

namespace {

std::size_t box_index(std::span<const Coord> p, Coord side) {
  std::size_t idx = 0;
  for (Coord c : p) idx = idx * static_cast<std::size_t>(side) + static_cast<std::size_t>(c);
  return idx;
}

std::string format_tuple(std::span<const Coord> p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

}  // namespace

const char* graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::Outer: return "outer";
    case GraphKind::Inner: return "inner";
    case GraphKind::Custom: return "custom";
  }
  return "?";
}

LatticeGraph LatticeGraph::from_edges(std::size_t n, std::vector<Edge> edges,
                                      std::vector<int> degree_ambient) {
  if (degree_ambient.size() != n) throw InputError("degree_ambient size mismatch");
  LatticeGraph g;
  g.kind_ = GraphKind::Custom;
  for (auto& e : edges) {
    if (e.first >= n || e.second >= n || e.first == e.second) throw InputError("invalid edge");
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges_ = std::move(edges);
  g.degree_ambient_ = std::move(degree_ambient);
  g.finish_adjacency();
  for (VertexId v = 0; v < n; ++v)
    if (g.degree_ambient_[v] < g.degree(v))
      throw InputError("ambient degree below internal degree at vertex " + std::to_string(v));
  return g;
}

void LatticeGraph::finish_adjacency() {
  const std::size_t n = degree_ambient_.size();
  std::vector<std::size_t> count(n + 1, 0);
  for (auto [u, v] : edges_) {
    ++count[u + 1];
    ++count[v + 1];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + count[i + 1];
  adjacency_.assign(offsets_[n], 0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [u, v] : edges_) {
    adjacency_[fill[u]++] = v;
    adjacency_[fill[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
}

std::optional<VertexId> LatticeGraph::find(std::span<const Coord> coord) const {
  if (lookup_.empty() || static_cast<int>(coord.size()) != dimension()) return std::nullopt;
  std::size_t idx = 0;
  for (Coord c : coord) {
    Coord k = c;
    if (box_shift_) {
      if ((c - 1) % 2 != 0) return std::nullopt;
      k = (c - 1) / 2;
    }
    if (k < 0 || k >= box_side_) return std::nullopt;
    idx = idx * static_cast<std::size_t>(box_side_) + static_cast<std::size_t>(k);
  }
  const auto id = lookup_[idx];
  if (id < 0) return std::nullopt;
  return static_cast<VertexId>(id);
}

std::vector<VertexId> LatticeGraph::peripheral() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < size(); ++v)
    if (degree_ambient_[v] > degree(v)) out.push_back(v);
  return out;
}

LatticeGraph build_outer_graph(const CarpetSpec& spec, int level, const Limits& limits) {
  LatticeGraph g;
  g.kind_ = GraphKind::Outer;
  g.level_ = level;
  g.coords_ = outer_vertex_set(spec, level, limits);
  const int d = spec.dimension();
  const std::size_t n = g.coords_.size();
  g.box_side_ = ipow(spec.length_scale(), level) + 1;
  g.lookup_.assign(static_cast<std::size_t>(std::pow(static_cast<double>(g.box_side_), d)), -1);
  for (std::size_t v = 0; v < n; ++v) g.lookup_[box_index(g.coords_[v], g.box_side_)] = static_cast<std::int32_t>(v);

  std::vector<Coord> nb(d);
  g.degree_ambient_.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto x = g.coords_[v];
    for (int i = 0; i < d; ++i) {
      std::copy(x.begin(), x.end(), nb.begin());
      nb[i] = x[i] + 1;
      if (auto u = g.find(nb)) g.edges_.emplace_back(static_cast<VertexId>(v), *u);
      // Ambient neighbours: V_N sits inside V_{N+1} (nestedness).
      for (Coord step : {Coord{-1}, Coord{1}}) {
        nb[i] = x[i] + step;
        if (nb[i] >= 0 && spec.contains_point(level + 1, nb)) ++g.degree_ambient_[v];
      }
    }
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.finish_adjacency();
  return g;
}

LatticeGraph build_inner_graph(const CarpetSpec& spec, int level, const Limits& limits) {
  LatticeGraph g;
  g.kind_ = GraphKind::Inner;
  g.level_ = level;
  const auto cells = cells_at_level(spec, level, limits);
  const int d = spec.dimension();
  const std::size_t n = cells.size();
  if (n > limits.max_vertices) throw ResourceError("inner graph exceeds the vertex cap");
  g.coords_ = PointSet(d);
  g.coords_.reserve(n);
  std::vector<Coord> w(d);
  for (std::size_t v = 0; v < n; ++v) {
    auto c = cells.cells[v];
    for (int i = 0; i < d; ++i) w[i] = 2 * c[i] + 1;
    g.coords_.push_back(w);
  }
  g.box_side_ = ipow(spec.length_scale(), level);
  g.box_shift_ = 1;
  g.lookup_.assign(static_cast<std::size_t>(std::pow(static_cast<double>(g.box_side_), d)), -1);
  for (std::size_t v = 0; v < n; ++v) g.lookup_[box_index(cells.cells[v], g.box_side_)] = static_cast<std::int32_t>(v);

  std::vector<Coord> nb(d);
  g.degree_ambient_.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto c = cells.cells[v];
    for (int i = 0; i < d; ++i) {
      std::copy(c.begin(), c.end(), nb.begin());
      nb[i] = c[i] + 1;
      for (int i2 = 0; i2 < d; ++i2) w[i2] = 2 * nb[i2] + 1;
      if (auto u = g.find(w)) g.edges_.emplace_back(static_cast<VertexId>(v), *u);
      for (Coord step : {Coord{-1}, Coord{1}}) {
        nb[i] = c[i] + step;
        if (spec.contains_cell(level + 1, nb)) ++g.degree_ambient_[v];
      }
    }
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.finish_adjacency();
  return g;
}

std::vector<VertexId> corners_of(const LatticeGraph& outer, const LatticeGraph& inner, VertexId w) {
  const int d = inner.dimension();
  auto center = inner.coord(w);
  std::vector<VertexId> out;
  out.reserve(std::size_t{1} << d);
  std::vector<Coord> x(d);
  for (unsigned mask = 0; mask < (1U << d); ++mask) {
    for (int i = 0; i < d; ++i) x[i] = (center[i] + (((mask >> i) & 1U) ? 1 : -1)) / 2;
    auto id = outer.find(x);
    if (!id) throw StructuralError("corner " + format_tuple(x) + " of inner vertex missing from outer graph");
    out.push_back(*id);
  }
  return out;
}

Eigen::VectorXd project_to_inner(const LatticeGraph& outer, const LatticeGraph& inner,
                                 const Eigen::VectorXd& f) {
  if (static_cast<std::size_t>(f.size()) != outer.size()) throw InputError("function size mismatch");
  if (outer.level() != inner.level()) throw InputError("outer and inner levels differ");
  const double weight = 1.0 / static_cast<double>(1U << inner.dimension());
  Eigen::VectorXd out(inner.size());
  for (VertexId w = 0; w < inner.size(); ++w) {
    double s = 0;
    for (auto x : corners_of(outer, inner, w)) s += f[x];
    out[w] = weight * s;
  }
  return out;
}

Eigen::VectorXd sample_at_centers(const CarpetSpec& spec, int level,
                                  const std::function<double(std::span<const double>)>& h,
                                  const Limits& limits) {
  const auto cells = cells_at_level(spec, level, limits);
  const double side = static_cast<double>(ipow(spec.length_scale(), level));
  const int d = spec.dimension();
  Eigen::VectorXd out(cells.size());
  std::vector<double> y(d);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto c = cells.cells[k];
    for (int i = 0; i < d; ++i) y[i] = (static_cast<double>(c[i]) + 0.5) / side;
    out[static_cast<Eigen::Index>(k)] = h(y);
  }
  return out;
}

Eigen::VectorXd mean_value_operator(const CarpetSpec& spec, int level, int refinement,
                                    const Eigen::VectorXd& samples, const Limits& limits) {
  if (refinement < level) throw InputError("refinement level must be >= level");
  const auto fine = cells_at_level(spec, refinement, limits);
  if (static_cast<std::size_t>(samples.size()) != fine.size())
    throw InputError("expected " + std::to_string(fine.size()) + " samples, got " +
                     std::to_string(samples.size()));
  const auto coarse = cells_at_level(spec, level, limits);
  const int d = spec.dimension();
  const Coord side = ipow(spec.length_scale(), level);
  const Coord ratio = ipow(spec.length_scale(), refinement - level);
  std::vector<std::int64_t> index(static_cast<std::size_t>(std::pow(static_cast<double>(side), d)), -1);
  for (std::size_t k = 0; k < coarse.size(); ++k) index[box_index(coarse.cells[k], side)] = static_cast<std::int64_t>(k);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coarse.size()));
  std::vector<double> count(coarse.size(), 0);
  std::vector<Coord> parent(d);
  for (std::size_t k = 0; k < fine.size(); ++k) {
    auto c = fine.cells[k];
    for (int i = 0; i < d; ++i) parent[i] = c[i] / ratio;
    const auto p = index[box_index(parent, side)];
    sum[p] += samples[static_cast<Eigen::Index>(k)];
    count[static_cast<std::size_t>(p)] += 1;
  }
  for (std::size_t k = 0; k < coarse.size(); ++k) sum[static_cast<Eigen::Index>(k)] /= count[k];
  return sum;
}

// ---------------------------------------------------------------------------

std::vector<Coord> default_x0(const CarpetSpec& spec, int k, const Limits& limits) {
  const auto g = build_outer_graph(spec, k, limits);
  const Coord side = ipow(spec.length_scale(), k);
  const int d = spec.dimension();
  std::vector<int> dist(g.size(), -1);
  std::deque<VertexId> queue;
  for (VertexId v = 0; v < g.size(); ++v) {
    auto x = g.coord(v);
    if (std::any_of(x.begin(), x.end(), [side](Coord c) { return c == 0 || c == side; })) {
      dist[v] = 0;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : g.neighbors(u))
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  VertexId best = 0;
  int best_dist = 0;
  for (VertexId v = 0; v < g.size(); ++v)
    if (dist[v] > best_dist) {
      best = v;
      best_dist = dist[v];
    }
  if (best_dist == 0) throw InputError("V_k has no vertex strictly inside the level-k cube");
  auto x = g.coord(best);
  return {x.begin(), x.begin() + d};
}

CoarseSets coarse_sets(const CarpetSpec& spec, const LatticeGraph& outer, int k,
                       std::span<const Coord> x0, std::span<const Coord> z, const Limits& limits) {
  const int d = spec.dimension();
  const int level = outer.level();
  if (outer.kind() != GraphKind::Outer) throw InputError("coarse_sets needs an outer graph");
  if (k < 0 || k >= level) throw InputError("coarse level k must satisfy 0 <= k < N");
  if (static_cast<int>(x0.size()) != d || static_cast<int>(z.size()) != d) throw InputError("x0/z arity");
  const Coord block = ipow(spec.length_scale(), k);
  for (int i = 0; i < d; ++i) {
    if (x0[i] <= 0 || x0[i] >= block)
      throw InputError("x0 " + format_tuple(x0) + " lies on the periphery of the level-k cube");
    if (z[i] < 0 || z[i] >= block) throw InputError("z " + format_tuple(z) + " outside [0, ell^k)^d");
  }
  if (!spec.contains_point(k, x0)) throw InputError("x0 is not a vertex of V_k");
  if (!spec.contains_point(k, z)) throw InputError("z is not a vertex of V_k");

  CoarseSets out;
  out.level = level;
  out.k = k;
  out.x0.assign(x0.begin(), x0.end());
  out.z.assign(z.begin(), z.end());
  std::vector<Coord> residue(d);
  for (int i = 0; i < d; ++i) residue[i] = (((z[i] - x0[i]) % block) + block) % block;

  const std::size_t n = outer.size();
  out.on_grid.assign(n, 0);
  std::vector<char> is_rip(n, 0);
  for (VertexId v = 0; v < n; ++v) {
    auto x = outer.coord(v);
    bool rip = true;
    for (int i = 0; i < d; ++i) {
      if (x[i] % block == residue[i]) out.on_grid[v] = 1;
      if (x[i] < z[i] || (x[i] - z[i]) % block != 0) rip = false;
    }
    if (out.on_grid[v]) out.grid.push_back(v);
    if (rip) {
      is_rip[v] = 1;
      out.rip.push_back(v);
    }
  }

  // Components of V_N minus the grid.
  std::vector<std::int64_t> comp(n, -1);
  std::vector<std::size_t> rips_in_comp;
  for (VertexId s = 0; s < n; ++s) {
    if (out.on_grid[s] || comp[s] >= 0) continue;
    const auto id = static_cast<std::int64_t>(rips_in_comp.size());
    rips_in_comp.push_back(0);
    std::vector<VertexId> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      rips_in_comp[static_cast<std::size_t>(id)] += is_rip[u];
      for (auto v : outer.neighbors(u))
        if (!out.on_grid[v] && comp[v] < 0) {
          comp[v] = id;
          stack.push_back(v);
        }
    }
  }
  out.separated = std::all_of(rips_in_comp.begin(), rips_in_comp.end(), [](std::size_t c) { return c <= 1; });

  std::vector<std::vector<VertexId>> members(rips_in_comp.size());
  for (VertexId v = 0; v < n; ++v)
    if (comp[v] >= 0) members[static_cast<std::size_t>(comp[v])].push_back(v);
  for (auto x : out.rip) {
    RipSubgraph sg;
    sg.rip = x;
    sg.interior = members[static_cast<std::size_t>(comp[x])];
    std::vector<VertexId> rim;
    for (auto u : sg.interior)
      for (auto v : outer.neighbors(u))
        if (out.on_grid[v]) rim.push_back(v);
    std::sort(rim.begin(), rim.end());
    rim.erase(std::unique(rim.begin(), rim.end()), rim.end());
    sg.periphery = std::move(rim);
    out.subgraphs.push_back(std::move(sg));
  }

  out.blocks = half_open_partition(spec, level - k, level, limits);
  out.rip_of_block.assign(out.blocks.parts.size(), {});
  for (auto x : out.rip) out.rip_of_block[out.blocks.owner[x]].push_back(x);
  return out;
}

std::vector<VertexId> cubic_neighborhood(const CarpetSpec& spec, const LatticeGraph& outer,
                                         std::span<const double> y, double eps) {
  const int d = outer.dimension();
  if (static_cast<int>(y.size()) != d) throw InputError("center arity mismatch");
  if (!(eps > 0)) throw InputError("eps must be positive");
  const double scale = static_cast<double>(ipow(spec.length_scale(), outer.level()));
  std::vector<Coord> c(d);
  for (int i = 0; i < d; ++i) c[i] = std::llround(scale * y[i]);
  const double radius = eps * scale * (1.0 + 1e-12);
  std::vector<VertexId> out;
  VertexId nearest = 0;
  Coord nearest_dist = std::numeric_limits<Coord>::max();
  for (VertexId v = 0; v < outer.size(); ++v) {
    auto x = outer.coord(v);
    Coord dist = 0;
    for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(x[i] - c[i]));
    if (static_cast<double>(dist) <= radius) out.push_back(v);
    if (dist < nearest_dist) {
      nearest_dist = dist;
      nearest = v;
    }
  }
  if (out.empty()) out.push_back(nearest);
  return out;
}

std::vector<VertexId> cubic_neighborhood(const CarpetSpec& spec, const LatticeGraph& outer,
                                         VertexId center, double eps) {
  const double scale = static_cast<double>(ipow(spec.length_scale(), outer.level()));
  auto x = outer.coord(center);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<double>(x[i]) / scale;
  return cubic_neighborhood(spec, outer, y, eps);
}

}  // namespace gsc
