#include "gsc/carpet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "gsc/error.hpp"

namespace gsc {

namespace {

std::string format_tuple(std::span<const Coord> p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ',';
    os << p[i];
  }
  os << ')';
  return os.str();
}

// Row-major index of p in a box with `side` points per axis.
std::size_t box_index(std::span<const Coord> p, Coord side) {
  std::size_t idx = 0;
  for (Coord c : p) idx = idx * static_cast<std::size_t>(side) + static_cast<std::size_t>(c);
  return idx;
}

void box_point(std::size_t idx, Coord side, std::span<Coord> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Coord>(idx % static_cast<std::size_t>(side));
    idx /= static_cast<std::size_t>(side);
  }
}

std::size_t count_components(const std::vector<std::size_t>& members,
                             const std::vector<std::vector<std::size_t>>& adjacency) {
  std::vector<char> seen(members.size(), 0);
  std::size_t components = 0;
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (seen[s]) continue;
    ++components;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto v : adjacency[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return components;
}

}  // namespace

Coord ipow(Coord base, int exponent) {
  Coord r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (r > std::numeric_limits<Coord>::max() / base) throw ResourceError("integer overflow in ell^N");
    r *= base;
  }
  return r;
}

// ---------------------------------------------------------------------------

CarpetSpec::CarpetSpec(int dimension, int length_scale, std::vector<std::vector<Coord>> cells,
                       bool allow_full_cube, std::string name)
    : dim_(dimension), ell_(length_scale), cells_(dimension), allow_full_cube_(allow_full_cube),
      name_(std::move(name)) {
  if (dimension < 2) throw InputError("dimension must be >= 2");
  if (length_scale < 3) throw InputError("length_scale must be >= 3");
  if (cells.empty()) throw InputError("cells must be nonempty");
  for (const auto& c : cells) {
    if (static_cast<int>(c.size()) != dimension)
      throw InputError("cell " + format_tuple(c) + " has wrong arity");
    for (Coord x : c)
      if (x < 0 || x >= length_scale)
        throw InputError("cell " + format_tuple(c) + " has coordinate outside [0, length_scale)");
  }
  std::sort(cells.begin(), cells.end());
  if (auto dup = std::adjacent_find(cells.begin(), cells.end()); dup != cells.end())
    throw InputError("duplicate cell " + format_tuple(*dup));
  const auto full = static_cast<std::size_t>(ipow(length_scale, dimension));
  if (cells.size() == full && !allow_full_cube)
    throw InputError("all ell^d cells retained; set allow_full_cube for calibration runs");
  base_mask_.assign(full, 0);
  for (const auto& c : cells) {
    cells_.push_back(c);
    base_mask_[box_index(c, length_scale)] = 1;
  }
}

bool CarpetSpec::is_full_cube() const { return cells_.size() == base_mask_.size(); }

std::string CarpetSpec::id() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(dim_));
  mix(static_cast<std::uint64_t>(ell_));
  for (Coord c : cells_.raw()) mix(static_cast<std::uint64_t>(c));
  mix(allow_full_cube_ ? 1 : 0);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool CarpetSpec::has_base_cell(std::span<const Coord> cell) const {
  for (Coord c : cell)
    if (c < 0 || c >= ell_) return false;
  return base_mask_[box_index(cell, ell_)] != 0;
}

bool CarpetSpec::contains_cell(int level, std::span<const Coord> cell) const {
  const Coord side = ipow(ell_, level);
  for (Coord c : cell)
    if (c < 0 || c >= side) return false;
  Coord scale = 1;
  for (int t = 0; t < level; ++t) {
    std::size_t idx = 0;
    for (Coord c : cell) idx = idx * static_cast<std::size_t>(ell_) + static_cast<std::size_t>((c / scale) % ell_);
    if (!base_mask_[idx]) return false;
    scale *= ell_;
  }
  return true;
}

bool CarpetSpec::contains_point(int level, std::span<const Coord> point) const {
  const Coord side = ipow(ell_, level);
  std::vector<Coord> cell(point.size());
  const unsigned corners = 1U << dim_;
  for (unsigned mask = 0; mask < corners; ++mask) {
    bool ok = true;
    for (int i = 0; i < dim_; ++i) {
      cell[i] = point[i] - ((mask >> i) & 1U);
      if (cell[i] < 0 || cell[i] >= side) {
        ok = false;
        break;
      }
    }
    if (ok && contains_cell(level, cell)) return true;
  }
  return false;
}

CarpetSpec sierpinski_carpet() {
  std::vector<std::vector<Coord>> cells;
  for (Coord x = 0; x < 3; ++x)
    for (Coord y = 0; y < 3; ++y)
      if (!(x == 1 && y == 1)) cells.push_back({x, y});
  return CarpetSpec(2, 3, std::move(cells), false, "sierpinski_carpet");
}

CarpetSpec menger_sponge() {
  std::vector<std::vector<Coord>> cells;
  for (Coord x = 0; x < 3; ++x)
    for (Coord y = 0; y < 3; ++y)
      for (Coord z = 0; z < 3; ++z)
        if ((x == 1) + (y == 1) + (z == 1) < 2) cells.push_back({x, y, z});
  return CarpetSpec(3, 3, std::move(cells), false, "menger_sponge");
}

CarpetSpec full_cube(int dimension, int length_scale) {
  std::vector<std::vector<Coord>> cells;
  const auto n = static_cast<std::size_t>(ipow(length_scale, dimension));
  std::vector<Coord> p(dimension);
  for (std::size_t i = 0; i < n; ++i) {
    box_point(i, length_scale, p);
    cells.push_back(p);
  }
  return CarpetSpec(dimension, length_scale, std::move(cells), true,
                    "full_cube_d" + std::to_string(dimension) + "_l" + std::to_string(length_scale));
}

// ---------------------------------------------------------------------------
// Validation

const char* axiom_name(Axiom a) {
  switch (a) {
    case Axiom::Symmetry: return "GSC1";
    case Axiom::Connectedness: return "GSC2";
    case Axiom::NonDiagonality: return "GSC3";
    case Axiom::BordersIncluded: return "GSC4";
  }
  return "?";
}

bool ValidationReport::ok() const {
  return std::all_of(axioms.begin(), axioms.end(), [](const AxiomResult& r) { return r.pass; });
}

std::vector<std::string> ValidationReport::failed_names() const {
  std::vector<std::string> out;
  for (int i = 0; i < 4; ++i)
    if (!axioms[i].pass) out.emplace_back(axiom_name(static_cast<Axiom>(i)));
  return out;
}

std::vector<CubeIsometry> cube_isometries(int dimension) {
  std::vector<CubeIsometry> out;
  std::vector<int> perm(dimension);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1U << dimension); ++mask) {
      CubeIsometry iso{perm, std::vector<bool>(dimension)};
      for (int i = 0; i < dimension; ++i) iso.flip[i] = (mask >> i) & 1U;
      out.push_back(std::move(iso));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<std::vector<Coord>> apply_isometry(const CubeIsometry& iso, const PointSet& cells,
                                               Coord side) {
  std::vector<std::vector<Coord>> out;
  out.reserve(cells.size());
  const int d = cells.dimension();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto c = cells[k];
    std::vector<Coord> m(d);
    for (int i = 0; i < d; ++i) {
      Coord v = c[iso.perm[i]];
      m[i] = iso.flip[i] ? side - 1 - v : v;
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

AxiomResult check_symmetry(const CarpetSpec& spec) {
  for (const auto& iso : cube_isometries(spec.dimension())) {
    for (const auto& c : apply_isometry(iso, spec.cells(), spec.length_scale())) {
      if (!spec.has_base_cell(c)) {
        std::ostringstream os;
        os << "isometry perm=[";
        for (std::size_t i = 0; i < iso.perm.size(); ++i) os << (i ? "," : "") << iso.perm[i];
        os << "] flip=[";
        for (std::size_t i = 0; i < iso.flip.size(); ++i) os << (i ? "," : "") << iso.flip[i];
        os << "] maps a retained cell to " << format_tuple(c) << ", which is not retained";
        return {false, os.str()};
      }
    }
  }
  return {};
}

AxiomResult check_connectedness(const CarpetSpec& spec) {
  const auto& cells = spec.cells();
  const int d = spec.dimension();
  std::vector<std::size_t> members(cells.size());
  std::iota(members.begin(), members.end(), 0);
  std::vector<std::vector<std::size_t>> adj(cells.size());
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      bool touch = true;
      for (int i = 0; i < d; ++i)
        if (std::abs(cells[a][i] - cells[b][i]) > 1) touch = false;
      if (touch) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
  // Find the first cell unreachable from cell 0.
  std::vector<char> seen(cells.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (!seen[k])
      return {false, "cell " + format_tuple(cells[k]) + " is not connected to " + format_tuple(cells[0])};
  return {};
}

// Non-diagonality on the level-`resolution` raster of F_1.
AxiomResult check_non_diagonality(const CarpetSpec& spec, int resolution) {
  const int d = spec.dimension();
  const Coord ell = spec.length_scale();
  const Coord side = ipow(ell, resolution);
  const Coord sub = ipow(ell, resolution - 1);
  auto retained = [&](std::span<const Coord> c) {
    std::vector<Coord> base(d);
    for (int i = 0; i < d; ++i) base[i] = c[i] / sub;
    return spec.has_base_cell(base);
  };
  const unsigned corners = 1U << d;
  const auto n_origins = static_cast<std::size_t>(ipow(side - 1, d));
  std::vector<Coord> origin(d), cell(d);
  for (std::size_t o = 0; o < n_origins; ++o) {
    box_point(o, side - 1, origin);
    std::vector<unsigned> present;
    for (unsigned mask = 0; mask < corners; ++mask) {
      for (int i = 0; i < d; ++i) cell[i] = origin[i] + ((mask >> i) & 1U);
      if (retained(cell)) present.push_back(mask);
    }
    if (present.size() <= 1) continue;
    std::vector<std::size_t> members(present.size());
    std::iota(members.begin(), members.end(), 0);
    std::vector<std::vector<std::size_t>> adj(present.size());
    for (std::size_t a = 0; a < present.size(); ++a)
      for (std::size_t b = a + 1; b < present.size(); ++b)
        if (std::popcount(present[a] ^ present[b]) == 1) {
          adj[a].push_back(b);
          adj[b].push_back(a);
        }
    const auto k = count_components(members, adj);
    if (k > 1) {
      std::ostringstream os;
      os << "2-cell block at level " << resolution << " with origin " << format_tuple(origin)
         << " has interior split into " << k << " components";
      return {false, os.str()};
    }
  }
  return {};
}

AxiomResult check_borders(const CarpetSpec& spec) {
  std::vector<Coord> cell(spec.dimension(), 0);
  for (Coord i = 0; i < spec.length_scale(); ++i) {
    cell[0] = i;
    if (!spec.has_base_cell(cell)) return {false, "border segment cell " + format_tuple(cell) + " missing"};
  }
  return {};
}

}  // namespace

ValidationReport validate_gsc(const CarpetSpec& spec, ValidationOptions options) {
  ValidationReport r;
  r.axioms[0] = check_symmetry(spec);
  r.axioms[1] = check_connectedness(spec);
  r.axioms[2] = check_non_diagonality(spec, 1);
  if (r.axioms[2].pass && options.deep_non_diagonality) r.axioms[2] = check_non_diagonality(spec, 2);
  r.axioms[3] = check_borders(spec);
  r.calibration_mode = spec.is_full_cube();
  return r;
}

// ---------------------------------------------------------------------------
// Level structure

LevelCellSet cells_at_level(const CarpetSpec& spec, int level, const Limits& limits) {
  if (level < 0) throw InputError("level must be >= 0");
  const int d = spec.dimension();
  double expected = std::pow(static_cast<double>(spec.mass()), level);
  if (expected > static_cast<double>(limits.max_cells))
    throw ResourceError("m_F^N = " + std::to_string(static_cast<long long>(expected)) +
                        " cells exceeds the cap of " + std::to_string(limits.max_cells));
  std::vector<Coord> current(static_cast<std::size_t>(d), 0);
  const auto& base = spec.cells().raw();
  const Coord ell = spec.length_scale();
  for (int n = 0; n < level; ++n) {
    std::vector<Coord> next;
    next.reserve(current.size() * spec.mass());
    for (std::size_t c = 0; c < current.size(); c += d)
      for (std::size_t b = 0; b < base.size(); b += d)
        for (int i = 0; i < d; ++i) next.push_back(ell * current[c + i] + base[b + i]);
    current = std::move(next);
  }
  const std::size_t n = current.size() / d;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(current.begin() + a * d, current.begin() + (a + 1) * d,
                                        current.begin() + b * d, current.begin() + (b + 1) * d);
  });
  LevelCellSet out{level, PointSet(d)};
  out.cells.reserve(n);
  for (auto k : order) out.cells.push_back(std::span<const Coord>(current.data() + k * d, d));
  return out;
}

std::vector<Coord> half_open_owner(const CarpetSpec& spec, int level, int cell_level,
                                   std::span<const Coord> point) {
  if (cell_level < 0 || cell_level > level) throw InputError("cell level out of range [0, N]");
  const int d = spec.dimension();
  const Coord scale = ipow(spec.length_scale(), level - cell_level);
  const Coord side = ipow(spec.length_scale(), cell_level);
  std::vector<Coord> primary(d);
  bool in_range = true;
  for (int i = 0; i < d; ++i) {
    if (point[i] < 0) throw InputError("point " + format_tuple(point) + " is not in V_N");
    primary[i] = point[i] / scale;
    if (primary[i] >= side) in_range = false;
  }
  if (in_range && spec.contains_cell(cell_level, primary)) return primary;
  // Closed cells containing the point, smallest first.
  std::vector<std::vector<Coord>> choices(d);
  for (int i = 0; i < d; ++i) {
    Coord q = point[i] / scale;
    if (point[i] % scale == 0 && q - 1 >= 0) choices[i].push_back(q - 1);
    if (q < side) choices[i].push_back(q);
  }
  std::vector<std::size_t> pick(d, 0);
  std::vector<Coord> cell(d);
  for (int i = 0; i < d; ++i)
    if (choices[i].empty()) throw InputError("point " + format_tuple(point) + " is not in V_N");
  while (true) {
    for (int i = 0; i < d; ++i) cell[i] = choices[i][pick[i]];
    if (spec.contains_cell(cell_level, cell)) return cell;
    int i = d - 1;
    while (i >= 0 && ++pick[i] == choices[i].size()) pick[i--] = 0;
    if (i < 0) break;
  }
  throw InputError("point " + format_tuple(point) + " is not in V_N");
}

std::size_t HalfOpenPartition::nonempty_parts() const {
  std::vector<char> used(parts.size(), 0);
  for (auto o : owner) used[o] = 1;
  return static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));
}

PointSet outer_vertex_set(const CarpetSpec& spec, int level, const Limits& limits) {
  const int d = spec.dimension();
  const Coord side = ipow(spec.length_scale(), level) + 1;
  const double box = std::pow(static_cast<double>(side), d);
  if (box > 4.0 * static_cast<double>(limits.max_vertices) + 1e6)
    throw ResourceError("bounding box of V_N too large for the vertex cap");
  const auto cells = cells_at_level(spec, level, limits);
  std::vector<char> mark(static_cast<std::size_t>(box), 0);
  std::vector<Coord> corner(d);
  const unsigned corners = 1U << d;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto c = cells.cells[k];
    for (unsigned mask = 0; mask < corners; ++mask) {
      for (int i = 0; i < d; ++i) corner[i] = c[i] + ((mask >> i) & 1U);
      mark[box_index(corner, side)] = 1;
    }
  }
  const auto count = static_cast<std::size_t>(std::count(mark.begin(), mark.end(), 1));
  if (count > limits.max_vertices)
    throw ResourceError(std::to_string(count) + " vertices exceeds the cap of " +
                        std::to_string(limits.max_vertices));
  PointSet out(d);
  out.reserve(count);
  for (std::size_t idx = 0; idx < mark.size(); ++idx)
    if (mark[idx]) {
      box_point(idx, side, corner);
      out.push_back(corner);
    }
  return out;
}

HalfOpenPartition half_open_partition(const CarpetSpec& spec, int cell_level, int level,
                                      const Limits& limits) {
  if (cell_level < 0 || cell_level > level) throw InputError("cell level out of range [0, N]");
  HalfOpenPartition out;
  out.level = level;
  out.cell_level = cell_level;
  out.parts = cells_at_level(spec, cell_level, limits);
  const int d = spec.dimension();
  const Coord side = ipow(spec.length_scale(), cell_level);
  // Dense lookup from cell corner to part index.
  std::vector<std::uint32_t> part_of(static_cast<std::size_t>(ipow(side, d)), 0);
  for (std::size_t k = 0; k < out.parts.size(); ++k)
    part_of[box_index(out.parts.cells[k], side)] = static_cast<std::uint32_t>(k);
  const auto vertices = outer_vertex_set(spec, level, limits);
  out.owner.resize(vertices.size());
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    auto cell = half_open_owner(spec, level, cell_level, vertices[v]);
    out.owner[v] = part_of[box_index(cell, side)];
  }
  return out;
}

// ---------------------------------------------------------------------------

DimensionReport dimensions(const CarpetSpec& spec, double rho_hat) {
  if (!(rho_hat > 0)) throw InputError("rho_hat must be positive");
  DimensionReport r;
  const double m = static_cast<double>(spec.mass());
  const double ell = spec.length_scale();
  r.rho_hat = rho_hat;
  r.t_hat = m * rho_hat;
  r.d_h = std::log(m) / std::log(ell);
  r.d_w = std::log(r.t_hat) / std::log(ell);
  r.d_s = 2.0 * std::log(m) / std::log(r.t_hat);
  r.transient = rho_hat < 1.0;
  return r;
}

}  // namespace gsc
