#include "gsc/green.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gsc/error.hpp"

namespace gsc {

SparseMatrix killed_laplacian(const LatticeGraph& graph, std::span<const VertexId> keep) {
  std::vector<std::int64_t> local(graph.size(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] >= graph.size()) throw InputError("keep set vertex out of range");
    if (local[keep[i]] >= 0) throw InputError("keep set has a repeated vertex");
    local[keep[i]] = static_cast<std::int64_t>(i);
  }
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(keep.size() * 7);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto v = keep[i];
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), graph.degree_ambient(v));
    for (auto u : graph.neighbors(v))
      if (local[u] >= 0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(local[u]), -1.0);
  }
  SparseMatrix m(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

SparseMatrix principal_submatrix(const SparseMatrix& m, std::span<const LocalIndex> rows) {
  std::vector<std::int64_t> pos(static_cast<std::size_t>(m.rows()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) pos[static_cast<std::size_t>(rows[i])] = static_cast<std::int64_t>(i);
  std::vector<Eigen::Triplet<double, int>> triplets;
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (SparseMatrix::InnerIterator it(m, rows[j]); it; ++it) {
      const auto i = pos[static_cast<std::size_t>(it.row())];
      if (i >= 0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

// ---------------------------------------------------------------------------

DirichletOperator::DirichletOperator(std::shared_ptr<const LatticeGraph> graph, std::vector<VertexId> keep,
                                     const Limits& limits)
    : graph_(std::move(graph)), keep_(std::move(keep)) {
  if (!graph_) throw InputError("null graph");
  if (keep_.empty()) throw InputError("keep set must be nonempty");
  if (keep_.size() > limits.max_unknowns)
    throw ResourceError(std::to_string(keep_.size()) + " unknowns exceeds the solver cap of " +
                        std::to_string(limits.max_unknowns));
  matrix_ = killed_laplacian(*graph_, keep_);
  local_.assign(graph_->size(), -1);
  for (std::size_t i = 0; i < keep_.size(); ++i) local_[keep_[i]] = static_cast<std::int64_t>(i);
  diag_.resize(keep_.size());
  bool killed = false;
  for (std::size_t i = 0; i < keep_.size(); ++i) {
    diag_[i] = graph_->degree_ambient(keep_[i]);
    if (killing(static_cast<LocalIndex>(i)) > 0) killed = true;
  }
  if (!killed) throw NumericError("keep set has no killing: non-transient configuration, operator is singular");
  factor_ = std::make_shared<const SparseCholesky>(matrix_);
}

DirichletOperator DirichletOperator::whole(std::shared_ptr<const LatticeGraph> graph, const Limits& limits) {
  std::vector<VertexId> keep(graph->size());
  for (VertexId v = 0; v < keep.size(); ++v) keep[v] = v;
  return DirichletOperator(std::move(graph), std::move(keep), limits);
}

std::optional<LocalIndex> DirichletOperator::local(VertexId v) const {
  if (v >= local_.size() || local_[v] < 0) return std::nullopt;
  return static_cast<LocalIndex>(local_[v]);
}

std::vector<LocalIndex> DirichletOperator::local_indices(std::span<const VertexId> vertices) const {
  std::vector<LocalIndex> out;
  out.reserve(vertices.size());
  for (auto v : vertices) {
    auto l = local(v);
    if (!l) throw InputError("vertex " + std::to_string(v) + " is outside the keep set");
    out.push_back(*l);
  }
  return out;
}

double DirichletOperator::killing(LocalIndex i) const {
  double internal = 0;
  for (SparseMatrix::InnerIterator it(matrix_, i); it; ++it)
    if (it.row() != i) internal += 1;
  return diag_[static_cast<std::size_t>(i)] - internal;
}

Eigen::VectorXd DirichletOperator::green_column(LocalIndex w) const {
  if (w < 0 || w >= size()) throw InputError("index outside the keep set");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size());
  e[w] = 1;
  return solve(e);
}

double DirichletOperator::green(LocalIndex x, LocalIndex y) const {
  if (x < 0 || x >= size()) throw InputError("index outside the keep set");
  return green_column(y)[x];
}

double DirichletOperator::green_rw(LocalIndex x, LocalIndex y) const {
  return green(x, y) * diag_[static_cast<std::size_t>(y)];
}

std::vector<double> DirichletOperator::green_diagonal(std::span<const LocalIndex> indices) const {
  constexpr std::size_t kBlock = 32;
  std::vector<double> out(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += kBlock) {
    const std::size_t count = std::min(kBlock, indices.size() - start);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(size(), static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c) {
      const auto i = indices[start + c];
      if (i < 0 || i >= size()) throw InputError("index outside the keep set");
      rhs(i, static_cast<Eigen::Index>(c)) = 1;
    }
    Eigen::MatrixXd sol = factor_->solve(rhs);
    for (std::size_t c = 0; c < count; ++c) out[start + c] = sol(indices[start + c], static_cast<Eigen::Index>(c));
  }
  return out;
}

double DirichletOperator::energy(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  return f.dot(matrix_ * g);
}

double DirichletOperator::green_quadratic(const Eigen::VectorXd& f) const { return f.dot(solve(f)); }

// ---------------------------------------------------------------------------

std::vector<double> green_entries(const DirichletOperator& op,
                                  std::span<const std::pair<LocalIndex, LocalIndex>> pairs) {
  std::map<LocalIndex, Eigen::VectorXd> columns;
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [x, y] : pairs) {
    if (x < 0 || x >= op.size() || y < 0 || y >= op.size()) throw InputError("index outside the keep set");
    auto it = columns.find(y);
    if (it == columns.end()) it = columns.emplace(y, op.green_column(y)).first;
    out.push_back(it->second[x]);
  }
  return out;
}

namespace {

std::vector<LocalIndex> complement(LocalIndex n, std::span<const LocalIndex> subset) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (auto i : subset) {
    if (i < 0 || i >= n) throw InputError("index outside the keep set");
    if (in[static_cast<std::size_t>(i)]) throw InputError("subset has a repeated index");
    in[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<LocalIndex> out;
  for (LocalIndex i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

Eigen::VectorXd scatter(LocalIndex n, std::span<const LocalIndex> idx, const Eigen::VectorXd& values) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = values[static_cast<Eigen::Index>(k)];
  return out;
}

Eigen::VectorXd gather(std::span<const LocalIndex> idx, const Eigen::VectorXd& values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = values[idx[k]];
  return out;
}

}  // namespace

double quad_form_inverse_green(const DirichletOperator& op, std::span<const LocalIndex> subset,
                               const Eigen::VectorXd& f) {
  if (subset.empty()) throw InputError("subset must be nonempty");
  if (static_cast<std::size_t>(f.size()) != subset.size()) throw InputError("function size mismatch");
  const auto rest = complement(op.size(), subset);
  const Eigen::VectorXd full = scatter(op.size(), subset, f);
  const Eigen::VectorXd lf = op.matrix() * full;  // (L_SS f ; L_BS f)
  const double direct = gather(subset, lf).dot(f);
  if (rest.empty()) return direct;
  const Eigen::VectorXd coupling = gather(rest, lf);
  const SparseCholesky block(principal_submatrix(op.matrix(), rest));
  return direct - coupling.dot(block.solve(coupling));
}

Eigen::VectorXd harmonic_extension(const LatticeGraph& graph, std::span<const VertexId> region,
                                   const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != graph.size()) throw InputError("boundary values size mismatch");
  Eigen::VectorXd out = values;
  if (region.empty()) return out;
  std::vector<std::int64_t> pos(graph.size(), -1);
  for (std::size_t i = 0; i < region.size(); ++i) pos[region[i]] = static_cast<std::int64_t>(i);
  const SparseMatrix l = killed_laplacian(graph, region);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i)
    for (auto u : graph.neighbors(region[i]))
      if (pos[u] < 0) rhs[static_cast<Eigen::Index>(i)] += values[u];
  const Eigen::VectorXd u = SparseCholesky(l).solve(rhs);
  for (std::size_t i = 0; i < region.size(); ++i) out[region[i]] = u[static_cast<Eigen::Index>(i)];
  return out;
}

EquilibriumResult equilibrium_potential(const DirichletOperator& op, std::span<const LocalIndex> target) {
  if (target.empty()) throw InputError("target set must be nonempty");
  const auto rest = complement(op.size(), target);
  EquilibriumResult r;
  r.potential = Eigen::VectorXd::Zero(op.size());
  for (auto i : target) r.potential[i] = 1;
  if (!rest.empty()) {
    const Eigen::VectorXd drive = gather(rest, op.matrix() * r.potential);
    const SparseCholesky block(principal_submatrix(op.matrix(), rest));
    const Eigen::VectorXd inside = -block.solve(drive);
    for (std::size_t k = 0; k < rest.size(); ++k) r.potential[rest[k]] = inside[static_cast<Eigen::Index>(k)];
  }
  const Eigen::VectorXd charge = op.matrix() * r.potential;
  r.measure = gather(target, charge);
  r.capacity = r.potential.dot(charge);
  return r;
}

double dirichlet_energy(const LatticeGraph& graph, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                        bool include_exterior) {
  if (static_cast<std::size_t>(f.size()) != graph.size() || static_cast<std::size_t>(g.size()) != graph.size())
    throw InputError("function size mismatch");
  double e = 0;
  for (auto [u, v] : graph.edges()) e += (f[u] - f[v]) * (g[u] - g[v]);
  if (include_exterior)
    for (VertexId v = 0; v < graph.size(); ++v) e += (graph.degree_ambient(v) - graph.degree(v)) * f[v] * g[v];
  return e;
}

double green_form(const DirichletOperator& op, std::span<const LocalIndex> subset, const Eigen::VectorXd& h,
                  double rho_hat, int level) {
  if (subset.empty()) throw InputError("subset must be nonempty");
  if (static_cast<std::size_t>(h.size()) != subset.size()) throw InputError("density size mismatch");
  const Eigen::VectorXd full = scatter(op.size(), subset, h);
  const double n = static_cast<double>(subset.size());
  return std::pow(rho_hat, -level) / (n * n) * op.green_quadratic(full);
}

// ---------------------------------------------------------------------------

PaddedAmbient padded_ambient(const CarpetSpec& spec, int level, int pad, const Limits& limits) {
  if (pad < 0) throw InputError("pad must be >= 0");
  PaddedAmbient out{level, pad, std::make_shared<const LatticeGraph>(build_outer_graph(spec, level, limits)),
                    DirichletOperator::whole(
                        std::make_shared<const LatticeGraph>(build_outer_graph(spec, level + pad, limits)), limits),
                    {}};
  const auto& big = out.op.graph();
  out.core.reserve(out.inner_graph->size());
  for (VertexId v = 0; v < out.inner_graph->size(); ++v) {
    auto id = big.find(out.inner_graph->coord(v));
    if (!id) throw StructuralError("V_N is not contained in V_M");
    out.core.push_back(*out.op.local(*id));
  }
  return out;
}

// ---------------------------------------------------------------------------

ResistanceResult crosswire_resistance(const CarpetSpec& spec, int level, const Limits& limits) {
  if (level < 0) throw InputError("level must be >= 0");
  const int d = spec.dimension();
  const auto cells = cells_at_level(spec, level, limits);
  const auto corners = build_outer_graph(spec, level, limits);
  const Coord far = ipow(spec.length_scale(), level);
  const auto n_corner = corners.size();
  const auto n_nodes = n_corner + cells.size();
  // Merged numbering: 0 = shorted source face, 1 = shorted sink face, then
  // the remaining corners and all centres.
  std::vector<std::int64_t> merged(n_nodes);
  std::int64_t next = 2;
  for (VertexId v = 0; v < n_corner; ++v) {
    const Coord x1 = corners.coord(v)[0];
    merged[v] = x1 == 0 ? 0 : (x1 == far ? 1 : next++);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) merged[n_corner + c] = next++;
  const auto n = next;
  // Ground node 1: drop its row/column. Node 0 keeps index 0; others shift.
  auto reduced = [](std::int64_t m) { return m == 0 ? 0 : m - 1; };
  std::vector<Eigen::Triplet<double, int>> t;
  std::vector<Coord> x(d);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto cell = cells.cells[c];
    const auto centre = merged[n_corner + c];
    for (unsigned mask = 0; mask < (1U << d); ++mask) {
      for (int i = 0; i < d; ++i) x[i] = cell[i] + ((mask >> i) & 1U);
      const auto corner = merged[*corners.find(x)];
      for (auto [a, b] : {std::pair{centre, corner}, std::pair{corner, centre}}) {
        if (a == 1) continue;
        t.emplace_back(static_cast<int>(reduced(a)), static_cast<int>(reduced(a)), 1.0);
        if (b != 1) t.emplace_back(static_cast<int>(reduced(a)), static_cast<int>(reduced(b)), -1.0);
      }
    }
  }
  SparseMatrix lap(n - 1, n - 1);
  lap.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd current = Eigen::VectorXd::Zero(n - 1);
  current[0] = 1;
  const Eigen::VectorXd v = SparseCholesky(lap).solve(current);
  return {level, v[0], std::nullopt, static_cast<std::size_t>(n)};
}

std::vector<ResistanceResult> crosswire_sequence(const CarpetSpec& spec, int max_level, const Limits& limits) {
  std::vector<ResistanceResult> out;
  for (int n = 1; n <= max_level; ++n) {
    auto r = crosswire_resistance(spec, n, limits);
    if (!out.empty()) r.rho_hat = r.resistance / out.back().resistance;
    out.push_back(r);
  }
  return out;
}

double estimate_rho(const CarpetSpec& spec, int max_level, const Limits& limits) {
  if (max_level < 2) throw InputError("N_max must be >= 2");
  return crosswire_resistance(spec, max_level, limits).resistance /
         crosswire_resistance(spec, max_level - 1, limits).resistance;
}

}  // namespace gsc
