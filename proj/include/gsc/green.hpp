#pragma once

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsc/graphs.hpp"
#include "gsc/sparse_cholesky.hpp"

namespace gsc {

using LocalIndex = Eigen::Index;

/// Killed combinatorial Laplacian D_ambient - A restricted to a keep set K,
/// with its Cholesky factor computed once. The random walk is killed on
/// leaving K; the inverse of the matrix is the (combinatorial) Green's
/// function, whose entries are the covariances of the free field on K.
///
/// Functions on K are Eigen vectors indexed by local index (the position of
/// the vertex in keep()). Copies share the factorization.
class DirichletOperator {
 public:
  /// Throws NumericError when no vertex of K loses a neighbour to the
  /// exterior (recurrent, singular configuration) and ResourceError when K
  /// exceeds the unknown cap.
  DirichletOperator(std::shared_ptr<const LatticeGraph> graph, std::vector<VertexId> keep,
                    const Limits& limits = default_limits());

  /// Keep set = every vertex of the graph.
  static DirichletOperator whole(std::shared_ptr<const LatticeGraph> graph,
                                 const Limits& limits = default_limits());

  const LatticeGraph& graph() const { return *graph_; }
  const std::shared_ptr<const LatticeGraph>& graph_ptr() const { return graph_; }
  LocalIndex size() const { return static_cast<LocalIndex>(keep_.size()); }
  const std::vector<VertexId>& keep() const { return keep_; }
  VertexId vertex(LocalIndex i) const { return keep_[static_cast<std::size_t>(i)]; }
  std::optional<LocalIndex> local(VertexId v) const;
  /// Local indices of the given graph vertices; throws InputError if any is
  /// outside the keep set.
  std::vector<LocalIndex> local_indices(std::span<const VertexId> vertices) const;

  const SparseMatrix& matrix() const { return matrix_; }
  const SparseCholesky& factor() const { return *factor_; }

  /// Ambient degree of a kept vertex (the matrix diagonal).
  double diagonal(LocalIndex i) const { return diag_[static_cast<std::size_t>(i)]; }
  /// Number of ambient neighbours outside the keep set.
  double killing(LocalIndex i) const;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return factor_->solve(rhs); }

  /// Column G(., w).
  Eigen::VectorXd green_column(LocalIndex w) const;
  double green(LocalIndex x, LocalIndex y) const;
  /// Random-walk normalisation G_rw(x, y) = G(x, y) * deg_ambient(y).
  double green_rw(LocalIndex x, LocalIndex y) const;
  /// Diagonal entries G(x, x) for the requested indices (block solves).
  std::vector<double> green_diagonal(std::span<const LocalIndex> indices) const;

  /// f^T L g
  double energy(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

  /// f^T G f
  double green_quadratic(const Eigen::VectorXd& f) const;

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  std::vector<VertexId> keep_;
  std::vector<std::int64_t> local_;  // graph vertex -> local index or -1
  std::vector<double> diag_;
  SparseMatrix matrix_;
  std::shared_ptr<const SparseCholesky> factor_;
};

/// D_ambient - A on the keep set, without factorizing.
SparseMatrix killed_laplacian(const LatticeGraph& graph, std::span<const VertexId> keep);

/// Principal submatrix on the given local indices.
SparseMatrix principal_submatrix(const SparseMatrix& m, std::span<const LocalIndex> rows);

/// G(x, y) for each requested pair; one solve per distinct column.
std::vector<double> green_entries(const DirichletOperator& op,
                                  std::span<const std::pair<LocalIndex, LocalIndex>> pairs);

/// <f, (G_S)^{-1} f> with G_S the restriction of the Green's function to
/// S x S, evaluated as the Schur complement L_SS - L_SB L_BB^{-1} L_BS.
double quad_form_inverse_green(const DirichletOperator& op, std::span<const LocalIndex> subset,
                               const Eigen::VectorXd& f);

/// Solves (D_ambient - A) u = 0 on `region` with u fixed to `values` on
/// every other graph vertex; ambient neighbours outside the graph count as
/// zero. Returns a function on all graph vertices.
Eigen::VectorXd harmonic_extension(const LatticeGraph& graph, std::span<const VertexId> region,
                                   const Eigen::VectorXd& values);

struct EquilibriumResult {
  Eigen::VectorXd potential;  // on the keep set, local indexing
  Eigen::VectorXd measure;    // on the target, in the order given
  double capacity = 0;
};

/// Equilibrium potential of `target` inside the keep set: 1 on the target,
/// harmonic elsewhere in K, 0 outside. capacity = energy of the potential;
/// measure = (L e) restricted to the target.
EquilibriumResult equilibrium_potential(const DirichletOperator& op, std::span<const LocalIndex> target);

/// Dirichlet energy of f, g on a graph. With `include_exterior` the edges to
/// ambient neighbours outside the graph (where f = g = 0) are counted, which
/// gives f^T (D_ambient - A) g.
double dirichlet_energy(const LatticeGraph& graph, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                        bool include_exterior = true);
inline double dirichlet_energy(const LatticeGraph& graph, const Eigen::VectorXd& f,
                               bool include_exterior = true) {
  return dirichlet_energy(graph, f, f, include_exterior);
}

/// Renormalised Green form rho^{-N} |S|^{-2} sum_{w,w' in S} G(w,w') h(w) h(w').
/// `h` is indexed like `subset`.
double green_form(const DirichletOperator& op, std::span<const LocalIndex> subset,
                  const Eigen::VectorXd& h, double rho_hat, int level);

// ---------------------------------------------------------------------------
// Padded ambient: approximates infinite-graph quantities on V_N by killing
// at level M = N + pad.

struct PaddedAmbient {
  int level = 0;  // N
  int pad = 0;
  std::shared_ptr<const LatticeGraph> inner_graph;  // G_N (outer graph at level N)
  DirichletOperator op;                             // on V_M
  std::vector<LocalIndex> core;                     // V_N inside V_M, ordered like inner_graph
};

PaddedAmbient padded_ambient(const CarpetSpec& spec, int level, int pad,
                             const Limits& limits = default_limits());

// ---------------------------------------------------------------------------
// Crosswire resistance

struct ResistanceResult {
  int level = 0;
  double resistance = 0;
  std::optional<double> rho_hat;  // R_N / R_{N-1}
  std::size_t nodes = 0;
};

/// Effective resistance of the diagonal crosswire network on Q_N(F_N)
/// between the shorted faces x_1 = 0 and x_1 = ell^N.
ResistanceResult crosswire_resistance(const CarpetSpec& spec, int level,
                                      const Limits& limits = default_limits());

/// Successive resistances for N = 1..max_level with ratio estimates.
std::vector<ResistanceResult> crosswire_sequence(const CarpetSpec& spec, int max_level,
                                                 const Limits& limits = default_limits());

/// rho_hat = R_{N_max} / R_{N_max - 1}.
double estimate_rho(const CarpetSpec& spec, int max_level, const Limits& limits = default_limits());

}  // namespace gsc
