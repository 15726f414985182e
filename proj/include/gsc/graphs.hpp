#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsc/carpet.hpp"

namespace gsc {

using VertexId = std::uint32_t;
using Edge = std::pair<VertexId, VertexId>;

enum class GraphKind { Outer, Inner, Custom };

const char* graph_kind_name(GraphKind kind);

/// Finite lattice graph with the degrees each vertex has in the infinite
/// carpet graph. Outer graphs live on integer points; inner graphs store
/// cell centres as doubled coordinates (2c + 1) so that all arithmetic stays
/// integral. Vertices are ordered lexicographically by coordinate.
class LatticeGraph {
 public:
  LatticeGraph() = default;

  /// Graph with no geometry, used for hand-built fixtures.
  static LatticeGraph from_edges(std::size_t n, std::vector<Edge> edges,
                                 std::vector<int> degree_ambient);

  GraphKind kind() const { return kind_; }
  int level() const { return level_; }
  int dimension() const { return coords_.dimension(); }
  std::size_t size() const { return degree_ambient_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  /// Outer: integer point. Inner: doubled centre coordinates.
  std::span<const Coord> coord(VertexId v) const { return coords_[v]; }
  const PointSet& coords() const { return coords_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const VertexId> neighbors(VertexId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  int degree(VertexId v) const { return static_cast<int>(offsets_[v + 1] - offsets_[v]); }
  int degree_ambient(VertexId v) const { return degree_ambient_[v]; }
  const std::vector<int>& degrees_ambient() const { return degree_ambient_; }

  /// Lookup by stored coordinate (doubled for inner graphs).
  std::optional<VertexId> find(std::span<const Coord> coord) const;

  /// Vertices with an ambient neighbour outside this graph.
  std::vector<VertexId> peripheral() const;

 private:
  friend LatticeGraph build_outer_graph(const CarpetSpec&, int, const Limits&);
  friend LatticeGraph build_inner_graph(const CarpetSpec&, int, const Limits&);

  void finish_adjacency();

  GraphKind kind_ = GraphKind::Custom;
  int level_ = 0;
  PointSet coords_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<VertexId> adjacency_;
  std::vector<int> degree_ambient_;
  // Dense row-major lookup over the bounding box, -1 when absent.
  Coord box_side_ = 0;
  Coord box_shift_ = 0;  // inner graphs: coord = 2 * cell + 1
  std::vector<std::int32_t> lookup_;
};

/// Outer graph G_N on V_N = ell^N F_N intersected with Z^d.
LatticeGraph build_outer_graph(const CarpetSpec& spec, int level,
                               const Limits& limits = default_limits());

/// Inner graph I_N: one vertex per level-N cell centre.
LatticeGraph build_inner_graph(const CarpetSpec& spec, int level,
                               const Limits& limits = default_limits());

/// Corner set C(w) of an inner vertex: the 2^d outer vertices at distance
/// sqrt(d)/2. Throws StructuralError when a corner is missing.
std::vector<VertexId> corners_of(const LatticeGraph& outer, const LatticeGraph& inner, VertexId w);

/// (Q f)(w) = 2^-d * sum of f over the corners of w.
Eigen::VectorXd project_to_inner(const LatticeGraph& outer, const LatticeGraph& inner,
                                 const Eigen::VectorXd& f);

/// Values of `h` at the centres of the level-M cells (rescaled to [0,1]^d),
/// in the order of cells_at_level(spec, M).
Eigen::VectorXd sample_at_centers(const CarpetSpec& spec, int level,
                                  const std::function<double(std::span<const double>)>& h,
                                  const Limits& limits = default_limits());

/// Mean-value operator: averages level-`refinement` centre samples over the
/// descendants of each level-`level` cell. Output is indexed like
/// build_inner_graph(spec, level).
Eigen::VectorXd mean_value_operator(const CarpetSpec& spec, int level, int refinement,
                                    const Eigen::VectorXd& samples,
                                    const Limits& limits = default_limits());

// ---------------------------------------------------------------------------
// Coarse graining

/// The subgraph g_x around one representative point: the component of
/// V_N minus the grid containing it, plus its grid neighbours.
struct RipSubgraph {
  VertexId rip = 0;
  std::vector<VertexId> interior;
  std::vector<VertexId> periphery;
};

struct CoarseSets {
  int level = 0;
  int k = 0;
  std::vector<Coord> x0;
  std::vector<Coord> z;
  std::vector<VertexId> rip;
  std::vector<VertexId> grid;
  std::vector<char> on_grid;  // per vertex of V_N
  std::vector<RipSubgraph> subgraphs;  // one per rip point, same order
  HalfOpenPartition blocks;            // S_k blocks (cells of level N - k)
  /// rip_of_block[b] lists the rip points owned by block b.
  std::vector<std::vector<VertexId>> rip_of_block;
  /// True when no component of V_N minus the grid holds two rip points.
  bool separated = true;
};

/// Interior vertex of V_k farthest (graph distance) from the boundary of the
/// cube [0, ell^k]^d; ties broken lexicographically.
std::vector<Coord> default_x0(const CarpetSpec& spec, int k, const Limits& limits = default_limits());

/// Coarse-graining points and conditioning grid translated by z - x0.
/// Throws InputError if x0 is not strictly inside the level-k cube or z is
/// outside the half-open fundamental cell.
CoarseSets coarse_sets(const CarpetSpec& spec, const LatticeGraph& outer, int k,
                       std::span<const Coord> x0, std::span<const Coord> z,
                       const Limits& limits = default_limits());

/// V_{N,eps}(y) = { z in V_N : max_i |z_i - round(ell^N y_i)| <= eps ell^N }
/// for a point y of [0,1]^d. Falls back to the nearest vertex when empty.
std::vector<VertexId> cubic_neighborhood(const CarpetSpec& spec, const LatticeGraph& outer,
                                         std::span<const double> y, double eps);

/// Same, centred at an outer vertex.
std::vector<VertexId> cubic_neighborhood(const CarpetSpec& spec, const LatticeGraph& outer,
                                         VertexId center, double eps);

}  // namespace gsc
