#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsc/limits.hpp"
#include "gsc/point_set.hpp"

namespace gsc {

/// Generator of a generalized Sierpinski carpet: the level-1 cells retained
/// inside the unit cube, each cell given by its integer corner in
/// {0, ..., length_scale - 1}^dimension.
class CarpetSpec {
 public:
  /// Validates ranges and cardinality; throws InputError on malformed input.
  /// Cells are stored sorted lexicographically.
  CarpetSpec(int dimension, int length_scale, std::vector<std::vector<Coord>> cells,
             bool allow_full_cube = false, std::string name = {});

  int dimension() const { return dim_; }
  int length_scale() const { return ell_; }
  /// m_F, the number of retained level-1 cells.
  std::size_t mass() const { return cells_.size(); }
  const PointSet& cells() const { return cells_; }
  bool allow_full_cube() const { return allow_full_cube_; }
  bool is_full_cube() const;
  const std::string& name() const { return name_; }

  /// Stable identifier derived from the cell pattern (FNV-1a, hex).
  std::string id() const;

  /// True if the level-1 cell with corner `cell` is retained.
  bool has_base_cell(std::span<const Coord> cell) const;

  /// True if the level-`level` cell with integer corner `cell` (coordinates
  /// in [0, ell^level)) belongs to the level-`level` pre-carpet. Negative or
  /// out-of-box coordinates return false.
  bool contains_cell(int level, std::span<const Coord> cell) const;

  /// True if the lattice point lies in the closure of a retained level-`level`
  /// cell, i.e. belongs to ell^level F_level intersected with Z^d.
  bool contains_point(int level, std::span<const Coord> point) const;

 private:
  int dim_;
  int ell_;
  PointSet cells_;
  std::vector<char> base_mask_;  // ell^d lookup, row-major
  bool allow_full_cube_;
  std::string name_;
};

/// Standard two-dimensional carpet: 3x3 with the centre removed.
CarpetSpec sierpinski_carpet();
/// Menger sponge: 3x3x3 minus the six face centres and the body centre.
CarpetSpec menger_sponge();
/// Calibration pattern with every cell retained (Euclidean lattice).
CarpetSpec full_cube(int dimension, int length_scale);

/// Integer power with overflow check (throws ResourceError).
Coord ipow(Coord base, int exponent);

// ---------------------------------------------------------------------------
// Validation

enum class Axiom { Symmetry = 0, Connectedness = 1, NonDiagonality = 2, BordersIncluded = 3 };

struct AxiomResult {
  bool pass = true;
  std::string witness;  // empty on pass
};

struct ValidationReport {
  std::array<AxiomResult, 4> axioms;
  bool calibration_mode = false;

  const AxiomResult& operator[](Axiom a) const { return axioms[static_cast<int>(a)]; }
  bool ok() const;
  std::vector<std::string> failed_names() const;
};

const char* axiom_name(Axiom a);

struct ValidationOptions {
  /// Additionally re-test non-diagonality at the level-2 resolution.
  bool deep_non_diagonality = false;
};

ValidationReport validate_gsc(const CarpetSpec& spec, ValidationOptions options = {});

/// A hyperoctahedral isometry of the unit cube: output axis i reads input
/// axis perm[i], reflected when flip[i] is set.
struct CubeIsometry {
  std::vector<int> perm;
  std::vector<bool> flip;
};

/// All 2^d d! isometries, identity first.
std::vector<CubeIsometry> cube_isometries(int dimension);

/// Applies an isometry to cell corners of a grid with `side` cells per axis.
std::vector<std::vector<Coord>> apply_isometry(const CubeIsometry& iso, const PointSet& cells,
                                               Coord side);

// ---------------------------------------------------------------------------
// Level structure

/// Cells of Q_N(F_N) as integer corners in [0, ell^N)^d, sorted
/// lexicographically. Size is exactly m_F^N.
struct LevelCellSet {
  int level = 0;
  PointSet cells;
  std::size_t size() const { return cells.size(); }
};

LevelCellSet cells_at_level(const CarpetSpec& spec, int level,
                            const Limits& limits = default_limits());

/// Lattice points of ell^N F_N, sorted lexicographically (the vertex set V_N).
PointSet outer_vertex_set(const CarpetSpec& spec, int level, const Limits& limits = default_limits());

/// Assignment of the vertices of V_N to the half-open level-`cell_level`
/// cells. Each part is identified by the index of its closed cell in
/// cells_at_level(spec, cell_level).
struct HalfOpenPartition {
  int level = 0;       // N
  int cell_level = 0;  // j
  LevelCellSet parts;
  /// owner[v] = part index of vertex v of build_outer_graph(spec, level).
  std::vector<std::uint32_t> owner;

  std::size_t nonempty_parts() const;
};

/// Owner of a single lattice point: the cell containing it in its half-open
/// form; points covered by no retained half-open cell go to the
/// lexicographically smallest retained cell whose closure contains them.
/// Returns the cell corner; throws InputError if the point is not in V_N.
std::vector<Coord> half_open_owner(const CarpetSpec& spec, int level, int cell_level,
                                   std::span<const Coord> point);

HalfOpenPartition half_open_partition(const CarpetSpec& spec, int cell_level, int level,
                                      const Limits& limits = default_limits());

// ---------------------------------------------------------------------------
// Dimensions

struct DimensionReport {
  double d_h = 0;
  double d_w = 0;
  double d_s = 0;
  double rho_hat = 0;
  double t_hat = 0;
  bool transient = false;
};

DimensionReport dimensions(const CarpetSpec& spec, double rho_hat);

}  // namespace gsc
