#pragma once

#include <optional>
#include <vector>

#include "mpmsa/types.hpp"

namespace mpmsa::geom {

/// A configuration of n particles on the lattice Z^{nd}, stored particle-major:
/// coords = (x_1^1..x_1^d, x_2^1..x_2^d, ...).
struct ParticlePoint {
  int n = 0;
  int d = 1;
  CoordVector coords;

  ParticlePoint() = default;
  ParticlePoint(int n_, int d_, CoordVector coords_);

  /// d=1 convenience: one coordinate per particle.
  static ParticlePoint line(std::initializer_list<GridCoord> xs);
  static ParticlePoint line(const std::vector<GridCoord>& xs);

  GridCoord coord(int particle, int k = 0) const {
    return coords[static_cast<Index>(particle) * d + k];
  }

  /// Max-norm distance between particle i of *this and particle j of other.
  GridCoord particle_dist(int i, const ParticlePoint& other, int j) const;

  bool operator==(const ParticlePoint& other) const;
};

/// Max-norm |a - b| over all n*d coordinates. Throws on shape mismatch.
GridCoord max_norm(const ParticlePoint& a, const ParticlePoint& b);

/// diam(Pi u) = max_{i != j} |u_i - u_j| (0 when n = 1).
GridCoord configuration_diameter(const ParticlePoint& u);

/// Open max-norm ball of one particle: {x in R^d : |x - center| < half_side}.
struct Box {
  CoordVector center;
  GridCoord half_side = 0;

  /// Open sets: boxes that only touch at the boundary are disjoint.
  bool disjoint(const Box& other) const;
};

/// An n-particle cube C_L(u), or a rectangle when per-particle half-sides are given.
struct CubeSpec {
  ParticlePoint center;
  GridCoord half_side = 0;
  std::optional<std::vector<GridCoord>> per_particle_sides;

  CubeSpec() = default;
  CubeSpec(ParticlePoint center_, GridCoord half_side_);
  CubeSpec(ParticlePoint center_, std::vector<GridCoord> sides);

  int n() const { return center.n; }
  int d() const { return center.d; }
  GridCoord side(int particle) const;
  Box particle_box(int particle) const;

  /// Strict (open-cube) membership.
  bool contains(const ParticlePoint& x) const;
  /// Open-cube containment of another cube with the same particle count.
  bool contains_cube(const CubeSpec& other) const;
};

/// Pi C_L(u) = C_L(u_1) u ... u C_L(u_n), returned unmerged, one box per particle.
std::vector<Box> projection(const CubeSpec& cube);

/// Interior cube C_{floor(L/3)}(u) and the boundary shell C_L \ C_{L-2}.
struct RegionPair {
  CubeSpec interior;
  GridCoord shell_outer = 0;  // L
  GridCoord shell_inner = 0;  // L - 2

  bool in_interior(const ParticlePoint& x) const;
  bool in_shell(const ParticlePoint& x) const;
};

/// Throws std::domain_error for L <= 3 (degenerate: shell and interior collide).
RegionPair regions(const CubeSpec& cube);

/// Maximal L-clusters of a configuration: connected components of the
/// open-overlap graph on the balls C_L(y_j).
struct ClusterPartition {
  std::vector<std::vector<int>> blocks;  // each sorted; blocks ordered by smallest member
  GridCoord radius = 0;
};

ClusterPartition decompose_clusters(const ParticlePoint& y, GridCoord L);

/// True iff (U_{j in J} C_L(a_j)) is disjoint from
/// (U_{j not in J} C_L(a_j)) u (U_j C_L(b_j)). J may be all of {0..n-1}.
/// Throws on empty J.
bool is_J_separable(const CubeSpec& a, const CubeSpec& b,
                    const std::vector<int>& J);

enum class WitnessSide { none, first, second };

struct SeparabilityResult {
  bool separable = false;
  WitnessSide side = WitnessSide::none;
  std::vector<int> witness_J;
};

/// Separable pair: |a - b| > 7NL and one cube is J-separable from the other.
/// Searches both sides over all nonempty index subsets and records the witness.
SeparabilityResult is_separable_pair(const CubeSpec& a, const CubeSpec& b,
                                     int total_particles);

/// The covering family of <= n^n cubes of half-side 2nL around x: any y with
/// |y - x| > 7NL lying outside every returned cube forms a separable pair with x.
/// One candidate center per assignment map {1..n} -> {1..n}, deduplicated.
std::vector<CubeSpec> separability_covering(const ParticlePoint& x, GridCoord L);

/// max_{i,j} |y_i - y_j| + 5NL: any x beyond this distance from y is
/// J-separable from y (witness J = the L-cluster of the farthest coordinate).
GridCoord min_separation_radius(const ParticlePoint& y, GridCoord L,
                                int total_particles);

enum class Interactivity { fully_interactive, partially_interactive };

/// FI iff diam(Pi u) <= n(2L + r0); n = 1 cubes are FI (empty pair set).
Interactivity classify_interactivity(const CubeSpec& cube, GridCoord r0);

/// For a PI cube, an index set J with 1 <= |J| <= n-1 and
/// dist(Pi_J, Pi_{J^c}) > r0, re-checked before returning.
/// Throws std::invalid_argument on FI cubes.
std::vector<int> pi_partition(const CubeSpec& cube, GridCoord r0);

/// Every box of Pi(a) disjoint from every box of Pi(b).
bool projections_disjoint(const CubeSpec& a, const CubeSpec& b);

struct FlaggedCube {
  CubeSpec cube;
  bool singular = false;
};

struct SingularCounts {
  int m = 0;        // flagged cubes, pairwise centers > 7NL apart
  int m_sep = 0;    // max pairwise-separable flagged subset
  int m_pi = 0;     // as m, PI cubes only
  int m_fi = 0;     // as m, FI cubes only (spacing makes these separable)
  int m_sep_pi = 0; // as m_sep, PI cubes only
  bool exact = true;  // false once any count fell back to the greedy search
};

/// Subset maximisation is exact up to `exact_cutoff` cubes and greedy
/// (best over all starting cubes) beyond.
SingularCounts count_singular(const std::vector<FlaggedCube>& cubes,
                              int total_particles, GridCoord r0,
                              int exact_cutoff = 12);

}  // namespace mpmsa::geom
