#pragma once

#include <vector>

#include "mpmsa/disorder.hpp"
#include "mpmsa/errors.hpp"
#include "mpmsa/geometry.hpp"
#include "mpmsa/types.hpp"

namespace mpmsa::model {

/// Pair interaction Phi tabulated on integer distances 0..r0, zero beyond r0,
/// applied with amplitude h. Entries past index r0 are ignored by contract.
struct InteractionSpec {
  std::vector<Real> phi{1.0, 1.0};
  GridCoord r0 = 1;
  Real h = 0.0;

  static InteractionSpec unit_bump(GridCoord r0 = 1, Real h = 0.0);
  static InteractionSpec none() { return InteractionSpec{{}, 0, 0.0}; }

  /// Phi(r) for a physical distance r in grid units: zero for r > r0,
  /// nearest-integer table sample within the support.
  Real phi_at(Real r) const;
};

void validate(const InteractionSpec& spec);

/// U(x) = sum_{i<j} Phi(|x_i - x_j|) for d=1 particle positions in grid units.
/// Does not include the amplitude h.
Real interaction_energy(const InteractionSpec& spec, const VectorX& positions);

/// Finite-volume discretization domain: an n-particle cube with grid spacing a
/// and Dirichlet boundary conditions.
struct DomainSpec {
  geom::CubeSpec cube;
  Real spacing = 1.0;
};

/// Interior grid of one particle's interval (c - L, c + L): the 2L/a - 1
/// points c - L + a, ..., c + L - a.
struct Grid1D {
  GridCoord center = 0;
  GridCoord half_side = 1;
  Real spacing = 1.0;

  Index size() const;
  Real point(Index j) const { return static_cast<Real>(center - half_side) + spacing * static_cast<Real>(j + 1); }
};

/// Product grid over the n particles (d = 1), particle 0 fastest in the
/// flattening: flat = j_0 + M_0 (j_1 + M_1 (...)).
struct ConfigGrid {
  std::vector<Grid1D> axes;

  int particles() const { return static_cast<int>(axes.size()); }
  Index dim() const;
  void unravel(Index flat, std::vector<Index>& multi) const;
  /// Physical coordinates (grid units) of the configuration point `flat`.
  VectorX coordinates(Index flat) const;
};

inline constexpr Index kDefaultDimensionCap = 20000;

/// Assembled finite-volume operator together with its grid.
struct Hamiltonian {
  SparseMatrixX matrix;
  ConfigGrid grid;

  Index dim() const { return matrix.rows(); }
  MatrixX dense() const { return MatrixX(matrix); }
};

/// H = -Delta + V on a single-particle interval; 3-point stencil
/// (2 psi_i - psi_{i-1} - psi_{i+1}) / a^2 with Dirichlet truncation.
Hamiltonian assemble_single(const DomainSpec& domain, const DisorderField& field,
                            Index dimension_cap = kDefaultDimensionCap);

/// n-particle operator: Kronecker sum of the one-particle stencils plus the
/// diagonal sum of site potentials plus the diagonal interaction h U(x).
Hamiltonian assemble_multiparticle(const DomainSpec& domain,
                                   const DisorderField& field,
                                   const InteractionSpec& interaction,
                                   Index dimension_cap = kDefaultDimensionCap);

/// Restriction to a sub-cube: reassembled on the sub-grid with the same field
/// values and Dirichlet conditions at the sub-cube boundary.
Hamiltonian restrict_to(const DomainSpec& domain, const DisorderField& field,
                        const InteractionSpec& interaction,
                        const geom::CubeSpec& subcube,
                        Index dimension_cap = kDefaultDimensionCap);

/// Integer site whose unit cell [s - 1/2, s + 1/2) contains x.
inline GridCoord site_of(Real x) { return static_cast<GridCoord>(std::floor(x + 0.5)); }

/// Site window covering every grid point of a cube (with one cell of slack).
SiteWindow covering_window(const geom::CubeSpec& cube);
SiteWindow covering_window(const std::vector<geom::CubeSpec>& cubes);

/// Flat indices of grid points lying strictly inside `cube` / in its
/// boundary shell C_L \ C_{L-2} (distances measured from the cube center).
std::vector<Index> indices_in_cube(const ConfigGrid& grid, const geom::CubeSpec& cube);
std::vector<Index> indices_in_shell(const ConfigGrid& grid, const geom::CubeSpec& cube);

struct RegionMasks {
  std::vector<Index> interior;  // C_{floor(L/3)}(u)
  std::vector<Index> shell;     // C_L(u) \ C_{L-2}(u)
};

/// Interior/shell masks of a cube on a grid (typically the cube's own grid).
RegionMasks region_masks(const ConfigGrid& grid, const geom::CubeSpec& cube);

}  // namespace mpmsa::model
