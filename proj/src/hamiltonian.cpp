#include "mpmsa/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpmsa::model {

InteractionSpec InteractionSpec::unit_bump(GridCoord r0, Real h) {
  InteractionSpec spec;
  spec.r0 = r0;
  spec.h = h;
  spec.phi.assign(static_cast<size_t>(r0) + 1, 1.0);
  return spec;
}

Real InteractionSpec::phi_at(Real r) const {
  if (r > static_cast<Real>(r0)) return 0.0;
  const auto idx = static_cast<size_t>(std::floor(r + 0.5));
  if (idx >= phi.size()) return 0.0;
  return phi[idx];
}

void validate(const InteractionSpec& spec) {
  if (spec.r0 < 0) throw std::invalid_argument("interaction range must be >= 0");
  for (Real v : spec.phi) {
    if (!std::isfinite(v)) throw std::invalid_argument("phi must be bounded");
  }
}

Real interaction_energy(const InteractionSpec& spec, const VectorX& positions) {
  Real u = 0.0;
  for (Index i = 0; i < positions.size(); ++i) {
    for (Index j = i + 1; j < positions.size(); ++j) {
      u += spec.phi_at(std::abs(positions[i] - positions[j]));
    }
  }
  return u;
}

Index Grid1D::size() const {
  if (half_side <= 0) throw std::invalid_argument("half-side must be positive");
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  const Real steps = 2.0 * static_cast<Real>(half_side) / spacing;
  const auto rounded = static_cast<Index>(std::llround(steps));
  if (std::abs(steps - static_cast<Real>(rounded)) > 1e-9) {
    throw std::invalid_argument("2L must be an integer multiple of the spacing");
  }
  if (rounded < 2) throw std::invalid_argument("interior grid is empty");
  return rounded - 1;
}

Index ConfigGrid::dim() const {
  Index d = 1;
  for (const auto& axis : axes) {
    const Index m = axis.size();
    if (d > (std::numeric_limits<Index>::max() / m)) {
      throw std::overflow_error("configuration grid dimension overflow");
    }
    d *= m;
  }
  return d;
}

void ConfigGrid::unravel(Index flat, std::vector<Index>& multi) const {
  multi.resize(axes.size());
  for (size_t k = 0; k < axes.size(); ++k) {
    const Index m = axes[k].size();
    multi[k] = flat % m;
    flat /= m;
  }
}

VectorX ConfigGrid::coordinates(Index flat) const {
  VectorX x(static_cast<Index>(axes.size()));
  for (size_t k = 0; k < axes.size(); ++k) {
    const Index m = axes[k].size();
    x[static_cast<Index>(k)] = axes[k].point(flat % m);
    flat /= m;
  }
  return x;
}

namespace {

ConfigGrid make_grid(const DomainSpec& domain) {
  if (domain.cube.d() != 1) {
    throw std::invalid_argument("assembly supports configuration dimension d = 1");
  }
  ConfigGrid grid;
  grid.axes.reserve(static_cast<size_t>(domain.cube.n()));
  for (int i = 0; i < domain.cube.n(); ++i) {
    grid.axes.push_back(Grid1D{domain.cube.center.coord(i), domain.cube.side(i),
                               domain.spacing});
  }
  for (const auto& axis : grid.axes) (void)axis.size();  // validates
  return grid;
}

Hamiltonian assemble(const DomainSpec& domain, const DisorderField& field,
                     const InteractionSpec& interaction, Index dimension_cap) {
  validate(interaction);
  ConfigGrid grid = make_grid(domain);
  const Index dim = grid.dim();
  if (dim > dimension_cap) throw DimensionCapError(dim, dimension_cap);

  const int n = grid.particles();
  const Real a = domain.spacing;
  const Real hop = -1.0 / (a * a);
  const Real onsite = 2.0 / (a * a);

  std::vector<Eigen::Triplet<Real>> triplets;
  triplets.reserve(static_cast<size_t>(dim) * static_cast<size_t>(2 * n + 1));

  std::vector<Index> multi;
  std::vector<Index> strides(static_cast<size_t>(n));
  Index stride = 1;
  for (int k = 0; k < n; ++k) {
    strides[static_cast<size_t>(k)] = stride;
    stride *= grid.axes[static_cast<size_t>(k)].size();
  }

  for (Index row = 0; row < dim; ++row) {
    grid.unravel(row, multi);
    Real diag = 0.0;
    const VectorX x = grid.coordinates(row);
    for (int k = 0; k < n; ++k) {
      diag += onsite + field.value(site_of(x[k]));
      const Index jk = multi[static_cast<size_t>(k)];
      if (jk > 0) triplets.emplace_back(row, row - strides[static_cast<size_t>(k)], hop);
      if (jk + 1 < grid.axes[static_cast<size_t>(k)].size()) {
        triplets.emplace_back(row, row + strides[static_cast<size_t>(k)], hop);
      }
    }
    if (n > 1 && interaction.h != 0.0) {
      diag += interaction.h * interaction_energy(interaction, x);
    }
    triplets.emplace_back(row, row, diag);
  }

  Hamiltonian h;
  h.grid = std::move(grid);
  h.matrix.resize(dim, dim);
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  h.matrix.makeCompressed();
  return h;
}

}  // namespace

Hamiltonian assemble_single(const DomainSpec& domain, const DisorderField& field,
                            Index dimension_cap) {
  if (domain.cube.n() != 1) {
    throw std::invalid_argument("assemble_single expects a one-particle cube");
  }
  return assemble(domain, field, InteractionSpec::none(), dimension_cap);
}

Hamiltonian assemble_multiparticle(const DomainSpec& domain,
                                   const DisorderField& field,
                                   const InteractionSpec& interaction,
                                   Index dimension_cap) {
  return assemble(domain, field, interaction, dimension_cap);
}

Hamiltonian restrict_to(const DomainSpec& domain, const DisorderField& field,
                        const InteractionSpec& interaction,
                        const geom::CubeSpec& subcube, Index dimension_cap) {
  if (!domain.cube.contains_cube(subcube)) {
    throw std::invalid_argument("sub-cube is not contained in the domain");
  }
  return assemble(DomainSpec{subcube, domain.spacing}, field, interaction,
                  dimension_cap);
}

SiteWindow covering_window(const geom::CubeSpec& cube) {
  return covering_window(std::vector<geom::CubeSpec>{cube});
}

SiteWindow covering_window(const std::vector<geom::CubeSpec>& cubes) {
  if (cubes.empty()) throw std::invalid_argument("no cubes given");
  SiteWindow w{std::numeric_limits<GridCoord>::max(),
               std::numeric_limits<GridCoord>::min()};
  for (const auto& cube : cubes) {
    for (int i = 0; i < cube.n(); ++i) {
      w.lo = std::min(w.lo, cube.center.coord(i) - cube.side(i) - 1);
      w.hi = std::max(w.hi, cube.center.coord(i) + cube.side(i) + 1);
    }
  }
  return w;
}

namespace {

template <typename Keep>
std::vector<Index> indices_where(const ConfigGrid& grid, Keep keep) {
  std::vector<Index> out;
  const Index dim = grid.dim();
  for (Index i = 0; i < dim; ++i) {
    if (keep(grid.coordinates(i))) out.push_back(i);
  }
  return out;
}

Real center_dist(const VectorX& x, const geom::CubeSpec& cube) {
  Real dist = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    dist = std::max(dist,
                    std::abs(x[k] - static_cast<Real>(cube.center.coord(static_cast<int>(k)))));
  }
  return dist;
}

}  // namespace

std::vector<Index> indices_in_cube(const ConfigGrid& grid,
                                   const geom::CubeSpec& cube) {
  if (cube.per_particle_sides) {
    return indices_where(grid, [&](const VectorX& x) {
      for (Index k = 0; k < x.size(); ++k) {
        if (std::abs(x[k] - static_cast<Real>(cube.center.coord(static_cast<int>(k)))) >=
            static_cast<Real>(cube.side(static_cast<int>(k)))) {
          return false;
        }
      }
      return true;
    });
  }
  return indices_where(grid, [&](const VectorX& x) {
    return center_dist(x, cube) < static_cast<Real>(cube.half_side);
  });
}

std::vector<Index> indices_in_shell(const ConfigGrid& grid,
                                    const geom::CubeSpec& cube) {
  const Real outer = static_cast<Real>(cube.half_side);
  const Real inner = static_cast<Real>(cube.half_side - 2);
  return indices_where(grid, [&](const VectorX& x) {
    const Real dist = center_dist(x, cube);
    return dist >= inner && dist < outer;
  });
}

RegionMasks region_masks(const ConfigGrid& grid, const geom::CubeSpec& cube) {
  const auto r = geom::regions(cube);
  RegionMasks masks;
  masks.interior = indices_in_cube(grid, r.interior);
  masks.shell = indices_in_shell(grid, cube);
  return masks;
}

}  // namespace mpmsa::model
