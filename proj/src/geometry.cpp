#include "mpmsa/geometry.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mpmsa::geom {

namespace {

void check_same_shape(const ParticlePoint& a, const ParticlePoint& b) {
  if (a.n != b.n || a.d != b.d) {
    throw std::invalid_argument("particle points have mismatched (n, d)");
  }
}

void check_same_layout(const CubeSpec& a, const CubeSpec& b) {
  check_same_shape(a.center, b.center);
  if (a.half_side != b.half_side) {
    throw std::invalid_argument("cubes have different half-sides");
  }
}

/// Connected components of an undirected graph given by an adjacency predicate.
template <typename Adjacent>
std::vector<std::vector<int>> components(int n, Adjacent adjacent) {
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> blocks;
  for (int seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0) continue;
    const int id = static_cast<int>(blocks.size());
    std::vector<int> stack{seed};
    std::vector<int> block;
    label[seed] = id;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      block.push_back(i);
      for (int j = 0; j < n; ++j) {
        if (label[j] < 0 && adjacent(i, j)) {
          label[j] = id;
          stack.push_back(j);
        }
      }
    }
    std::sort(block.begin(), block.end());
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace

ParticlePoint::ParticlePoint(int n_, int d_, CoordVector coords_)
    : n(n_), d(d_), coords(std::move(coords_)) {
  if (n < 1 || d < 1) throw std::invalid_argument("need n >= 1 and d >= 1");
  if (coords.size() != static_cast<Index>(n) * d) {
    throw std::invalid_argument("coords length must be n*d");
  }
}

ParticlePoint ParticlePoint::line(std::initializer_list<GridCoord> xs) {
  return line(std::vector<GridCoord>(xs));
}

ParticlePoint ParticlePoint::line(const std::vector<GridCoord>& xs) {
  CoordVector c(static_cast<Index>(xs.size()));
  for (Index i = 0; i < c.size(); ++i) c[i] = xs[static_cast<size_t>(i)];
  return ParticlePoint(static_cast<int>(xs.size()), 1, std::move(c));
}

GridCoord ParticlePoint::particle_dist(int i, const ParticlePoint& other,
                                       int j) const {
  GridCoord m = 0;
  for (int k = 0; k < d; ++k) {
    m = std::max(m, std::abs(coord(i, k) - other.coord(j, k)));
  }
  return m;
}

bool ParticlePoint::operator==(const ParticlePoint& other) const {
  return n == other.n && d == other.d && coords == other.coords;
}

GridCoord max_norm(const ParticlePoint& a, const ParticlePoint& b) {
  check_same_shape(a, b);
  return (a.coords - b.coords).cwiseAbs().maxCoeff();
}

GridCoord configuration_diameter(const ParticlePoint& u) {
  GridCoord diam = 0;
  for (int i = 0; i < u.n; ++i) {
    for (int j = i + 1; j < u.n; ++j) {
      diam = std::max(diam, u.particle_dist(i, u, j));
    }
  }
  return diam;
}

bool Box::disjoint(const Box& other) const {
  const GridCoord dist = (center - other.center).cwiseAbs().maxCoeff();
  return dist >= half_side + other.half_side;
}

CubeSpec::CubeSpec(ParticlePoint center_, GridCoord half_side_)
    : center(std::move(center_)), half_side(half_side_) {
  if (half_side <= 0) throw std::invalid_argument("half-side must be positive");
}

CubeSpec::CubeSpec(ParticlePoint center_, std::vector<GridCoord> sides)
    : center(std::move(center_)) {
  if (sides.size() != static_cast<size_t>(center.n)) {
    throw std::invalid_argument("need one half-side per particle");
  }
  for (GridCoord s : sides) {
    if (s <= 0) throw std::invalid_argument("half-sides must be positive");
  }
  half_side = *std::max_element(sides.begin(), sides.end());
  per_particle_sides = std::move(sides);
}

GridCoord CubeSpec::side(int particle) const {
  return per_particle_sides ? (*per_particle_sides)[static_cast<size_t>(particle)]
                            : half_side;
}

Box CubeSpec::particle_box(int particle) const {
  Box b;
  b.center = center.coords.segment(static_cast<Index>(particle) * d(), d());
  b.half_side = side(particle);
  return b;
}

bool CubeSpec::contains(const ParticlePoint& x) const {
  check_same_shape(center, x);
  for (int i = 0; i < n(); ++i) {
    if (x.particle_dist(i, center, i) >= side(i)) return false;
  }
  return true;
}

bool CubeSpec::contains_cube(const CubeSpec& other) const {
  check_same_shape(center, other.center);
  for (int i = 0; i < n(); ++i) {
    if (other.center.particle_dist(i, center, i) + other.side(i) > side(i)) {
      return false;
    }
  }
  return true;
}

std::vector<Box> projection(const CubeSpec& cube) {
  std::vector<Box> boxes;
  boxes.reserve(static_cast<size_t>(cube.n()));
  for (int i = 0; i < cube.n(); ++i) boxes.push_back(cube.particle_box(i));
  return boxes;
}

bool RegionPair::in_interior(const ParticlePoint& x) const {
  return interior.contains(x);
}

bool RegionPair::in_shell(const ParticlePoint& x) const {
  GridCoord dist = 0;
  for (int i = 0; i < interior.n(); ++i) {
    dist = std::max(dist, x.particle_dist(i, interior.center, i));
  }
  return dist >= shell_inner && dist < shell_outer;
}

RegionPair regions(const CubeSpec& cube) {
  if (cube.per_particle_sides) {
    throw std::invalid_argument("regions are defined for cubes, not rectangles");
  }
  if (cube.half_side <= 3) {
    throw std::domain_error("degenerate cube: need L > 3 for interior/shell split");
  }
  RegionPair r;
  r.interior = CubeSpec(cube.center, cube.half_side / 3);  // floor to grid
  r.shell_outer = cube.half_side;
  r.shell_inner = cube.half_side - 2;
  return r;
}

ClusterPartition decompose_clusters(const ParticlePoint& y, GridCoord L) {
  if (L <= 0) throw std::invalid_argument("cluster radius must be positive");
  ClusterPartition part;
  part.radius = L;
  // Open balls C_L(y_i), C_L(y_j) overlap iff |y_i - y_j| < 2L.
  part.blocks = components(y.n, [&](int i, int j) {
    return y.particle_dist(i, y, j) < 2 * L;
  });
  return part;
}

bool is_J_separable(const CubeSpec& a, const CubeSpec& b,
                    const std::vector<int>& J) {
  check_same_layout(a, b);
  if (J.empty()) throw std::invalid_argument("J must be nonempty");
  std::vector<bool> in_J(static_cast<size_t>(a.n()), false);
  for (int j : J) {
    if (j < 0 || j >= a.n()) throw std::invalid_argument("J index out of range");
    in_J[static_cast<size_t>(j)] = true;
  }
  for (int j = 0; j < a.n(); ++j) {
    if (!in_J[static_cast<size_t>(j)]) continue;
    const Box bj = a.particle_box(j);
    for (int k = 0; k < a.n(); ++k) {
      if (!in_J[static_cast<size_t>(k)] && !bj.disjoint(a.particle_box(k))) {
        return false;
      }
    }
    for (int k = 0; k < b.n(); ++k) {
      if (!bj.disjoint(b.particle_box(k))) return false;
    }
  }
  return true;
}

namespace {

constexpr int kMaxSubsetParticles = 16;

/// Witness mask for "self is J-separable from other", 0 if none. Distance
/// tables are pairwise per-particle max-norm distances; sides per particle.
unsigned find_witness_mask(int n, const GridCoord* d_self,
                           const GridCoord* d_cross, const GridCoord* s_self,
                           const GridCoord* s_cross) {
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      if (!(mask & (1u << j))) continue;
      for (int k = 0; k < n && ok; ++k) {
        if (!(mask & (1u << k)) && d_self[j * n + k] < s_self[j] + s_self[k]) {
          ok = false;
        }
      }
      for (int k = 0; k < n && ok; ++k) {
        if (d_cross[j * n + k] < s_self[j] + s_cross[k]) ok = false;
      }
    }
    if (ok) return mask;
  }
  return 0;
}

std::vector<int> mask_to_indices(unsigned mask, int n) {
  std::vector<int> J;
  for (int j = 0; j < n; ++j) {
    if (mask & (1u << j)) J.push_back(j);
  }
  return J;
}

}  // namespace

SeparabilityResult is_separable_pair(const CubeSpec& a, const CubeSpec& b,
                                     int total_particles) {
  check_same_layout(a, b);
  SeparabilityResult result;
  const GridCoord gate = 7 * static_cast<GridCoord>(total_particles) * a.half_side;
  if (max_norm(a.center, b.center) <= gate) return result;

  const int n = a.n();
  if (n > kMaxSubsetParticles) {
    throw std::invalid_argument("subset search capped at 16 particles");
  }
  GridCoord d_aa[kMaxSubsetParticles * kMaxSubsetParticles];
  GridCoord d_bb[kMaxSubsetParticles * kMaxSubsetParticles];
  GridCoord d_ab[kMaxSubsetParticles * kMaxSubsetParticles];
  GridCoord d_ba[kMaxSubsetParticles * kMaxSubsetParticles];
  GridCoord s_a[kMaxSubsetParticles];
  GridCoord s_b[kMaxSubsetParticles];
  for (int i = 0; i < n; ++i) {
    s_a[i] = a.side(i);
    s_b[i] = b.side(i);
    for (int j = 0; j < n; ++j) {
      d_aa[i * n + j] = a.center.particle_dist(i, a.center, j);
      d_bb[i * n + j] = b.center.particle_dist(i, b.center, j);
      d_ab[i * n + j] = a.center.particle_dist(i, b.center, j);
      d_ba[j * n + i] = d_ab[i * n + j];
    }
  }

  if (unsigned mask = find_witness_mask(n, d_aa, d_ab, s_a, s_b)) {
    result.separable = true;
    result.side = WitnessSide::first;
    result.witness_J = mask_to_indices(mask, n);
    return result;
  }
  if (unsigned mask = find_witness_mask(n, d_bb, d_ba, s_b, s_a)) {
    result.separable = true;
    result.side = WitnessSide::second;
    result.witness_J = mask_to_indices(mask, n);
  }
  return result;
}

std::vector<CubeSpec> separability_covering(const ParticlePoint& x, GridCoord L) {
  // If y is non-separable from x, every coordinate y_j falls into some
  // C_{2nL}(x_i); enumerate all assignment maps j -> i and keep the distinct
  // product-cube centers.
  const int n = x.n;
  const int d = x.d;
  const GridCoord cover_side = 2 * static_cast<GridCoord>(n) * L;

  std::set<std::vector<GridCoord>> seen;
  std::vector<CubeSpec> cover;
  std::vector<int> assign(static_cast<size_t>(n), 0);
  while (true) {
    std::vector<GridCoord> key;
    key.reserve(static_cast<size_t>(n) * d);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < d; ++k) key.push_back(x.coord(assign[static_cast<size_t>(j)], k));
    }
    if (seen.insert(key).second) {
      CoordVector c(static_cast<Index>(n) * d);
      for (Index i = 0; i < c.size(); ++i) c[i] = key[static_cast<size_t>(i)];
      cover.emplace_back(ParticlePoint(n, d, std::move(c)), cover_side);
    }
    int j = 0;
    while (j < n && ++assign[static_cast<size_t>(j)] == n) {
      assign[static_cast<size_t>(j)] = 0;
      ++j;
    }
    if (j == n) break;
  }
  return cover;
}

GridCoord min_separation_radius(const ParticlePoint& y, GridCoord L,
                                int total_particles) {
  return configuration_diameter(y) +
         5 * static_cast<GridCoord>(total_particles) * L;
}

Interactivity classify_interactivity(const CubeSpec& cube, GridCoord r0) {
  if (r0 < 0) throw std::invalid_argument("interaction range must be >= 0");
  const GridCoord bound =
      static_cast<GridCoord>(cube.n()) * (2 * cube.half_side + r0);
  return configuration_diameter(cube.center) <= bound
             ? Interactivity::fully_interactive
             : Interactivity::partially_interactive;
}

std::vector<int> pi_partition(const CubeSpec& cube, GridCoord r0) {
  if (classify_interactivity(cube, r0) == Interactivity::fully_interactive) {
    throw std::invalid_argument("cube is fully interactive: no partition with gap > r0");
  }
  // Components of the closed-overlap graph of radius-(L + r0/2) balls:
  // edge iff |u_i - u_j| <= 2L + r0. PI guarantees >= 2 components, and
  // cross-component particle boxes are then separated by more than r0.
  const ParticlePoint& u = cube.center;
  const GridCoord reach = 2 * cube.half_side + r0;
  const auto blocks = components(
      u.n, [&](int i, int j) { return u.particle_dist(i, u, j) <= reach; });
  const std::vector<int>& J = blocks.front();
  if (J.size() == static_cast<size_t>(u.n)) {
    throw std::logic_error("PI cube produced a connected overlap graph");
  }
  std::vector<bool> in_J(static_cast<size_t>(u.n), false);
  for (int j : J) in_J[static_cast<size_t>(j)] = true;
  for (int i = 0; i < u.n; ++i) {
    if (!in_J[static_cast<size_t>(i)]) continue;
    for (int j = 0; j < u.n; ++j) {
      if (in_J[static_cast<size_t>(j)]) continue;
      const GridCoord gap = u.particle_dist(i, u, j) - 2 * cube.half_side;
      if (gap <= r0) {
        throw std::logic_error("pi_partition gap check failed");
      }
    }
  }
  return J;
}

bool projections_disjoint(const CubeSpec& a, const CubeSpec& b) {
  check_same_layout(a, b);
  const auto pa = projection(a);
  const auto pb = projection(b);
  for (const Box& ba : pa) {
    for (const Box& bb : pb) {
      if (!ba.disjoint(bb)) return false;
    }
  }
  return true;
}

namespace {

/// Largest subset of items whose elements are pairwise compatible.
/// Exhaustive below the cutoff, otherwise greedy from every start index.
template <typename Compatible>
std::pair<int, bool> max_compatible_subset(int count, Compatible compatible,
                                           int exact_cutoff) {
  if (count == 0) return {0, true};
  if (count <= exact_cutoff) {
    int best = 0;
    for (unsigned mask = 1; mask < (1u << count); ++mask) {
      const int size = __builtin_popcount(mask);
      if (size <= best) continue;
      bool ok = true;
      for (int i = 0; i < count && ok; ++i) {
        if (!(mask & (1u << i))) continue;
        for (int j = i + 1; j < count && ok; ++j) {
          if ((mask & (1u << j)) && !compatible(i, j)) ok = false;
        }
      }
      if (ok) best = size;
    }
    return {best, true};
  }
  int best = 0;
  for (int start = 0; start < count; ++start) {
    std::vector<int> chosen{start};
    for (int i = 0; i < count; ++i) {
      if (i == start) continue;
      bool ok = true;
      for (int c : chosen) {
        if (!compatible(c, i)) {
          ok = false;
          break;
        }
      }
      if (ok) chosen.push_back(i);
    }
    best = std::max(best, static_cast<int>(chosen.size()));
  }
  return {best, false};
}

}  // namespace

SingularCounts count_singular(const std::vector<FlaggedCube>& cubes,
                              int total_particles, GridCoord r0,
                              int exact_cutoff) {
  SingularCounts counts;
  std::vector<int> flagged;
  for (int i = 0; i < static_cast<int>(cubes.size()); ++i) {
    if (cubes[static_cast<size_t>(i)].singular) flagged.push_back(i);
  }
  if (flagged.empty()) return counts;

  const GridCoord spacing_gate =
      7 * static_cast<GridCoord>(total_particles) *
      cubes[static_cast<size_t>(flagged.front())].cube.half_side;

  auto distant = [&](int a, int b) {
    return max_norm(cubes[static_cast<size_t>(a)].cube.center,
                    cubes[static_cast<size_t>(b)].cube.center) > spacing_gate;
  };
  auto separable = [&](int a, int b) {
    return is_separable_pair(cubes[static_cast<size_t>(a)].cube,
                             cubes[static_cast<size_t>(b)].cube,
                             total_particles)
        .separable;
  };

  auto subset_count = [&](const std::vector<int>& items, auto compat) {
    auto [size, exact] = max_compatible_subset(
        static_cast<int>(items.size()),
        [&](int i, int j) {
          return compat(items[static_cast<size_t>(i)], items[static_cast<size_t>(j)]);
        },
        exact_cutoff);
    counts.exact = counts.exact && exact;
    return size;
  };

  std::vector<int> pi, fi;
  for (int i : flagged) {
    const auto& cube = cubes[static_cast<size_t>(i)].cube;
    (classify_interactivity(cube, r0) == Interactivity::partially_interactive
         ? pi
         : fi)
        .push_back(i);
  }

  counts.m = subset_count(flagged, distant);
  counts.m_sep = subset_count(flagged, separable);
  counts.m_pi = subset_count(pi, distant);
  counts.m_fi = subset_count(fi, distant);
  counts.m_sep_pi = subset_count(pi, separable);
  return counts;
}

}  // namespace mpmsa::geom
