#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "mpmsa/geometry.hpp"

using namespace mpmsa;
using namespace mpmsa::geom;

namespace {

// ---------------------------------------------------------------------------
// Oracles. These stay independent of the library's code paths: clustering by
// boolean transitive closure, separability by the raw definition.
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> closure_clusters(const ParticlePoint& y,
                                               GridCoord L) {
  const int n = y.n;
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      reach[i][j] = y.particle_dist(i, y, j) < 2 * L;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<std::vector<int>> blocks;
  std::vector<bool> used(n, false);
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    std::vector<int> block;
    for (int j = 0; j < n; ++j) {
      if (reach[i][j]) {
        block.push_back(j);
        used[j] = true;
      }
    }
    blocks.push_back(block);
  }
  return blocks;
}

// J-separability re-stated directly from the definition on open boxes.
bool oracle_J_separable(const CubeSpec& a, const CubeSpec& b,
                        const std::vector<int>& J) {
  std::set<int> jset(J.begin(), J.end());
  for (int j : J) {
    for (int k = 0; k < a.n(); ++k) {
      if (!jset.count(k) &&
          a.center.particle_dist(j, a.center, k) < a.side(j) + a.side(k)) {
        return false;
      }
    }
    for (int k = 0; k < b.n(); ++k) {
      if (a.center.particle_dist(j, b.center, k) < a.side(j) + b.side(k)) {
        return false;
      }
    }
  }
  return true;
}

bool oracle_separable_pair(const CubeSpec& a, const CubeSpec& b, int N) {
  if (max_norm(a.center, b.center) <= 7 * static_cast<GridCoord>(N) * a.half_side) {
    return false;
  }
  const int n = a.n();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> J;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) J.push_back(j);
    }
    if (oracle_J_separable(a, b, J) || oracle_J_separable(b, a, J)) return true;
  }
  return false;
}

ParticlePoint random_config(std::mt19937_64& rng, int n, GridCoord span) {
  std::uniform_int_distribution<GridCoord> dist(-span, span);
  std::vector<GridCoord> xs(static_cast<size_t>(n));
  for (auto& x : xs) x = dist(rng);
  return ParticlePoint::line(xs);
}

}  // namespace

TEST_CASE("max_norm definition and edge cases") {
  CHECK(max_norm(ParticlePoint::line({0, 0}), ParticlePoint::line({3, -5})) == 5);
  const auto x = ParticlePoint::line({4, -2, 9});
  CHECK(max_norm(x, x) == 0);
  CHECK(max_norm(ParticlePoint::line({0, 0, 0}), ParticlePoint::line({7, 7, 7})) == 7);
  CHECK_THROWS_AS(max_norm(ParticlePoint::line({0}), ParticlePoint::line({0, 0})),
                  std::invalid_argument);
}

TEST_CASE("projection lists per-particle boxes unmerged") {
  const CubeSpec c(ParticlePoint::line({0, 10}), 2);
  const auto p = projection(c);
  REQUIRE(p.size() == 2);
  CHECK(p[0].center[0] == 0);
  CHECK(p[0].half_side == 2);
  CHECK(p[1].center[0] == 10);

  const auto coincident = projection(CubeSpec(ParticlePoint::line({0, 0}), 1));
  REQUIRE(coincident.size() == 2);
  CHECK(coincident[0].center[0] == coincident[1].center[0]);

  const auto single = projection(CubeSpec(ParticlePoint::line({5}), 3));
  REQUIRE(single.size() == 1);
  CHECK(single[0].center[0] == 5);
  CHECK(single[0].half_side == 3);
}

TEST_CASE("regions: floor(L/3) interior and width-2 shell") {
  const auto r9 = regions(CubeSpec(ParticlePoint::line({0}), 9));
  CHECK(r9.interior.half_side == 3);
  CHECK(r9.shell_inner == 7);
  CHECK(r9.shell_outer == 9);

  CHECK(regions(CubeSpec(ParticlePoint::line({0}), 28)).interior.half_side == 9);

  const auto r4 = regions(CubeSpec(ParticlePoint::line({0}), 4));
  CHECK(r4.interior.half_side == 1);
  CHECK(r4.shell_inner == 2);

  CHECK_THROWS_AS(regions(CubeSpec(ParticlePoint::line({0}), 3)), std::domain_error);
}

TEST_CASE("regions: interior and shell disjoint for L > 3") {
  const CubeSpec c(ParticlePoint::line({0, 5}), 7);
  const auto r = regions(c);
  for (GridCoord x0 = -7; x0 <= 7; ++x0) {
    for (GridCoord x1 = -2; x1 <= 12; ++x1) {
      const auto x = ParticlePoint::line({x0, x1});
      CHECK_FALSE((r.in_interior(x) && r.in_shell(x)));
    }
  }
}

TEST_CASE("decompose_clusters matches the closure oracle") {
  const auto p1 = decompose_clusters(ParticlePoint::line({0, 3, 100}), 2);
  CHECK(p1.blocks == std::vector<std::vector<int>>{{0, 1}, {2}});

  const auto p2 = decompose_clusters(ParticlePoint::line({0}), 5);
  CHECK(p2.blocks == std::vector<std::vector<int>>{{0}});

  const auto p3 = decompose_clusters(ParticlePoint::line({0, 10, 20, 30}), 6);
  CHECK(p3.blocks == std::vector<std::vector<int>>{{0, 1, 2, 3}});

  std::mt19937_64 rng(7001);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const GridCoord L = 1 + static_cast<GridCoord>(rng() % 6);
    const auto y = random_config(rng, n, 40);
    auto expected = closure_clusters(y, L);
    std::sort(expected.begin(), expected.end());
    auto got = decompose_clusters(y, L).blocks;
    std::sort(got.begin(), got.end());
    CHECK(got == expected);
  }
}

TEST_CASE("cluster blocks: diameter bound, disjoint unions, monotone in L") {
  std::mt19937_64 rng(7002);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const GridCoord L = 1 + static_cast<GridCoord>(rng() % 5);
    const auto y = random_config(rng, n, 60);
    const auto part = decompose_clusters(y, L);

    size_t covered = 0;
    for (const auto& block : part.blocks) {
      covered += block.size();
      GridCoord diam = 0;
      for (int i : block) {
        for (int j : block) diam = std::max(diam, y.particle_dist(i, y, j));
      }
      CHECK(diam <= 2 * static_cast<GridCoord>(n) * L);
      // distinct blocks have open-disjoint interval unions
      for (const auto& other : part.blocks) {
        if (&other == &block) continue;
        for (int i : block) {
          for (int j : other) CHECK(y.particle_dist(i, y, j) >= 2 * L);
        }
      }
    }
    CHECK(covered == static_cast<size_t>(n));

    // growing L only merges blocks
    const auto coarser = decompose_clusters(y, L + 1 + static_cast<GridCoord>(rng() % 4));
    for (const auto& block : part.blocks) {
      bool contained = false;
      for (const auto& big : coarser.blocks) {
        if (std::includes(big.begin(), big.end(), block.begin(), block.end())) {
          contained = true;
          break;
        }
      }
      CHECK(contained);
    }
  }
}

TEST_CASE("is_J_separable examples") {
  const CubeSpec a(ParticlePoint::line({100, 0}), 5);
  const CubeSpec b(ParticlePoint::line({0, 0}), 5);
  CHECK(is_J_separable(a, b, {0}));
  CHECK_FALSE(is_J_separable(b, b, {0}));
  CHECK_FALSE(is_J_separable(b, b, {0, 1}));

  const CubeSpec a1(ParticlePoint::line({0}), 5);
  const CubeSpec b1(ParticlePoint::line({20}), 5);
  CHECK(is_J_separable(a1, b1, {0}));

  CHECK_THROWS_AS(is_J_separable(a, b, {}), std::invalid_argument);
}

TEST_CASE("is_J_separable admits the full index set") {
  // J = {0..n-1}: only disjointness from the other cube's boxes remains.
  const CubeSpec a(ParticlePoint::line({0, 3}), 2);
  const CubeSpec far_b(ParticlePoint::line({100, 103}), 2);
  const CubeSpec near_b(ParticlePoint::line({4, 100}), 2);
  CHECK(is_J_separable(a, far_b, {0, 1}));
  CHECK_FALSE(is_J_separable(a, near_b, {0, 1}));
}

TEST_CASE("is_separable_pair examples and witness recording") {
  const CubeSpec a(ParticlePoint::line({0, 0}), 5);
  const CubeSpec b(ParticlePoint::line({100, 0}), 5);
  const auto r = is_separable_pair(a, b, 2);
  CHECK(r.separable);
  CHECK(r.side == WitnessSide::second);
  CHECK(r.witness_J == std::vector<int>{0});
  // the recorded witness re-checks
  CHECK(is_J_separable(b, a, r.witness_J));

  CHECK_FALSE(is_separable_pair(a, CubeSpec(ParticlePoint::line({30, 0}), 5), 2).separable);

  const auto r1 = is_separable_pair(CubeSpec(ParticlePoint::line({0}), 1),
                                    CubeSpec(ParticlePoint::line({8}), 1), 1);
  CHECK(r1.separable);
}

TEST_CASE("is_separable_pair agrees with the subset oracle") {
  std::mt19937_64 rng(7003);
  for (int trial = 0; trial < 4000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const GridCoord L = 1 + static_cast<GridCoord>(rng() % 4);
    const auto a = CubeSpec(random_config(rng, n, 30 * L), L);
    const auto b = CubeSpec(random_config(rng, n, 30 * L), L);
    const auto got = is_separable_pair(a, b, n);
    CHECK(got.separable == oracle_separable_pair(a, b, n));
    if (got.separable) {
      const CubeSpec& owner = got.side == WitnessSide::first ? a : b;
      const CubeSpec& other = got.side == WitnessSide::first ? b : a;
      CHECK(is_J_separable(owner, other, got.witness_J));
    }
    // the distance gate is symmetric
    CHECK(is_separable_pair(a, b, n).separable ==
          is_separable_pair(b, a, n).separable);
  }
}

TEST_CASE("separability_covering shapes") {
  const auto c1 = separability_covering(ParticlePoint::line({0}), 3);
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].half_side == 6);
  CHECK(c1[0].center.coords[0] == 0);

  const auto c2 = separability_covering(ParticlePoint::line({0, 0}), 5);
  CHECK(c2.size() <= 4);
  for (const auto& cube : c2) CHECK(cube.half_side == 20);

  const auto c3 = separability_covering(ParticlePoint::line({0, 100}), 2);
  CHECK(c3.size() == 4);
  for (const auto& cube : c3) CHECK(cube.half_side == 8);
}

// Lemma-style exhaustive scan: y outside every covering cube and past the
// 7NL gate must form a separable pair with x. Zero exceptions tolerated.
namespace {

long scan_covering_property(const ParticlePoint& x, GridCoord L) {
  const int n = x.n;
  const GridCoord gate = 7 * static_cast<GridCoord>(n) * L;
  const GridCoord radius = 30 * L;
  const auto cover = separability_covering(x, L);
  const CubeSpec cube_x(x, L);

  long failures = 0;
  std::vector<GridCoord> offset(static_cast<size_t>(n), -radius);
  std::vector<GridCoord> ys(static_cast<size_t>(n));
  while (true) {
    GridCoord norm = 0;
    for (int i = 0; i < n; ++i) {
      ys[static_cast<size_t>(i)] = x.coord(i) + offset[static_cast<size_t>(i)];
      norm = std::max(norm, std::abs(offset[static_cast<size_t>(i)]));
    }
    if (norm > gate) {
      const auto y = ParticlePoint::line(ys);
      bool inside_cover = false;
      for (const auto& cube : cover) {
        if (cube.contains(y)) {
          inside_cover = true;
          break;
        }
      }
      if (!inside_cover &&
          !is_separable_pair(cube_x, CubeSpec(y, L), n).separable) {
        ++failures;
      }
    }
    int i = 0;
    while (i < n && ++offset[static_cast<size_t>(i)] > radius) {
      offset[static_cast<size_t>(i)] = -radius;
      ++i;
    }
    if (i == n) break;
  }
  return failures;
}

}  // namespace

TEST_CASE("covering property: exhaustive lattice scan, n <= 3, L in {2,3,5}") {
  for (GridCoord L : {2, 3, 5}) {
    CHECK(scan_covering_property(ParticlePoint::line({0}), L) == 0);
    CHECK(scan_covering_property(ParticlePoint::line({0, 3}), L) == 0);
    CHECK(scan_covering_property(ParticlePoint::line({0, 7 * L}), L) == 0);
  }
  for (GridCoord L : {2, 3, 5}) {
    CHECK(scan_covering_property(ParticlePoint::line({0, 3, 7 * L + 2}), L) == 0);
  }
}

TEST_CASE("min_separation_radius values and lemma property") {
  CHECK(min_separation_radius(ParticlePoint::line({0, 0}), 2, 2) == 20);
  CHECK(min_separation_radius(ParticlePoint::line({0, 6}), 1, 2) == 16);
  CHECK(min_separation_radius(ParticlePoint::line({0}), 3, 1) == 15);

  // Any x beyond the radius is J-separable from y, J = the L-cluster of the
  // coordinate realizing |x - y|.
  std::mt19937_64 rng(7004);
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const GridCoord L = 1 + static_cast<GridCoord>(rng() % 4);
    const auto y = random_config(rng, n, 10 * L);
    const GridCoord radius = min_separation_radius(y, L, n);

    // place x by pushing one coordinate of a random configuration far out
    auto xs = random_config(rng, n, 8 * L);
    const GridCoord shift =
        radius + 1 + static_cast<GridCoord>(rng() % (4 * L + 1));
    const int moved = static_cast<int>(rng() % static_cast<unsigned>(n));
    xs.coords[moved] = y.coord(moved) + ((rng() & 1) ? shift : -shift);
    if (max_norm(xs, y) <= radius) continue;  // another coordinate dominated

    int far_idx = 0;
    GridCoord far_dist = -1;
    for (int i = 0; i < n; ++i) {
      if (xs.particle_dist(i, y, i) > far_dist) {
        far_dist = xs.particle_dist(i, y, i);
        far_idx = i;
      }
    }
    std::vector<int> J;
    for (const auto& block : decompose_clusters(xs, L).blocks) {
      if (std::find(block.begin(), block.end(), far_idx) != block.end()) {
        J = block;
        break;
      }
    }
    if (!is_J_separable(CubeSpec(xs, L), CubeSpec(y, L), J)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("classify_interactivity arithmetic") {
  CHECK(classify_interactivity(CubeSpec(ParticlePoint::line({0, 15}), 10), 1) ==
        Interactivity::fully_interactive);
  CHECK(classify_interactivity(CubeSpec(ParticlePoint::line({0, 100}), 10), 1) ==
        Interactivity::partially_interactive);
  CHECK(classify_interactivity(CubeSpec(ParticlePoint::line({0, 10, 29}), 5), 0) ==
        Interactivity::fully_interactive);
  // n = 1 is FI by convention
  CHECK(classify_interactivity(CubeSpec(ParticlePoint::line({42}), 4), 3) ==
        Interactivity::fully_interactive);
}

TEST_CASE("pi_partition examples") {
  const auto J = pi_partition(CubeSpec(ParticlePoint::line({0, 100}), 10), 1);
  CHECK(J == std::vector<int>{0});

  const auto J2 = pi_partition(CubeSpec(ParticlePoint::line({0, 1, 50}), 2), 0);
  CHECK(J2 == std::vector<int>{0, 1});

  CHECK_THROWS_AS(pi_partition(CubeSpec(ParticlePoint::line({0, 15}), 10), 1),
                  std::invalid_argument);
}

TEST_CASE("pi_partition property: PI cubes split with gap > r0, FI cubes throw") {
  std::mt19937_64 rng(7005);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const GridCoord L = 1 + static_cast<GridCoord>(rng() % 6);
    const GridCoord r0 = static_cast<GridCoord>(rng() % 4);
    const auto u = random_config(rng, n, 12 * L);
    const CubeSpec cube(u, L);
    if (classify_interactivity(cube, r0) == Interactivity::partially_interactive) {
      const auto J = pi_partition(cube, r0);
      REQUIRE(!J.empty());
      REQUIRE(J.size() < static_cast<size_t>(n));
      std::set<int> jset(J.begin(), J.end());
      GridCoord gap = std::numeric_limits<GridCoord>::max();
      for (int i : J) {
        for (int k = 0; k < n; ++k) {
          if (jset.count(k)) continue;
          gap = std::min(gap, u.particle_dist(i, u, k) - 2 * L);
        }
      }
      CHECK(gap > r0);
    } else {
      CHECK_THROWS_AS(pi_partition(cube, r0), std::invalid_argument);
    }
  }
}

TEST_CASE("projections_disjoint examples") {
  const GridCoord L = 5;
  CHECK(projections_disjoint(CubeSpec(ParticlePoint::line({0, 0}), L),
                             CubeSpec(ParticlePoint::line({100, 100}), L)));
  CHECK_FALSE(projections_disjoint(CubeSpec(ParticlePoint::line({0, 0}), L),
                                   CubeSpec(ParticlePoint::line({100, 0}), L)));
}

TEST_CASE("FI pairs far apart have disjoint projections") {
  // Random FI pairs with L > 2 r0 and |x - y| > 7nL: always disjoint.
  std::mt19937_64 rng(7006);
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const GridCoord r0 = static_cast<GridCoord>(rng() % 3);
    const GridCoord L = 2 * r0 + 1 + static_cast<GridCoord>(rng() % 5);
    const GridCoord fi_span = static_cast<GridCoord>(n) * (2 * L + r0) / 2;

    auto make_fi = [&](GridCoord base) {
      std::vector<GridCoord> xs(static_cast<size_t>(n));
      for (auto& v : xs) {
        v = base + static_cast<GridCoord>(rng() % (2 * fi_span + 1)) - fi_span;
      }
      return CubeSpec(ParticlePoint::line(xs), L);
    };

    const auto a = make_fi(0);
    const GridCoord push = 7 * static_cast<GridCoord>(n) * L + 1 +
                           static_cast<GridCoord>(rng() % (5 * L));
    const auto b = make_fi(push + 2 * fi_span);
    if (classify_interactivity(a, r0) != Interactivity::fully_interactive) continue;
    if (classify_interactivity(b, r0) != Interactivity::fully_interactive) continue;
    if (max_norm(a.center, b.center) <= 7 * static_cast<GridCoord>(n) * L) continue;
    if (!projections_disjoint(a, b)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("count_singular basics") {
  CHECK(count_singular({}, 2, 1).m == 0);

  // two separable singular FI cubes
  std::vector<FlaggedCube> cubes;
  cubes.push_back({CubeSpec(ParticlePoint::line({0, 1}), 2), true});
  cubes.push_back({CubeSpec(ParticlePoint::line({100, 101}), 2), true});
  const auto counts = count_singular(cubes, 2, 1);
  CHECK(counts.m == 2);
  CHECK(counts.m_sep == 2);
  CHECK(counts.m_fi == 2);
  CHECK(counts.m_pi == 0);
  CHECK(counts.exact);

  // unflagged cubes do not count
  cubes[1].singular = false;
  CHECK(count_singular(cubes, 2, 1).m == 1);
}

TEST_CASE("kappa(n)+2 spaced singular cubes force a separable pair") {
  std::mt19937_64 rng(7007);
  for (int n : {2, 3}) {
    const int kappa = 1;
    GridCoord kap = 1;
    for (int i = 0; i < n; ++i) kap *= n;
    (void)kappa;
    for (int trial = 0; trial < 200; ++trial) {
      const GridCoord L = 2 + static_cast<GridCoord>(rng() % 3);
      const GridCoord gate = 7 * static_cast<GridCoord>(n) * L;
      std::vector<FlaggedCube> cubes;
      // place kappa(n)+2 singular cubes with pairwise center distance > 7NL
      for (GridCoord c = 0; c < kap + 2; ++c) {
        std::vector<GridCoord> xs(static_cast<size_t>(n));
        const GridCoord base = c * 2 * (gate + 2 * static_cast<GridCoord>(n) * L);
        for (auto& v : xs) {
          v = base + static_cast<GridCoord>(rng() % (2 * n * L + 1));
        }
        cubes.push_back({CubeSpec(ParticlePoint::line(xs), L), true});
      }
      bool spaced = true;
      for (size_t i = 0; i < cubes.size() && spaced; ++i) {
        for (size_t j = i + 1; j < cubes.size() && spaced; ++j) {
          spaced = max_norm(cubes[i].cube.center, cubes[j].cube.center) > gate;
        }
      }
      REQUIRE(spaced);
      const auto counts = count_singular(cubes, n, 1);
      CHECK(counts.m >= kap + 2);
      CHECK(counts.m_sep >= 2);
    }
  }
}

TEST_CASE("kappa(2)+2 PI cubes: exhaustive subset search finds a separable PI pair") {
  std::mt19937_64 rng(7008);
  const int n = 2;
  const GridCoord kap = 4;
  for (int trial = 0; trial < 200; ++trial) {
    const GridCoord L = 2 + static_cast<GridCoord>(rng() % 3);
    const GridCoord r0 = 1;
    const GridCoord gate = 7 * static_cast<GridCoord>(n) * L;
    const GridCoord pi_gap = static_cast<GridCoord>(n) * (2 * L + r0) + 1;
    std::vector<FlaggedCube> cubes;
    for (GridCoord c = 0; c < kap + 2; ++c) {
      const GridCoord base = c * 4 * (gate + pi_gap + 4 * L);
      const GridCoord split = pi_gap + static_cast<GridCoord>(rng() % (2 * L));
      cubes.push_back(
          {CubeSpec(ParticlePoint::line({base, base + split}), L), true});
    }
    bool spaced = true;
    for (size_t i = 0; i < cubes.size() && spaced; ++i) {
      for (size_t j = i + 1; j < cubes.size() && spaced; ++j) {
        spaced = max_norm(cubes[i].cube.center, cubes[j].cube.center) > gate;
      }
    }
    REQUIRE(spaced);
    for (const auto& fc : cubes) {
      REQUIRE(classify_interactivity(fc.cube, r0) ==
              Interactivity::partially_interactive);
    }
    const auto counts = count_singular(cubes, n, r0);
    CHECK(counts.m_pi >= kap + 2);
    CHECK(counts.m_sep_pi >= 2);
    CHECK(counts.exact);  // 6 cubes: subset search is exhaustive
  }
}

TEST_CASE("count_singular greedy fallback stays consistent beyond the cutoff") {
  // 14 far-apart singular cubes: greedy must still find them all.
  std::vector<FlaggedCube> cubes;
  for (GridCoord i = 0; i < 14; ++i) {
    cubes.push_back({CubeSpec(ParticlePoint::line({i * 1000, i * 1000 + 3}), 2), true});
  }
  const auto counts = count_singular(cubes, 2, 1);
  CHECK_FALSE(counts.exact);
  CHECK(counts.m == 14);
  CHECK(counts.m_sep == 14);
}
