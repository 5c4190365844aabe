#include "mpmsa/msa.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mpmsa::msa {

namespace {

constexpr Real kWilsonZ = 1.959963984540054;  // 95% two-sided normal quantile

GridCoord isqrt_floor(GridCoord v) {
  auto x = static_cast<GridCoord>(std::sqrt(static_cast<Real>(v)));
  while (x > 0 && x * x > v) --x;
  while ((x + 1) * (x + 1) <= v) ++x;
  return x;
}

/// ceil(L^{2/3}): smallest s with s^3 >= L^2.
GridCoord ceil_two_thirds(GridCoord L) {
  auto s = static_cast<GridCoord>(std::cbrt(static_cast<Real>(L) * static_cast<Real>(L)));
  while (s * s * s < L * L) ++s;
  while (s > 1 && (s - 1) * (s - 1) * (s - 1) >= L * L) --s;
  return s;
}

/// Run per_trial(t) for t = 0..trials-1 across a small thread pool.
/// Work per index is pure, so scheduling never affects results.
template <typename Fn>
void for_each_trial(int trials, int threads, Fn&& per_trial) {
  threads = std::max(1, threads);
  if (threads == 1 || trials <= 1) {
    for (int t = 0; t < trials; ++t) per_trial(t);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = std::min(threads, trials);
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
        if (failed.load()) return;
        try {
          per_trial(t);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

VectorX eigenvalues_only(const model::Hamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(h.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver failed to converge");
  }
  return solver.eigenvalues();
}

geom::CubeSpec factor_cube(const geom::CubeSpec& cube, const std::vector<int>& idx) {
  const int d = cube.d();
  CoordVector coords(static_cast<Index>(idx.size()) * d);
  Index at = 0;
  for (int i : idx) {
    for (int k = 0; k < d; ++k) coords[at++] = cube.center.coord(i, k);
  }
  return geom::CubeSpec(
      geom::ParticlePoint(static_cast<int>(idx.size()), d, std::move(coords)),
      cube.half_side);
}

std::string pair_type_tag(const geom::CubeSpec& a, const geom::CubeSpec& b,
                          GridCoord r0) {
  auto tag = [&](const geom::CubeSpec& c) {
    return geom::classify_interactivity(c, r0) ==
                   geom::Interactivity::partially_interactive
               ? "PI"
               : "FI";
  };
  const std::string ta = tag(a), tb = tag(b);
  if (ta == tb) return ta + "-" + tb;
  return "mixed";
}

bool is_bernoulli(const model::DisorderSpec& spec) {
  return std::holds_alternative<model::BernoulliDist>(spec.distribution);
}

/// ||1_out P_phi 1_int|| for the rank-one projector of eigenvector j:
/// the product of its boundary-shell and interior masses.
Real projector_block_mass(const spectral::EigenDecomposition& eig, Index j,
                          const model::RegionMasks& masks) {
  Real shell = 0.0, interior = 0.0;
  for (Index i : masks.shell) shell += eig.vectors(i, j) * eig.vectors(i, j);
  for (Index i : masks.interior) interior += eig.vectors(i, j) * eig.vectors(i, j);
  return std::sqrt(shell) * std::sqrt(interior);
}

}  // namespace

void validate(const MsaParams& params) {
  if (params.n < 1 || params.total_particles < params.n || params.d < 1) {
    throw std::invalid_argument("need 1 <= n <= N and d >= 1");
  }
  if (!(params.p > 6.0 * params.total_particles * params.d)) {
    throw std::invalid_argument("need p > 6 N d");
  }
  if (!(params.m > 0.0) || !(params.m1 > 0.0) || !(params.m1 < params.m)) {
    throw std::invalid_argument("need 0 < m1 < m");
  }
  if (params.L0 < 4) throw std::invalid_argument("need L0 >= 4");
}

ScaleSchedule scale_sequence(GridCoord L0, int k_max) {
  if (L0 < 2) throw std::invalid_argument("need L0 >= 2");
  if (k_max < 0) throw std::invalid_argument("need k_max >= 0");
  constexpr GridCoord kCubeRootOfMax = 2097151;  // floor((2^63-1)^{1/3})
  ScaleSchedule lengths{L0};
  GridCoord L = L0;
  for (int k = 0; k < k_max; ++k) {
    if (L > kCubeRootOfMax) throw std::overflow_error("scale sequence overflow");
    L = isqrt_floor(L * L * L) + 1;
    lengths.push_back(L);
  }
  return lengths;
}

Real decay_gamma(Real m, GridCoord L, int n, int total_particles) {
  if (!(m > 0.0) || L < 1 || n < 1 || n > total_particles) {
    throw std::invalid_argument("decay_gamma: need m > 0, L >= 1, 1 <= n <= N");
  }
  const Real base = 1.0 + std::pow(static_cast<Real>(L), -0.125);
  return m * std::pow(base, total_particles - n + 1);
}

Real singular_threshold(Real m, GridCoord L, int n, int total_particles) {
  return std::exp(-decay_gamma(m, L, n, total_particles) * static_cast<Real>(L));
}

Real resonance_threshold(GridCoord L) {
  return std::exp(-std::sqrt(static_cast<Real>(L)));
}

CubeWorkspace make_workspace(const geom::CubeSpec& cube,
                             const model::DisorderField& field,
                             const model::InteractionSpec& interaction,
                             Real spacing, Index dimension_cap) {
  CubeWorkspace ws;
  ws.cube = cube;
  ws.hamiltonian = model::assemble_multiparticle(model::DomainSpec{cube, spacing},
                                                 field, interaction, dimension_cap);
  ws.eig = spectral::eigendecompose(ws.hamiltonian,
                                    std::max(dimension_cap, spectral::kDefaultDenseCap));
  ws.masks = model::region_masks(ws.hamiltonian.grid, cube);
  return ws;
}

CubeVerdict verdict_at(const CubeWorkspace& ws, Real E, const MsaParams& params) {
  CubeVerdict v;
  v.cube = ws.cube;
  v.E = E;
  const GridCoord L = ws.cube.half_side;
  v.res_threshold = resonance_threshold(L);
  v.ns_threshold = singular_threshold(params.m, L, params.n, params.total_particles);
  v.dist_to_spectrum = spectral::dist_to_spectrum(ws.eig.values, E);
  v.resonant = v.dist_to_spectrum <= v.res_threshold;  // inclusive by contract
  if (v.dist_to_spectrum <= spectral::resonance_guard(ws.eig.values)) {
    // resolvent numerically unavailable: the cube cannot be nonsingular
    v.block_norm = std::numeric_limits<Real>::infinity();
    v.nonsingular = false;
    return v;
  }
  v.block_norm =
      spectral::green_block_norm(ws.eig, E, ws.masks.shell, ws.masks.interior)
          .block_norm;
  v.nonsingular = v.block_norm <= v.ns_threshold;
  return v;
}

CubeVerdict classify_cube(const geom::CubeSpec& cube,
                          const model::DisorderField& field,
                          const model::InteractionSpec& interaction, Real E,
                          const MsaParams& params, Real spacing) {
  return verdict_at(make_workspace(cube, field, interaction, spacing), E, params);
}

namespace {

std::vector<GridCoord> cnr_size_ladder(GridCoord L) {
  std::vector<GridCoord> sizes;
  GridCoord s = ceil_two_thirds(L);
  while (s < L) {
    sizes.push_back(s);
    s = std::max(s + 1, (3 * s) / 2);
  }
  sizes.push_back(L);
  return sizes;
}

/// Sub-cube centers of size `sub` on the lattice u + step Z^{nd} inside C_L(u).
void enumerate_subcube_centers(const geom::CubeSpec& cube, GridCoord sub,
                               const std::function<void(geom::CubeSpec)>& emit) {
  const GridCoord reach = cube.half_side - sub;
  const GridCoord step = std::max<GridCoord>(1, sub / 3);
  const int coords = cube.n() * cube.d();
  const GridCoord per_axis = 2 * (reach / step) + 1;
  std::vector<GridCoord> offset(static_cast<size_t>(coords), -(reach / step) * step);
  if (reach < 0) return;
  std::vector<GridCoord> center(static_cast<size_t>(coords));
  while (true) {
    for (int k = 0; k < coords; ++k) {
      center[static_cast<size_t>(k)] =
          cube.center.coords[k] + offset[static_cast<size_t>(k)];
    }
    CoordVector c(coords);
    for (int k = 0; k < coords; ++k) c[k] = center[static_cast<size_t>(k)];
    emit(geom::CubeSpec(geom::ParticlePoint(cube.n(), cube.d(), std::move(c)), sub));
    int k = 0;
    while (k < coords) {
      offset[static_cast<size_t>(k)] += step;
      if (offset[static_cast<size_t>(k)] > reach) {
        offset[static_cast<size_t>(k)] = -(reach / step) * step;
        ++k;
      } else {
        break;
      }
    }
    if (k == coords) break;
  }
  (void)per_axis;
}

}  // namespace

CnrWorkspace make_cnr_workspace(const geom::CubeSpec& cube,
                                const model::DisorderField& field,
                                const model::InteractionSpec& interaction,
                                Real spacing) {
  CnrWorkspace ws;
  if (cube.half_side < 4) return ws;  // trivially CNR: nothing to scan
  for (GridCoord sub : cnr_size_ladder(cube.half_side)) {
    enumerate_subcube_centers(cube, sub, [&](geom::CubeSpec subcube) {
      ws.spectra.push_back(eigenvalues_only(model::assemble_multiparticle(
          model::DomainSpec{subcube, spacing}, field, interaction)));
      ws.subcubes.push_back(std::move(subcube));
    });
  }
  return ws;
}

CnrResult cnr_at(const CnrWorkspace& ws, Real E) {
  CnrResult result;
  result.cnr = true;
  result.subcubes_checked = static_cast<int>(ws.subcubes.size());
  for (size_t i = 0; i < ws.subcubes.size(); ++i) {
    const Real dist = spectral::dist_to_spectrum(ws.spectra[i], E);
    const Real threshold = resonance_threshold(ws.subcubes[i].half_side);
    if (dist <= threshold) {
      result.cnr = false;
      result.offender = CnrOffender{ws.subcubes[i], dist, threshold};
      return result;
    }
  }
  return result;
}

CnrResult is_cnr(const geom::CubeSpec& cube, const model::DisorderField& field,
                 const model::InteractionSpec& interaction, Real E,
                 const MsaParams& params, Real spacing) {
  (void)params;
  return cnr_at(make_cnr_workspace(cube, field, interaction, spacing), E);
}

PiLocalization is_localized_pi(const geom::CubeSpec& cube,
                               const model::DisorderField& field,
                               const model::InteractionSpec& interaction,
                               const MsaParams& params, Real spacing) {
  PiLocalization loc;
  loc.partition = geom::pi_partition(cube, interaction.r0);  // throws on FI

  std::vector<int> complement;
  for (int i = 0; i < cube.n(); ++i) {
    if (std::find(loc.partition.begin(), loc.partition.end(), i) ==
        loc.partition.end()) {
      complement.push_back(i);
    }
  }

  const GridCoord L = cube.half_side;
  auto factor_pass = [&](const std::vector<int>& idx, Real& max_mass,
                         Real& threshold) {
    const auto fcube = factor_cube(cube, idx);
    const auto h = model::assemble_multiparticle(model::DomainSpec{fcube, spacing},
                                                 field, interaction);
    const auto eig = spectral::eigendecompose(h);
    const auto masks = model::region_masks(h.grid, fcube);
    threshold = std::exp(-2.0 *
                         decay_gamma(params.m, L, static_cast<int>(idx.size()),
                                     params.total_particles) *
                         static_cast<Real>(L));
    max_mass = 0.0;
    for (Index j = 0; j < eig.dim(); ++j) {
      max_mass = std::max(max_mass, projector_block_mass(eig, j, masks));
    }
    return max_mass <= threshold;
  };

  loc.left_localized =
      factor_pass(loc.partition, loc.left_worst_block_mass, loc.left_threshold);
  loc.right_localized =
      factor_pass(complement, loc.right_worst_block_mass, loc.right_threshold);
  loc.localized = loc.left_localized && loc.right_localized;
  return loc;
}

EnergyInterval variable_energy_interval(Real E0, GridCoord L0, Real m, Real m1,
                                        int total_particles, int n) {
  if (!(m1 > 0.0) || !(m1 < m)) {
    throw std::invalid_argument("need 0 < m1 < m");
  }
  EnergyInterval interval;
  interval.e0 = E0;
  const Real Lr = static_cast<Real>(L0);
  const Real envelope = 0.5 * std::exp(-2.0 * std::sqrt(Lr));
  interval.delta = envelope * (std::exp(-m1 * Lr) - std::exp(-m * Lr));
  interval.delta_dressed =
      envelope * (std::exp(-decay_gamma(m1, L0, n, total_particles) * Lr) -
                  std::exp(-decay_gamma(m, L0, n, total_particles) * Lr));
  return interval;
}

std::vector<Real> energy_grid(const EnergyInterval& interval, int points) {
  points = std::max(points, 9);  // spacing <= delta/4
  if (interval.delta <= 0.0) return {interval.e0};
  std::vector<Real> grid(static_cast<size_t>(points));
  const Real lo = interval.lo();
  const Real span = interval.hi() - lo;
  for (int i = 0; i < points; ++i) {
    grid[static_cast<size_t>(i)] =
        lo + span * static_cast<Real>(i) / static_cast<Real>(points - 1);
  }
  return grid;
}

ProbabilityEstimate make_estimate(std::int64_t successes, std::int64_t trials,
                                  Real paper_bound) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (successes < 0 || successes > trials) {
    throw std::invalid_argument("successes out of range");
  }
  ProbabilityEstimate est;
  est.trials = trials;
  est.successes = successes;
  est.paper_bound = paper_bound;
  const Real n = static_cast<Real>(trials);
  const Real p = static_cast<Real>(successes) / n;
  est.point = p;
  const Real z2 = kWilsonZ * kWilsonZ;
  const Real denom = 1.0 + z2 / n;
  const Real center = (p + z2 / (2.0 * n)) / denom;
  const Real half =
      kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  est.ci_lo = std::max(0.0, center - half);
  est.ci_hi = std::min(1.0, center + half);
  est.vacuous = paper_bound > 1.0;
  est.pass = est.vacuous || est.ci_hi <= paper_bound;
  return est;
}

namespace {

Real ds_bound(const MsaParams& params, GridCoord L, Real prefactor) {
  const Real exponent =
      -2.0 * params.p * std::pow(4.0, params.total_particles - params.n);
  return prefactor * std::pow(static_cast<Real>(L), exponent);
}

Real wegner_bound(const MsaParams& params, GridCoord L) {
  const Real exponent =
      -params.p * std::pow(4.0, params.total_particles - params.n);
  return std::pow(static_cast<Real>(L), exponent);
}

}  // namespace

ProbabilityEstimate estimate_singularity_probability(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube,
    Real E, int trials, std::uint64_t master_seed, int threads) {
  validate(params);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const auto window = model::covering_window(cube);
  std::vector<char> singular(static_cast<size_t>(trials), 0);
  for_each_trial(trials, threads, [&](int t) {
    const auto field = model::sample_disorder(model.disorder, window, master_seed,
                                              static_cast<std::uint64_t>(t));
    const auto ws = make_workspace(cube, field, model.interaction, model.spacing);
    singular[static_cast<size_t>(t)] =
        verdict_at(ws, E, params).nonsingular ? 0 : 1;
  });
  const auto successes = static_cast<std::int64_t>(
      std::count(singular.begin(), singular.end(), 1));
  return make_estimate(successes, trials, ds_bound(params, cube.half_side, 0.5));
}

ProbabilityEstimate estimate_pair_probability(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube_a,
    const geom::CubeSpec& cube_b, const EnergyInterval& interval, int trials,
    std::uint64_t master_seed, int threads, int grid_points) {
  validate(params);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (!geom::is_separable_pair(cube_a, cube_b, params.total_particles).separable) {
    throw std::invalid_argument("pair of cubes is not separable");
  }
  const auto window = model::covering_window({cube_a, cube_b});
  const auto grid = energy_grid(interval, grid_points);

  std::vector<char> hit(static_cast<size_t>(trials), 0);
  for_each_trial(trials, threads, [&](int t) {
    const auto field = model::sample_disorder(model.disorder, window, master_seed,
                                              static_cast<std::uint64_t>(t));
    const auto wa = make_workspace(cube_a, field, model.interaction, model.spacing);
    const auto wb = make_workspace(cube_b, field, model.interaction, model.spacing);
    for (Real E : grid) {
      if (!verdict_at(wa, E, params).nonsingular &&
          !verdict_at(wb, E, params).nonsingular) {
        hit[static_cast<size_t>(t)] = 1;
        break;
      }
    }
  });
  const auto successes =
      static_cast<std::int64_t>(std::count(hit.begin(), hit.end(), 1));
  auto est =
      make_estimate(successes, trials, ds_bound(params, cube_a.half_side, 1.0));
  est.note = "pair=" + pair_type_tag(cube_a, cube_b, model.interaction.r0) +
             "; energy grid of " + std::to_string(grid.size()) +
             " points under-detects events between grid points";
  return est;
}

ProbabilityEstimate estimate_wegner(const ModelSpec& model,
                                    const MsaParams& params,
                                    const geom::CubeSpec& cube, Real E,
                                    int trials, std::uint64_t master_seed,
                                    int threads) {
  validate(params);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const auto window = model::covering_window(cube);
  std::vector<char> not_cnr(static_cast<size_t>(trials), 0);
  for_each_trial(trials, threads, [&](int t) {
    const auto field = model::sample_disorder(model.disorder, window, master_seed,
                                              static_cast<std::uint64_t>(t));
    const auto ws = make_cnr_workspace(cube, field, model.interaction, model.spacing);
    not_cnr[static_cast<size_t>(t)] = cnr_at(ws, E).cnr ? 0 : 1;
  });
  const auto successes =
      static_cast<std::int64_t>(std::count(not_cnr.begin(), not_cnr.end(), 1));
  auto est = make_estimate(successes, trials, wegner_bound(params, cube.half_side));
  if (is_bernoulli(model.disorder)) {
    est.note = "distribution outside Thm 2.4 hypotheses";
  }
  return est;
}

ProbabilityEstimate estimate_wegner_pair(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube_a,
    const geom::CubeSpec& cube_b, const EnergyInterval& interval, int trials,
    std::uint64_t master_seed, int threads, int grid_points) {
  validate(params);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const auto window = model::covering_window({cube_a, cube_b});
  const auto grid = energy_grid(interval, grid_points);
  std::vector<char> hit(static_cast<size_t>(trials), 0);
  for_each_trial(trials, threads, [&](int t) {
    const auto field = model::sample_disorder(model.disorder, window, master_seed,
                                              static_cast<std::uint64_t>(t));
    const auto wa = make_cnr_workspace(cube_a, field, model.interaction, model.spacing);
    const auto wb = make_cnr_workspace(cube_b, field, model.interaction, model.spacing);
    for (Real E : grid) {
      if (!cnr_at(wa, E).cnr && !cnr_at(wb, E).cnr) {
        hit[static_cast<size_t>(t)] = 1;
        break;
      }
    }
  });
  const auto successes =
      static_cast<std::int64_t>(std::count(hit.begin(), hit.end(), 1));
  auto est = make_estimate(successes, trials, wegner_bound(params, cube_a.half_side));
  est.note = "pair=" + pair_type_tag(cube_a, cube_b, model.interaction.r0) +
             "; energy grid of " + std::to_string(grid.size()) +
             " points under-detects events between grid points";
  if (is_bernoulli(model.disorder)) {
    est.note += "; distribution outside Thm 2.4 hypotheses";
  }
  return est;
}

WeakInteractionScan weak_interaction_scan(const ModelSpec& model,
                                          const MsaParams& params,
                                          const geom::CubeSpec& cube,
                                          const std::vector<Real>& h_grid,
                                          const std::vector<Real>& E_grid,
                                          int trials, std::uint64_t master_seed,
                                          int threads) {
  validate(params);
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (E_grid.empty()) throw std::invalid_argument("empty energy grid");
  const auto zero_it = std::find(h_grid.begin(), h_grid.end(), 0.0);
  if (zero_it == h_grid.end()) {
    throw std::invalid_argument("h grid must include 0");
  }
  const size_t zero_at = static_cast<size_t>(zero_it - h_grid.begin());
  const size_t nh = h_grid.size();
  const size_t ne = E_grid.size();

  const auto window = model::covering_window(cube);
  const GridCoord L = cube.half_side;
  const Real thr_full = singular_threshold(params.m, L, params.n, params.total_particles);
  const Real thr_half =
      singular_threshold(params.m / 2.0, L, params.n, params.total_particles);

  struct TrialData {
    std::vector<char> singular_full;  // nh * ne
    std::vector<char> singular_half;
    std::vector<char> res_checked;  // nh * ne (h != 0 only)
    std::vector<char> res_ok;
    std::vector<Real> res_margin;
  };
  std::vector<TrialData> data(static_cast<size_t>(trials));

  // ||U|| on the cube's grid is h-independent
  Real u_norm = 0.0;
  {
    const auto probe_field = model::DisorderField::constant(window, 0.0);
    const auto h0 =
        model::assemble_multiparticle(model::DomainSpec{cube, model.spacing},
                                      probe_field, model::InteractionSpec::none());
    for (Index i = 0; i < h0.dim(); ++i) {
      u_norm = std::max(u_norm, std::abs(model::interaction_energy(
                                    model.interaction, h0.grid.coordinates(i))));
    }
  }

  for_each_trial(trials, threads, [&](int t) {
    TrialData& out = data[static_cast<size_t>(t)];
    out.singular_full.assign(nh * ne, 0);
    out.singular_half.assign(nh * ne, 0);
    out.res_checked.assign(nh * ne, 0);
    out.res_ok.assign(nh * ne, 0);
    out.res_margin.assign(nh * ne, 0.0);

    const auto field = model::sample_disorder(model.disorder, window, master_seed,
                                              static_cast<std::uint64_t>(t));
    std::vector<CubeWorkspace> ws;
    ws.reserve(nh);
    for (Real h : h_grid) {
      auto interaction = model.interaction;
      interaction.h = h;
      ws.push_back(make_workspace(cube, field, interaction, model.spacing));
    }
    const auto& ws0 = ws[zero_at];

    for (size_t ih = 0; ih < nh; ++ih) {
      for (size_t ie = 0; ie < ne; ++ie) {
        const Real E = E_grid[ie];
        const auto& w = ws[ih];
        const Real dist = spectral::dist_to_spectrum(w.eig.values, E);
        Real norm = std::numeric_limits<Real>::infinity();
        if (dist > spectral::resonance_guard(w.eig.values)) {
          norm = spectral::green_block_norm(w.eig, E, w.masks.shell,
                                            w.masks.interior)
                     .block_norm;
        }
        const size_t at = ih * ne + ie;
        out.singular_full[at] = norm <= thr_full ? 0 : 1;
        out.singular_half[at] = norm <= thr_half ? 0 : 1;

        if (h_grid[ih] != 0.0) {
          const Real dist0 = spectral::dist_to_spectrum(ws0.eig.values, E);
          if (dist > spectral::resonance_guard(w.eig.values) &&
              dist0 > spectral::resonance_guard(ws0.eig.values)) {
            const MatrixX g0 = spectral::green_full(ws0.eig, E);
            const MatrixX gh = spectral::green_full(w.eig, E);
            const Real diff = spectral::operator_norm(g0 - gh);
            const Real bound =
                std::abs(h_grid[ih]) * u_norm / (dist0 * dist);
            out.res_checked[at] = 1;
            const Real tol = 1e-9 * std::max(1.0, bound);
            out.res_ok[at] = diff <= bound + tol ? 1 : 0;
            out.res_margin[at] = bound > 0.0 ? (diff - bound) / bound : 0.0;
          }
        }
      }
    }
  });

  WeakInteractionScan scan;
  scan.interaction_norm = u_norm;
  const Real bound = ds_bound(params, L, 0.5);
  for (size_t ih = 0; ih < nh; ++ih) {
    for (size_t ie = 0; ie < ne; ++ie) {
      WeakScanRow row;
      row.h = h_grid[ih];
      row.E = E_grid[ie];
      std::int64_t full = 0, half = 0, checked = 0, ok = 0;
      Real margin = -std::numeric_limits<Real>::infinity();
      for (const auto& d : data) {
        const size_t at = ih * ne + ie;
        full += d.singular_full[at];
        half += d.singular_half[at];
        checked += d.res_checked[at];
        ok += d.res_ok[at];
        if (d.res_checked[at]) margin = std::max(margin, d.res_margin[at]);
      }
      row.full_mass = make_estimate(full, trials, bound);
      row.half_mass = make_estimate(half, trials, bound);
      row.resolvent_checked = checked;
      row.resolvent_ok = ok;
      row.worst_resolvent_margin = checked ? margin : 0.0;
      scan.rows.push_back(std::move(row));
    }
  }

  // h*: largest |h| such that every grid amplitude below it passes the h = 0
  // bound at mass m/2; "passes" admits the empirical h = 0 level when the
  // paper bound itself is out of reach at this scale.
  std::vector<Real> h_sorted(h_grid.begin(), h_grid.end());
  std::sort(h_sorted.begin(), h_sorted.end(),
            [](Real a, Real b) { return std::abs(a) < std::abs(b); });
  auto row_at = [&](Real h, size_t ie) -> const WeakScanRow& {
    const size_t ih = static_cast<size_t>(
        std::find(h_grid.begin(), h_grid.end(), h) - h_grid.begin());
    return scan.rows[ih * ne + ie];
  };
  Real h_star = 0.0;
  bool any = false;
  for (Real h : h_sorted) {
    bool pass = true;
    for (size_t ie = 0; ie < ne && pass; ++ie) {
      const Real level =
          std::max(bound, row_at(0.0, ie).half_mass.ci_hi);
      pass = row_at(h, ie).half_mass.ci_hi <= level;
    }
    if (!pass) break;
    h_star = std::max(h_star, std::abs(h));
    any = true;
  }
  if (any) scan.h_star = h_star;
  return scan;
}

ImplicationReport noninteracting_ns_implication_check(
    const geom::CubeSpec& cube, const model::DisorderField& field,
    const model::InteractionSpec& interaction, Real E, const MsaParams& params,
    Real spacing) {
  if (interaction.h != 0.0) {
    throw std::invalid_argument("implication check requires h = 0");
  }
  validate(params);
  ImplicationReport report;
  const GridCoord L = cube.half_side;
  report.block_threshold =
      std::exp(-2.0 * decay_gamma(params.m, L, params.n, params.total_particles) *
               static_cast<Real>(L));

  // hypothesis (a): the multi-particle cube is E-NR (values suffice here)
  const auto h_multi = model::assemble_multiparticle(
      model::DomainSpec{cube, spacing}, field, interaction);
  const VectorX multi_values = eigenvalues_only(h_multi);
  const Real dist = spectral::dist_to_spectrum(multi_values, E);
  report.nr_hypothesis = dist > resonance_threshold(L);

  // hypothesis (b): every single-particle eigenfunction keeps its out-int
  // projector block mass below e^{-2 gamma(m, L, n) L}
  for (int i = 0; i < cube.n(); ++i) {
    CoordVector c(cube.d());
    for (int k = 0; k < cube.d(); ++k) c[k] = cube.center.coord(i, k);
    const geom::CubeSpec single(geom::ParticlePoint(1, cube.d(), std::move(c)), L);
    const auto h1 = model::assemble_single(model::DomainSpec{single, spacing}, field);
    const auto eig1 = spectral::eigendecompose(h1);
    const auto masks = model::region_masks(h1.grid, single);
    for (Index j = 0; j < eig1.dim(); ++j) {
      report.worst_block_mass =
          std::max(report.worst_block_mass, projector_block_mass(eig1, j, masks));
    }
  }
  report.decay_hypothesis = report.worst_block_mass <= report.block_threshold;

  const bool hypotheses = report.nr_hypothesis && report.decay_hypothesis;
  report.vacuous = !hypotheses;
  if (hypotheses) {
    // conclusion needs the eigenvectors; only pay for them when it matters
    const auto ws = make_workspace(cube, field, interaction, spacing);
    report.conclusion_ns = verdict_at(ws, E, params).nonsingular;
    report.counterexample = !report.conclusion_ns;
  }
  return report;
}

DecayCurve block_norm_decay_curve(const ModelSpec& model, const MsaParams& params,
                                  int n_prime, const std::vector<GridCoord>& L_list,
                                  int trials, std::uint64_t master_seed,
                                  int threads) {
  if (L_list.size() < 2) {
    throw std::invalid_argument("need at least two scales to fit a rate");
  }
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (n_prime < 1 || n_prime > params.total_particles) {
    throw std::invalid_argument("need 1 <= n' <= N");
  }

  DecayCurve curve;
  for (GridCoord L : L_list) {
    std::vector<GridCoord> centers(static_cast<size_t>(n_prime), 0);
    const geom::CubeSpec cube(geom::ParticlePoint::line(centers), L);
    const auto window = model::covering_window(cube);
    std::vector<Real> norms(static_cast<size_t>(trials),
                            std::numeric_limits<Real>::quiet_NaN());
    MsaParams local = params;
    local.n = n_prime;
    for_each_trial(trials, threads, [&](int t) {
      const auto field = model::sample_disorder(
          model.disorder, window, master_seed, static_cast<std::uint64_t>(t));
      const auto ws = make_workspace(cube, field, model.interaction, model.spacing);
      const auto v = verdict_at(ws, params.E0, local);
      if (std::isfinite(v.block_norm)) {
        norms[static_cast<size_t>(t)] = v.block_norm;
      }
    });
    Real sum = 0.0, sum2 = 0.0;
    int used = 0;
    for (Real v : norms) {
      if (std::isnan(v)) continue;  // resolvent blocked at E0 this realization
      sum += v;
      sum2 += v * v;
      ++used;
    }
    if (used == 0) throw std::runtime_error("all realizations resonant at E0");
    DecayPoint point;
    point.L = L;
    point.mean_norm = sum / used;
    point.se = used > 1 ? std::sqrt(std::max(0.0, (sum2 / used - point.mean_norm * point.mean_norm) /
                                                      (used - 1)))
                        : 0.0;
    curve.points.push_back(point);
  }

  // least squares of log(mean) on L
  const auto k = static_cast<Real>(curve.points.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : curve.points) {
    const Real x = static_cast<Real>(pt.L);
    const Real y = std::log(pt.mean_norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const Real denom = k * sxx - sx * sx;
  const Real slope = (k * sxy - sx * sy) / denom;
  curve.mu_hat = -slope;
  Real rss = 0.0;
  const Real intercept = (sy - slope * sx) / k;
  for (const auto& pt : curve.points) {
    const Real r = std::log(pt.mean_norm) - (intercept + slope * static_cast<Real>(pt.L));
    rss += r * r;
  }
  if (curve.points.size() > 2) {
    const Real var = rss / (k - 2.0) / (sxx - sx * sx / k);
    curve.mu_se = std::sqrt(std::max(var, 0.0));
  } else {
    curve.mu_se = 0.0;
  }
  curve.mu_ci_lo = curve.mu_hat - kWilsonZ * curve.mu_se;
  curve.mu_ci_hi = curve.mu_hat + kWilsonZ * curve.mu_se;
  curve.decaying = curve.mu_ci_lo > 0.0;
  return curve;
}

Real mass_from_decay_rate(Real mu, int total_particles) {
  return mu * std::exp2(-static_cast<Real>(total_particles) - 1.0);
}

}  // namespace mpmsa::msa
