#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpmsa/geometry.hpp"
#include "mpmsa/hamiltonian.hpp"
#include "mpmsa/spectral.hpp"
#include "mpmsa/types.hpp"

namespace mpmsa::msa {

/// Scale exponent of the length recursion L_k = floor(L_{k-1}^alpha) + 1.
inline constexpr Real kAlpha = 1.5;

struct MsaParams {
  Real m = 0.5;             // decay mass
  Real m1 = 0.25;           // reduced mass for the variable-energy interval
  Real p = 7.0;             // probability exponent, must exceed 6 N d
  GridCoord L0 = 8;         // initial scale
  int total_particles = 1;  // N
  int n = 1;                // particle count of the cubes under study
  int d = 1;                // configuration dimension
  Real E0 = 0.0;            // reference energy
};

/// Throws std::invalid_argument when p <= 6Nd, m1 not in (0, m), or L0 < 4.
void validate(const MsaParams& params);

/// Disorder + interaction + discretization bundle the estimators sample from.
struct ModelSpec {
  model::DisorderSpec disorder;
  model::InteractionSpec interaction;
  Real spacing = 1.0;
};

using ScaleSchedule = std::vector<GridCoord>;

/// L_0, L_1, ..., L_kmax with L_k = floor(L_{k-1}^{3/2}) + 1, exact in
/// integer arithmetic. Throws std::overflow_error past the int64 range.
ScaleSchedule scale_sequence(GridCoord L0, int k_max);

/// gamma(m, L, n) = m (1 + L^{-1/8})^{N - n + 1}.
Real decay_gamma(Real m, GridCoord L, int n, int total_particles);

/// e^{-gamma(m, L, n) L}: the nonsingularity threshold of eq. block norms.
Real singular_threshold(Real m, GridCoord L, int n, int total_particles);

/// e^{-sqrt(L)}: the resonance width at scale L.
Real resonance_threshold(GridCoord L);

/// MSA classification of one cube at one energy. Threshold fields are always
/// recomputed from the inputs, never cached across parameter changes.
struct CubeVerdict {
  geom::CubeSpec cube;
  Real E = 0.0;
  bool nonsingular = false;
  bool resonant = false;
  std::optional<bool> cnr;        // filled by is_cnr
  std::optional<bool> localized;  // filled by is_localized_pi (PI cubes)
  Real block_norm = 0.0;          // +inf when the resolvent is blocked at E
  Real ns_threshold = 0.0;
  Real res_threshold = 0.0;
  Real dist_to_spectrum = 0.0;
};

/// Assembled cube with its eigensystem and region masks: lets callers probe
/// many energies without re-assembling.
struct CubeWorkspace {
  geom::CubeSpec cube;
  model::Hamiltonian hamiltonian;
  spectral::EigenDecomposition eig;
  model::RegionMasks masks;
};

CubeWorkspace make_workspace(const geom::CubeSpec& cube,
                             const model::DisorderField& field,
                             const model::InteractionSpec& interaction,
                             Real spacing,
                             Index dimension_cap = model::kDefaultDimensionCap);

/// Verdict at a single energy from a prepared workspace.
CubeVerdict verdict_at(const CubeWorkspace& ws, Real E, const MsaParams& params);

/// Assembles the cube's restriction and classifies it at E: resonant iff
/// dist(E, spectrum) <= e^{-sqrt(L)} (inclusive), nonsingular iff the
/// out-int Green block norm is <= e^{-gamma L} and the resolvent exists at E.
CubeVerdict classify_cube(const geom::CubeSpec& cube,
                          const model::DisorderField& field,
                          const model::InteractionSpec& interaction, Real E,
                          const MsaParams& params, Real spacing = 1.0);

struct CnrOffender {
  geom::CubeSpec cube;
  Real dist = 0.0;
  Real threshold = 0.0;
};

struct CnrResult {
  bool cnr = false;
  std::optional<CnrOffender> offender;
  int subcubes_checked = 0;
};

/// Pre-decomposed sub-cube spectra for repeated CNR queries at many energies.
struct CnrWorkspace {
  std::vector<geom::CubeSpec> subcubes;  // includes the cube itself (size L)
  std::vector<VectorX> spectra;
};

CnrWorkspace make_cnr_workspace(const geom::CubeSpec& cube,
                                const model::DisorderField& field,
                                const model::InteractionSpec& interaction,
                                Real spacing);

CnrResult cnr_at(const CnrWorkspace& ws, Real E);

/// Scans sub-cubes of sizes from ceil(L^{2/3}) to L (3/2-geometric ladder,
/// self included) with centers on the lattice u + (L'/3) Z^{nd}. CNR iff no
/// scanned sub-cube is resonant at E; the first offender is reported.
/// Cubes with L < 4 are trivially CNR.
CnrResult is_cnr(const geom::CubeSpec& cube, const model::DisorderField& field,
                 const model::InteractionSpec& interaction, Real E,
                 const MsaParams& params, Real spacing = 1.0);

struct PiLocalization {
  bool localized = false;
  bool left_localized = false;
  bool right_localized = false;
  std::vector<int> partition;        // J of the PI split
  Real left_worst_block_mass = 0.0;  // worst ||1_out P_phi 1_int|| over the factor's eigenfunctions
  Real right_worst_block_mass = 0.0;
  Real left_threshold = 0.0;  // e^{-2 gamma(m, L, n') L}
  Real right_threshold = 0.0;
};

/// Localization check on the factors of a PI cube: every normalized factor
/// eigenfunction phi must keep the rank-one block ||1_out phi|| ||1_int phi||
/// below e^{-2 gamma L}. Throws std::invalid_argument on FI cubes.
PiLocalization is_localized_pi(const geom::CubeSpec& cube,
                               const model::DisorderField& field,
                               const model::InteractionSpec& interaction,
                               const MsaParams& params, Real spacing = 1.0);

struct EnergyInterval {
  Real e0 = 0.0;
  Real delta = 0.0;          // plain exponents: e^{-m1 L0} - e^{-m L0}
  Real delta_dressed = 0.0;  // gamma-dressed exponents from the proof display
  Real lo() const { return e0 - delta; }
  Real hi() const { return e0 + delta; }
};

/// I_0 = [E0 - delta, E0 + delta] with
/// delta = (1/2) e^{-2 sqrt(L0)} (e^{-m1 L0} - e^{-m L0}); the dressed
/// variant replaces the exponents by gamma(m1) L0 and gamma(m) L0.
EnergyInterval variable_energy_interval(Real E0, GridCoord L0, Real m, Real m1,
                                        int total_particles, int n);

/// Energy grid over I_0 with spacing <= delta/4 (9 points by default).
std::vector<Real> energy_grid(const EnergyInterval& interval, int points = 9);

struct ProbabilityEstimate {
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  Real point = 0.0;
  Real ci_lo = 0.0;  // Wilson 95%
  Real ci_hi = 0.0;
  Real paper_bound = 0.0;
  bool pass = false;     // ci_hi <= bound, or the bound is vacuous
  bool vacuous = false;  // bound > 1 carries no information at this scale
  std::string note;
};

/// Wilson-interval point estimate against a reference bound.
ProbabilityEstimate make_estimate(std::int64_t successes, std::int64_t trials,
                                  Real paper_bound);

/// P{cube is (E, m, h)-singular} over independent disorder realizations,
/// against (1/2) L^{-2 p 4^{N-n}}.
ProbabilityEstimate estimate_singularity_probability(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube,
    Real E, int trials, std::uint64_t master_seed, int threads = 1);

/// P{exists E on the I_0 grid with both cubes singular} for a separable pair,
/// against L^{-2 p 4^{N-n}}. Throws std::invalid_argument for non-separable
/// pairs. The pair's PI/FI/mixed type is tagged in the note.
ProbabilityEstimate estimate_pair_probability(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube_a,
    const geom::CubeSpec& cube_b, const EnergyInterval& interval, int trials,
    std::uint64_t master_seed, int threads = 1, int grid_points = 9);

/// P{cube is not E-CNR} against L^{-p 4^{N-n}}. Bernoulli disorder is outside
/// the Wegner hypotheses and gets flagged in the note.
ProbabilityEstimate estimate_wegner(const ModelSpec& model,
                                    const MsaParams& params,
                                    const geom::CubeSpec& cube, Real E,
                                    int trials, std::uint64_t master_seed,
                                    int threads = 1);

/// Pair variant: P{exists E on the I_0 grid with neither cube E-CNR}.
ProbabilityEstimate estimate_wegner_pair(
    const ModelSpec& model, const MsaParams& params, const geom::CubeSpec& cube_a,
    const geom::CubeSpec& cube_b, const EnergyInterval& interval, int trials,
    std::uint64_t master_seed, int threads = 1, int grid_points = 9);

struct WeakScanRow {
  Real h = 0.0;
  Real E = 0.0;
  ProbabilityEstimate full_mass;   // verdicts at mass m
  ProbabilityEstimate half_mass;   // verdicts at mass m/2 (the h* rule)
  std::int64_t resolvent_checked = 0;
  std::int64_t resolvent_ok = 0;   // realizations obeying the difference bound
  Real worst_resolvent_margin = 0.0;  // max (diff - bound)/bound over trials
};

struct WeakInteractionScan {
  std::vector<WeakScanRow> rows;
  std::optional<Real> h_star;  // largest grid |h| whose rows all pass
  Real interaction_norm = 0.0; // ||U|| on the cube's grid
};

/// Common-random-number scan over interaction amplitudes: every h row reuses
/// the h = 0 realizations. Rows at h = 0 reproduce
/// estimate_singularity_probability bit-for-bit for the same seeds.
WeakInteractionScan weak_interaction_scan(const ModelSpec& model,
                                          const MsaParams& params,
                                          const geom::CubeSpec& cube,
                                          const std::vector<Real>& h_grid,
                                          const std::vector<Real>& E_grid,
                                          int trials, std::uint64_t master_seed,
                                          int threads = 1);

struct ImplicationReport {
  bool nr_hypothesis = false;     // cube is E-NR
  bool decay_hypothesis = false;  // all single-particle eigenfunctions decayed
  bool conclusion_ns = false;     // cube is (E, m, 0)-NS
  bool vacuous = false;           // hypotheses failed: nothing to check
  bool counterexample = false;    // hypotheses held but the conclusion failed
  Real worst_block_mass = 0.0;  // max ||1_out phi|| ||1_int phi|| over single-particle eigenfunctions
  Real block_threshold = 0.0;   // e^{-2 gamma(m, L, n) L}
};

/// Checks the noninteracting implication "E-NR + single-particle eigenfunction
/// decay => multi-particle NS" on one realization. Requires h = 0.
ImplicationReport noninteracting_ns_implication_check(
    const geom::CubeSpec& cube, const model::DisorderField& field,
    const model::InteractionSpec& interaction, Real E, const MsaParams& params,
    Real spacing = 1.0);

struct DecayPoint {
  GridCoord L = 0;
  Real mean_norm = 0.0;
  Real se = 0.0;  // standard error of the mean
};

struct DecayCurve {
  std::vector<DecayPoint> points;
  Real mu_hat = 0.0;  // fitted exponential rate of the mean block norm
  Real mu_se = 0.0;
  Real mu_ci_lo = 0.0;
  Real mu_ci_hi = 0.0;
  bool decaying = false;  // CI excludes 0 from below
};

/// Mean out-int Green block norms at E0 across scales, with a least-squares
/// exponential rate. Needs at least two scales.
DecayCurve block_norm_decay_curve(const ModelSpec& model, const MsaParams& params,
                                  int n_prime, const std::vector<GridCoord>& L_list,
                                  int trials, std::uint64_t master_seed,
                                  int threads = 1);

/// m* = 2^{-N-1} mu: the initial mass derived from a fitted decay rate.
Real mass_from_decay_rate(Real mu, int total_particles);

}  // namespace mpmsa::msa
