#pragma once

#include <span>
#include <vector>

#include "mpmsa/errors.hpp"
#include "mpmsa/hamiltonian.hpp"
#include "mpmsa/types.hpp"

namespace mpmsa::spectral {

/// Full eigensystem, eigenvalues ascending, eigenvectors as columns.
struct EigenDecomposition {
  VectorX values;
  MatrixX vectors;

  Index dim() const { return values.size(); }
};

inline constexpr Index kDefaultDenseCap = 4000;

/// Dense symmetric eigensolve. Throws DimensionCapError beyond the cap and
/// std::runtime_error on solver failure.
EigenDecomposition eigendecompose(const MatrixX& h, Index dense_cap = kDefaultDenseCap);
EigenDecomposition eigendecompose(const model::Hamiltonian& h,
                                  Index dense_cap = kDefaultDenseCap);

/// k extremal eigenvalues by Lanczos with full reorthogonalization, for
/// matrices too large to decompose densely. Deterministic (fixed start seed).
VectorX extremal_eigenvalues(const SparseMatrixX& h, int k, bool largest,
                             int max_iterations = 400, Real tol = 1e-10);

/// k eigenvalues nearest sigma via shift-invert Lanczos (sparse LU solves).
VectorX eigenvalues_near(const SparseMatrixX& h, Real sigma, int k,
                         int max_iterations = 300, Real tol = 1e-10);

/// All n-fold sums of the given single-particle spectra, sorted with
/// multiplicity. Throws std::overflow_error past `size_cap` combinations.
VectorX tensor_spectrum(const std::vector<VectorX>& singles,
                        Index size_cap = 1 << 24);

/// min_j |lambda_j - E| over a sorted spectrum.
Real dist_to_spectrum(const VectorX& sorted_values, Real E);

/// Resonance guard: below this distance the resolvent at E is treated as
/// numerically singular (1e-14 relative to the spectral radius).
Real resonance_guard(const VectorX& sorted_values);

/// G(E) = V diag(1/(lambda - E)) V^T, assembled spectrally.
MatrixX green_full(const EigenDecomposition& eig, Real E);
/// Sub-block rows x cols of G(E) without forming the full matrix.
MatrixX green_block(const EigenDecomposition& eig, Real E,
                    std::span<const Index> rows, std::span<const Index> cols);

/// Largest singular value.
Real operator_norm(const MatrixX& m);

struct GreenProbe {
  Real E = 0.0;
  Real dist_to_spectrum = 0.0;
  Real block_norm = 0.0;
  bool well_conditioned = true;
};

/// ||1_out G(E) 1_int|| for index masks on the decomposition's grid.
/// Throws ResonantEnergyError when E is within the resonance guard.
GreenProbe green_block_norm(const EigenDecomposition& eig, Real E,
                            std::span<const Index> out_indices,
                            std::span<const Index> int_indices);

struct WeylParams {
  Real c_weyl = 1.0;  // states per unit volume in the truncation rule
};

struct WeylCount {
  Index exact = 0;      // #{lambda_j <= E}
  Real asymptotic = 0;  // (length / pi) sqrt(E), the d=1 continuum law
  Index j_star = 0;     // ceil(c_weyl * volume)
};

WeylCount weyl_count(const VectorX& sorted_values, Real E,
                     const WeylParams& params, Real domain_length);

struct GriResult {
  Real lhs = 0.0;         // ||1_B G_big(E) 1_A||
  Real factor_big = 0.0;  // ||1_B G_big(E) 1_out(inner)||
  Real factor_inner = 0.0;// ||1_out(inner) G_inner(E) 1_A||
  Real ratio = 0.0;       // lhs / (factor_big * factor_inner)
};

/// Measures the geometric-resolvent-inequality ratio for A inside the interior
/// of `inner` and B inside the big cube but outside `inner`.
GriResult gri_check(const model::DomainSpec& domain,
                    const model::DisorderField& field,
                    const model::InteractionSpec& interaction,
                    const geom::CubeSpec& inner, Real E,
                    const geom::CubeSpec& region_a,
                    const geom::CubeSpec& region_b);

struct EdiResult {
  Real cell_mass = 0.0;    // ||1_{C_1(x)} psi||
  Real green_factor = 0.0; // ||1_out G_inner(lambda) 1_int||
  Real shell_mass = 0.0;   // ||1_out(inner) psi||
  Real ratio = 0.0;        // cell_mass / (green_factor * shell_mass), 0 when empty
};

/// Eigenfunction-decay-inequality ratio for an eigenpair of the domain
/// operator against the restriction to `inner`.
EdiResult edi_check(const model::DomainSpec& domain,
                    const model::DisorderField& field,
                    const model::InteractionSpec& interaction,
                    const geom::CubeSpec& inner, Real lambda,
                    const VectorX& psi, const model::ConfigGrid& domain_grid);

struct ResolventPerturbation {
  Real residual = 0.0;  // ||G_0 - G_h - h G_0 U G_h||
  Real g0_norm = 0.0;
  Real gh_norm = 0.0;
  Real u_norm = 0.0;    // max |U_ii|
  Real difference_norm = 0.0;  // ||G_0 - G_h||
  Real tolerance = 0.0; // 1e-9 ||G_0|| ||G_h|| max(1, |h| ||U||)
  bool within_tolerance = false;
};

/// Second-resolvent-identity residual for H_h = H_0 + h diag(u).
ResolventPerturbation resolvent_perturbation_residual(const MatrixX& h0,
                                                      const VectorX& u_diag,
                                                      Real h, Real E);

}  // namespace mpmsa::spectral
