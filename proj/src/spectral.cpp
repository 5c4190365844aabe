#include "mpmsa/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mpmsa/disorder.hpp"

namespace mpmsa::spectral {

EigenDecomposition eigendecompose(const MatrixX& h, Index dense_cap) {
  if (h.rows() != h.cols()) throw std::invalid_argument("matrix must be square");
  if (h.rows() > dense_cap) throw DimensionCapError(h.rows(), dense_cap);
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver failed to converge");
  }
  return EigenDecomposition{solver.eigenvalues(), solver.eigenvectors()};
}

EigenDecomposition eigendecompose(const model::Hamiltonian& h, Index dense_cap) {
  return eigendecompose(h.dense(), dense_cap);
}

namespace {

/// Lanczos tridiagonalization with full reorthogonalization; returns the Ritz
/// values of the Krylov space of `apply`.
template <typename Apply>
VectorX lanczos_ritz_values(Index dim, Apply apply, int max_iterations, Real tol) {
  const int m = std::min<Index>(dim, max_iterations);
  MatrixX basis(dim, m);
  VectorX alpha(m), beta(m);

  VectorX v(dim);
  for (Index i = 0; i < dim; ++i) {
    v[i] = model::uniform01(model::counter_hash(0x9d2c5680u, 17,
                                                static_cast<std::uint64_t>(i))) -
           0.5;
  }
  v.normalize();

  int built = 0;
  VectorX prev = VectorX::Zero(dim);
  Real prev_beta = 0.0;
  for (int j = 0; j < m; ++j) {
    basis.col(j) = v;
    VectorX w = apply(v);
    alpha[j] = v.dot(w);
    w -= alpha[j] * v + prev_beta * prev;
    // full reorthogonalization, twice for stability
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    built = j + 1;
    const Real b = w.norm();
    beta[j] = b;
    if (b < tol) break;
    prev = v;
    prev_beta = b;
    v = w / b;
  }

  MatrixX tri = MatrixX::Zero(built, built);
  for (int j = 0; j < built; ++j) {
    tri(j, j) = alpha[j];
    if (j + 1 < built) {
      tri(j, j + 1) = beta[j];
      tri(j + 1, j) = beta[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(tri);
  return solver.eigenvalues();
}

}  // namespace

VectorX extremal_eigenvalues(const SparseMatrixX& h, int k, bool largest,
                             int max_iterations, Real tol) {
  if (k < 1) throw std::invalid_argument("need k >= 1");
  const VectorX ritz = lanczos_ritz_values(
      h.rows(), [&](const VectorX& x) -> VectorX { return h * x; },
      max_iterations, tol);
  const int avail = std::min<int>(k, static_cast<int>(ritz.size()));
  VectorX out(avail);
  if (largest) {
    out = ritz.tail(avail).reverse();
  } else {
    out = ritz.head(avail);
  }
  return out;
}

VectorX eigenvalues_near(const SparseMatrixX& h, Real sigma, int k,
                         int max_iterations, Real tol) {
  if (k < 1) throw std::invalid_argument("need k >= 1");
  SparseMatrixX shifted = h;
  for (Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= sigma;
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMatrixX> lu(shifted);
  if (lu.info() != Eigen::Success) {
    throw ResonantEnergyError(sigma, 0.0);  // shift is (numerically) in the spectrum
  }
  const VectorX ritz = lanczos_ritz_values(
      h.rows(), [&](const VectorX& x) -> VectorX { return lu.solve(x); },
      max_iterations, tol);
  // invert the spectral transform and sort by |lambda - sigma|
  std::vector<Real> vals;
  vals.reserve(static_cast<size_t>(ritz.size()));
  for (Index i = 0; i < ritz.size(); ++i) {
    if (ritz[i] != 0.0) vals.push_back(sigma + 1.0 / ritz[i]);
  }
  std::sort(vals.begin(), vals.end(), [sigma](Real a, Real b) {
    return std::abs(a - sigma) < std::abs(b - sigma);
  });
  const int avail = std::min<int>(k, static_cast<int>(vals.size()));
  VectorX out(avail);
  for (int i = 0; i < avail; ++i) out[i] = vals[static_cast<size_t>(i)];
  return out;
}

VectorX tensor_spectrum(const std::vector<VectorX>& singles, Index size_cap) {
  if (singles.empty()) throw std::invalid_argument("need at least one spectrum");
  Index total = 1;
  for (const auto& s : singles) {
    if (s.size() == 0) throw std::invalid_argument("empty spectrum in the list");
    if (total > size_cap / s.size()) {
      throw std::overflow_error("tensor spectrum size exceeds the cap");
    }
    total *= s.size();
  }
  VectorX sums = VectorX::Zero(1);
  for (const auto& s : singles) {
    VectorX next(sums.size() * s.size());
    Index k = 0;
    for (Index i = 0; i < s.size(); ++i) {
      for (Index j = 0; j < sums.size(); ++j) next[k++] = sums[j] + s[i];
    }
    sums.swap(next);
  }
  std::sort(sums.data(), sums.data() + sums.size());
  return sums;
}

Real dist_to_spectrum(const VectorX& sorted_values, Real E) {
  if (sorted_values.size() == 0) throw std::invalid_argument("empty spectrum");
  const Real* begin = sorted_values.data();
  const Real* end = begin + sorted_values.size();
  const Real* it = std::lower_bound(begin, end, E);
  Real dist = std::numeric_limits<Real>::infinity();
  if (it != end) dist = std::min(dist, *it - E);
  if (it != begin) dist = std::min(dist, E - *(it - 1));
  return dist;
}

Real resonance_guard(const VectorX& sorted_values) {
  const Real radius =
      std::max(std::abs(sorted_values[0]),
               std::abs(sorted_values[sorted_values.size() - 1]));
  return 1e-14 * std::max(1.0, radius);
}

MatrixX green_full(const EigenDecomposition& eig, Real E) {
  const VectorX inv = (eig.values.array() - E).inverse();
  return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

MatrixX green_block(const EigenDecomposition& eig, Real E,
                    std::span<const Index> rows, std::span<const Index> cols) {
  MatrixX vrows(static_cast<Index>(rows.size()), eig.dim());
  for (size_t r = 0; r < rows.size(); ++r) {
    vrows.row(static_cast<Index>(r)) = eig.vectors.row(rows[r]);
  }
  MatrixX vcols(static_cast<Index>(cols.size()), eig.dim());
  for (size_t c = 0; c < cols.size(); ++c) {
    vcols.row(static_cast<Index>(c)) = eig.vectors.row(cols[c]);
  }
  const VectorX inv = (eig.values.array() - E).inverse();
  return vrows * inv.asDiagonal() * vcols.transpose();
}

Real operator_norm(const MatrixX& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (std::min(m.rows(), m.cols()) == 1) return m.norm();
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<MatrixX> svd(m);
    return svd.singularValues()(0);
  }
  Eigen::BDCSVD<MatrixX> svd(m);
  return svd.singularValues()(0);
}

GreenProbe green_block_norm(const EigenDecomposition& eig, Real E,
                            std::span<const Index> out_indices,
                            std::span<const Index> int_indices) {
  GreenProbe probe;
  probe.E = E;
  probe.dist_to_spectrum = dist_to_spectrum(eig.values, E);
  const Real guard = resonance_guard(eig.values);
  if (probe.dist_to_spectrum <= guard) {
    throw ResonantEnergyError(E, probe.dist_to_spectrum);
  }
  probe.well_conditioned = probe.dist_to_spectrum > 1e4 * guard;
  probe.block_norm = operator_norm(green_block(eig, E, out_indices, int_indices));
  return probe;
}

WeylCount weyl_count(const VectorX& sorted_values, Real E,
                     const WeylParams& params, Real domain_length) {
  if (!(E > 0.0)) throw std::invalid_argument("weyl_count needs E > 0");
  if (!(params.c_weyl > 0.0)) throw std::invalid_argument("need c_weyl > 0");
  WeylCount count;
  const Real* begin = sorted_values.data();
  const Real* end = begin + sorted_values.size();
  count.exact = std::upper_bound(begin, end, E) - begin;
  count.asymptotic = domain_length * std::sqrt(E) / std::numbers::pi;
  count.j_star = static_cast<Index>(std::ceil(params.c_weyl * domain_length));
  return count;
}

GriResult gri_check(const model::DomainSpec& domain,
                    const model::DisorderField& field,
                    const model::InteractionSpec& interaction,
                    const geom::CubeSpec& inner, Real E,
                    const geom::CubeSpec& region_a,
                    const geom::CubeSpec& region_b) {
  const auto inner_regions = geom::regions(inner);
  if (!inner_regions.interior.contains_cube(region_a)) {
    throw std::invalid_argument("A must lie inside the interior of the inner cube");
  }
  if (!domain.cube.contains_cube(region_b)) {
    throw std::invalid_argument("B must lie inside the big cube");
  }
  // B must avoid the inner cube: some particle axis has to separate the boxes
  bool separated = false;
  for (int i = 0; i < inner.n() && !separated; ++i) {
    separated = region_b.center.particle_dist(i, inner.center, i) >=
                region_b.side(i) + inner.side(i);
  }
  if (!separated) {
    throw std::invalid_argument("B must not meet the inner cube");
  }

  const auto big = model::assemble_multiparticle(domain, field, interaction);
  const auto small = model::restrict_to(domain, field, interaction, inner);
  const auto big_eig = eigendecompose(big);
  const auto small_eig = eigendecompose(small);

  const auto mask_a_big = model::indices_in_cube(big.grid, region_a);
  const auto mask_b = model::indices_in_cube(big.grid, region_b);
  const auto mask_out_big = model::indices_in_shell(big.grid, inner);
  const auto mask_a_small = model::indices_in_cube(small.grid, region_a);
  const auto mask_out_small = model::indices_in_shell(small.grid, inner);

  GriResult result;
  result.lhs = green_block_norm(big_eig, E, mask_b, mask_a_big).block_norm;
  result.factor_big = green_block_norm(big_eig, E, mask_b, mask_out_big).block_norm;
  result.factor_inner =
      green_block_norm(small_eig, E, mask_out_small, mask_a_small).block_norm;
  const Real denom = result.factor_big * result.factor_inner;
  result.ratio = result.lhs == 0.0
                     ? 0.0
                     : result.lhs / std::max(denom, 1e-300);
  return result;
}

EdiResult edi_check(const model::DomainSpec& domain,
                    const model::DisorderField& field,
                    const model::InteractionSpec& interaction,
                    const geom::CubeSpec& inner, Real lambda,
                    const VectorX& psi, const model::ConfigGrid& domain_grid) {
  if (psi.size() != domain_grid.dim()) {
    throw std::invalid_argument("psi does not match the domain grid");
  }
  const auto small = model::restrict_to(domain, field, interaction, inner);
  const auto small_eig = eigendecompose(small);

  const auto masks_small = model::region_masks(small.grid, inner);
  EdiResult result;
  result.green_factor =
      green_block_norm(small_eig, lambda, masks_small.shell, masks_small.interior)
          .block_norm;

  const geom::CubeSpec unit_cell(inner.center, 1);
  Real cell = 0.0;
  for (Index i : model::indices_in_cube(domain_grid, unit_cell)) {
    cell += psi[i] * psi[i];
  }
  result.cell_mass = std::sqrt(cell);

  Real shell = 0.0;
  for (Index i : model::indices_in_shell(domain_grid, inner)) {
    shell += psi[i] * psi[i];
  }
  result.shell_mass = std::sqrt(shell);

  const Real denom = result.green_factor * result.shell_mass;
  result.ratio =
      result.cell_mass == 0.0 ? 0.0 : result.cell_mass / std::max(denom, 1e-300);
  return result;
}

ResolventPerturbation resolvent_perturbation_residual(const MatrixX& h0,
                                                      const VectorX& u_diag,
                                                      Real h, Real E) {
  if (h0.rows() != u_diag.size()) {
    throw std::invalid_argument("diagonal perturbation size mismatch");
  }
  MatrixX hh = h0;
  hh.diagonal() += h * u_diag;

  const auto eig0 = eigendecompose(h0);
  const auto eigh = eigendecompose(hh);
  for (const auto* eig : {&eig0, &eigh}) {
    const Real dist = dist_to_spectrum(eig->values, E);
    if (dist <= resonance_guard(eig->values)) throw ResonantEnergyError(E, dist);
  }

  const MatrixX g0 = green_full(eig0, E);
  const MatrixX gh = green_full(eigh, E);

  ResolventPerturbation result;
  result.g0_norm = 1.0 / dist_to_spectrum(eig0.values, E);
  result.gh_norm = 1.0 / dist_to_spectrum(eigh.values, E);
  result.u_norm = u_diag.cwiseAbs().maxCoeff();
  result.difference_norm = operator_norm(g0 - gh);
  result.residual = operator_norm(g0 - gh - h * (g0 * u_diag.asDiagonal() * gh));
  result.tolerance = 1e-9 * result.g0_norm * result.gh_norm *
                     std::max(1.0, std::abs(h) * result.u_norm);
  result.within_tolerance = result.residual < result.tolerance;
  return result;
}

}  // namespace mpmsa::spectral
