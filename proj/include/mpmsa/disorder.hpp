#pragma once

#include <cstdint>
#include <variant>

#include "mpmsa/types.hpp"

namespace mpmsa::model {

// ---------------------------------------------------------------------------
// Counter-based RNG: every site value is a pure function of
// (master_seed, realization index, site), independent of evaluation order.
// ---------------------------------------------------------------------------

/// 64-bit finalizer (splitmix64).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  return mix64(h ^ counter);
}

/// Uniform in the open interval (0, 1); never returns an exact endpoint.
inline Real uniform01(std::uint64_t h) {
  return (static_cast<Real>(h >> 11) + 0.5) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Disorder distributions
// ---------------------------------------------------------------------------

struct UniformDist {
  Real lo = 0.0;
  Real hi = 1.0;
};

/// Two-point distribution: P(V = level_hi) = p, P(V = level_lo) = 1 - p.
struct BernoulliDist {
  Real p = 0.5;
  Real level_lo = 0.0;
  Real level_hi = 1.0;
};

/// Log-Hoelder family with concentration bound s(F, eps) <= c / |ln eps|^{2a}.
/// Sampled through the inverse distribution map V = exp(-(c/u)^{1/(2a)}),
/// u ~ U(0,1), whose distribution function is min(1, c/|ln t|^{2a}).
struct LogHolderDist {
  Real c = 1.0;
  Real a = 2.0;
};

using Distribution = std::variant<UniformDist, BernoulliDist, LogHolderDist>;

struct DisorderSpec {
  Distribution distribution = UniformDist{};
};

/// Throws std::invalid_argument on bad parameters (lo >= hi, p outside (0,1), ...).
void validate(const DisorderSpec& spec);

/// Integer site window, both ends inclusive.
struct SiteWindow {
  GridCoord lo = 0;
  GridCoord hi = 0;

  GridCoord count() const { return hi - lo + 1; }
};

/// One disorder realization on a window: one value per site.
struct DisorderField {
  SiteWindow window;
  VectorX values;

  Real value(GridCoord site) const;

  /// Constant field (handy for V = 0 controls).
  static DisorderField constant(SiteWindow window, Real value);
};

/// Draw one value per site, i.i.d. under the spec's distribution.
/// Deterministic in (master_seed, realization, site); windows only select
/// which sites are materialized, never what value a site gets.
DisorderField sample_disorder(const DisorderSpec& spec, SiteWindow window,
                              std::uint64_t master_seed,
                              std::uint64_t realization);

/// Single-site draw; sample_disorder is a loop over this.
Real sample_site(const DisorderSpec& spec, std::uint64_t master_seed,
                 std::uint64_t realization, GridCoord site);

/// Concentration function s(F, eps) = sup_a (F(a + eps) - F(a)).
/// Exact for uniform/bernoulli; the defining bound c/|ln eps|^{2a} for the
/// log-Hoelder family (throws std::domain_error for eps >= 1 there).
Real concentration_function(const DisorderSpec& spec, Real eps);

struct LogHolderCheck {
  bool satisfied = false;
  Real margin = 0.0;     // A - threshold (signed; +/- infinity for uniform/bernoulli)
  Real threshold = 0.0;  // (3/2) 4^N p + 9 N d
};

/// Does the distribution meet A > (3/2) 4^N p + 9 N d?  Uniform laws pass with
/// infinite margin (they are Lipschitz); atomic laws fail outright.
LogHolderCheck validate_log_holder(const DisorderSpec& spec, Real p, int N, int d);

}  // namespace mpmsa::model
