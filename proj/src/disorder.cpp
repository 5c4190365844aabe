#include "mpmsa/disorder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpmsa::model {

void validate(const DisorderSpec& spec) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          if (!(d.lo < d.hi)) throw std::invalid_argument("uniform: need lo < hi");
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          if (!(d.p > 0.0 && d.p < 1.0)) {
            throw std::invalid_argument("bernoulli: need 0 < p < 1");
          }
        } else {
          if (!(d.c > 0.0) || !(d.a > 0.0)) {
            throw std::invalid_argument("log-holder: need c > 0 and a > 0");
          }
        }
      },
      spec.distribution);
}

Real DisorderField::value(GridCoord site) const {
  if (site < window.lo || site > window.hi) {
    throw std::out_of_range("site outside the sampled window");
  }
  return values[static_cast<Index>(site - window.lo)];
}

DisorderField DisorderField::constant(SiteWindow window, Real value) {
  DisorderField field;
  field.window = window;
  field.values = VectorX::Constant(static_cast<Index>(window.count()), value);
  return field;
}

Real sample_site(const DisorderSpec& spec, std::uint64_t master_seed,
                 std::uint64_t realization, GridCoord site) {
  const Real u = uniform01(
      counter_hash(master_seed, realization, static_cast<std::uint64_t>(site)));
  return std::visit(
      [u](const auto& d) -> Real {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return d.lo + (d.hi - d.lo) * u;
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          return u < d.p ? d.level_hi : d.level_lo;
        } else {
          return std::exp(-std::pow(d.c / u, 1.0 / (2.0 * d.a)));
        }
      },
      spec.distribution);
}

DisorderField sample_disorder(const DisorderSpec& spec, SiteWindow window,
                              std::uint64_t master_seed,
                              std::uint64_t realization) {
  validate(spec);
  if (window.hi < window.lo) throw std::invalid_argument("empty site window");
  DisorderField field;
  field.window = window;
  field.values.resize(static_cast<Index>(window.count()));
  for (GridCoord s = window.lo; s <= window.hi; ++s) {
    field.values[static_cast<Index>(s - window.lo)] =
        sample_site(spec, master_seed, realization, s);
  }
  return field;
}

Real concentration_function(const DisorderSpec& spec, Real eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("need eps > 0");
  return std::visit(
      [eps](const auto& d) -> Real {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return std::min(eps / (d.hi - d.lo), 1.0);
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          const Real gap = std::abs(d.level_hi - d.level_lo);
          if (gap == 0.0 || eps > gap) return 1.0;
          return std::max(d.p, 1.0 - d.p);
        } else {
          if (eps >= 1.0) {
            throw std::domain_error("log-holder bound undefined for eps >= 1");
          }
          return d.c / std::pow(std::abs(std::log(eps)), 2.0 * d.a);
        }
      },
      spec.distribution);
}

LogHolderCheck validate_log_holder(const DisorderSpec& spec, Real p, int N, int d) {
  if (!(p > 0.0) || N < 1 || d < 1) {
    throw std::invalid_argument("need p > 0, N >= 1, d >= 1");
  }
  LogHolderCheck check;
  check.threshold = 1.5 * std::pow(4.0, N) * p + 9.0 * N * d;
  constexpr Real inf = std::numeric_limits<Real>::infinity();
  std::visit(
      [&](const auto& dist) {
        using T = std::decay_t<decltype(dist)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          check.satisfied = true;  // Lipschitz: log-Hoelder for every exponent
          check.margin = inf;
        } else if constexpr (std::is_same_v<T, BernoulliDist>) {
          check.satisfied = false;  // atoms: s(F, eps) does not vanish
          check.margin = -inf;
        } else {
          check.margin = dist.a - check.threshold;
          check.satisfied = dist.a > check.threshold;
        }
      },
      spec.distribution);
  return check;
}

}  // namespace mpmsa::model
