#pragma once

#include <stdexcept>
#include <string>

#include "mpmsa/types.hpp"

namespace mpmsa {

/// Requested energy sits inside (or numerically on top of) the finite-volume
/// spectrum, so the resolvent cannot be evaluated.
class ResonantEnergyError : public std::runtime_error {
 public:
  ResonantEnergyError(Real energy, Real dist)
      : std::runtime_error("energy " + std::to_string(energy) +
                           " is within " + std::to_string(dist) +
                           " of the spectrum"),
        energy_(energy),
        dist_(dist) {}

  Real energy() const { return energy_; }
  Real dist_to_spectrum() const { return dist_; }

 private:
  Real energy_;
  Real dist_;
};

/// Assembly would exceed the configured matrix dimension cap.
class DimensionCapError : public std::length_error {
 public:
  DimensionCapError(Index requested, Index cap)
      : std::length_error("matrix dimension " + std::to_string(requested) +
                          " exceeds cap " + std::to_string(cap)) {}
};

}  // namespace mpmsa
