#pragma once

#include <cmath>

namespace aisr {

struct FluidMaterial {
  double density = 1000.0;        // kg/m^3
  double bulk_modulus = 2.91e9;   // Pa

  double sound_speed() const { return std::sqrt(bulk_modulus / density); }
  bool valid() const { return density > 0.0 && bulk_modulus > 0.0; }
};

struct ElasticMaterial {
  double density = 7850.0;  // kg/m^3
  double cp = 5960.0;       // pressure-wave speed, m/s
  double cs = 3235.0;       // shear-wave speed, m/s

  double mu() const { return density * cs * cs; }                 // Lame mu
  double lambda() const { return density * cp * cp - 2.0 * mu(); }  // Lame lambda
  // Positive bulk modulus requires cp > cs*sqrt(4/3).
  bool valid() const { return density > 0.0 && cs >= 0.0 && cp > cs * std::sqrt(4.0 / 3.0); }
};

namespace materials {
inline FluidMaterial water() { return {1000.0, 2.91e9}; }
inline FluidMaterial steel_as_fluid() { return {7850.0, 2.01e11}; }
// Handbook constants; the paper names the solids without elastic moduli.
inline ElasticMaterial steel() { return {7850.0, 5960.0, 3235.0}; }
inline ElasticMaterial aluminum() { return {2700.0, 6420.0, 3040.0}; }
}  // namespace materials

}  // namespace aisr
