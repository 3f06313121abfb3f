#pragma once

// Quasi-static tensile protocol: ramp a uniaxial box strain at a fixed
// boundary speed while time-stepping the overdamped network, record the
// stress-strain curve, and report the small-strain modulus from a linear
// fit. fit_power_law turns moduli measured at several densities into the
// stiffness-density scaling exponent.

#include <vector>

#include "mech/solver.hpp"

namespace cellmat {

struct TensileConfig {
  int axis = 0;                  // 0=x, 1=y, 2=z
  double target_strain = 0.01;   // dimensionless, (0, 0.5]
  double rate_um_per_s = 0.01;   // boundary displacement speed
  double dt = 1.0;               // s
};

struct TensileResult {
  std::vector<double> strains;
  std::vector<double> stresses;  // pN/um^2 along the pulled axis
  double modulus = 0.0;          // pN/um^2
};

TensileResult run_tensile(MechSystem& sys, const TensileConfig& cfg);

// Least-squares slope of log(modulus) against log(density). Requires at
// least two strictly positive (density, modulus) pairs.
double fit_power_law(const std::vector<double>& densities, const std::vector<double>& moduli);

}  // namespace cellmat
