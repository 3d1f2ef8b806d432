#pragma once

// Embedded oracle suite run by `fincap selftest`. Deterministic: fixed seeds
// and sequential reductions.

#include <vector>

#include "fincap/conformal.hpp"

namespace fincap {

struct SelftestOptions {
  double homogeneity_tol = 1e-10;
  double d_omega_tol = 1e-4;   // exterior derivative of the Hilbert form, spacing 1e-2
  double volume_tol = 1e-6;    // pull-back of the volume form
  double energy_density_tol = 1e-8;  // pull-back of the energy density
  double gradient_tol = 1e-5;  // energy gradient against central differences
  double density_tol = 1e-10;  // Euclidean volume density
  double annulus_tol = 0.06;   // relative error of the annulus capacity
  int annulus_n = 64;
  int samples = 200;
};

std::vector<CheckReport> run_selftest(const SelftestOptions& options = {});

}  // namespace fincap
