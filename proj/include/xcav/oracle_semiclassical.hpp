#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "xcav/observables.hpp"
#include "xcav/stack_model.hpp"

namespace xcav::oracle {

/// Effective index of a resonant material near the nuclear lines:
///   n(Delta) = n_base - sum_t chi w_t / (2 (Delta - d_t) + i linewidth).
struct ResonantIndex {
  Material base;
  double chi_amp = 0.0;
  std::vector<SpectralLine> lines{{0.0, 1.0}};
  double linewidth = 1.0;

  cdouble operator()(double detuning) const;
};

struct OracleOptions {
  /// chi_amp = kappa * scale; the default is the thin-sheet estimate 1/k0^2.
  std::optional<double> kappa;
  /// Resonant layers are cut into slices no thicker than this (nm).
  double max_slice = 0.3;
  std::optional<double> default_scale;
  double calibration = 1.0;
  unsigned threads = 1;
};

double default_kappa(double k0);

ResonantIndex resonant_index(const Layer& layer, double k0, const OracleOptions& options = {});

/// Parratt recursion over the detuning-dependent index profile.
cdouble oracle_reflectivity(const CavityStack& stack, double detuning, double phi, const OracleOptions& options = {});

Spectrum oracle_spectrum(const CavityStack& stack, std::span<const double> delta_grid,
                         std::span<const double> phi_grid, const OracleOptions& options = {});

struct KappaCalibration {
  double kappa = 0.0;
  double rms = 0.0;
};

/// The single shared scalar between oracle and model: kappa minimizing the
/// RMS of |r_oracle - R_ref| over the reference grid.
KappaCalibration calibrate_kappa(const CavityStack& stack, const Spectrum& reference,
                                 const OracleOptions& options = {});

}  // namespace xcav::oracle
