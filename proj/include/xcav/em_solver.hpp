#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xcav/stack_model.hpp"

namespace xcav {

/// Grazing angles strictly inside (0, 0.1) rad, strictly increasing.
struct AngleGrid {
  std::vector<double> phi_rad;
  std::optional<double> reference_angle;

  explicit AngleGrid(std::vector<double> phi, std::optional<double> reference = std::nullopt);
  static AngleGrid linspace(double lo, double hi, std::size_t count);
  /// phi - phi_C for every grid point; throws without a reference angle.
  std::vector<double> deviations() const;
};

/// z-component of the wave vector in a medium of index n for grazing angle
/// phi (measured in vacuum). Picks the branch with Im k_z >= 0.
cdouble kz_in_layer(cdouble n, double phi, double k0);

class SingularFieldError : public std::runtime_error {
 public:
  SingularFieldError(std::size_t layer, const std::string& what)
      : std::runtime_error(what), layer_(layer) {}
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

/// Plane-wave solution of the scalar (s-polarized) stratified Helmholtz
/// problem at fixed in-plane wavevector.
///
/// Two solutions are held:
///   p(z): unit wave incident from the ambient, purely outgoing in the
///         substrate.  p = e^{ik z} + r e^{-ik z} for z < 0.
///   q(z): unit wave incident from the substrate (amplitude anchored at the
///         substrate interface), purely outgoing in the ambient.
///
/// Inside each layer the field is stored as a downward wave anchored at the
/// layer top and an upward wave anchored at the layer bottom, so no
/// exponential exceeds unit modulus however thick or lossy the layer is.
class FieldProfile {
 public:
  FieldProfile(const CavityStack& stack, double phi, double k0);

  double phi() const { return phi_; }
  double k0() const { return k0_; }
  const CavityStack& stack() const { return stack_; }

  cdouble p(double z) const { return top_.eval(to_top(z)); }
  cdouble q(double z) const { return bottom_.eval(to_bottom(z)); }

  /// Reflection amplitude for top incidence.
  cdouble reflectivity() const { return top_.r; }
  /// Transmitted amplitude into the substrate (anchored at its interface).
  cdouble transmission() const { return top_.t; }
  cdouble kz_ambient() const { return kz_.front(); }
  cdouble kz_substrate() const { return kz_.back(); }
  /// kz in medium m: 0 = ambient, 1..N = layers, N+1 = substrate.
  cdouble kz_medium(std::size_t m) const { return kz_[m]; }

  /// One-dimensional Green function G(z, z') for -d^2/dz^2 - kz^2(z),
  /// normalized so a homogeneous medium gives i e^{ik|z-z'|} / (2k).
  cdouble green(double z, double z_prime) const;
  /// Constant c with green(z, z') = c p(z_>) q(z_<).
  cdouble green_factor() const;

 private:
  // Amplitudes for incidence from medium 0 of an ordered medium list.
  struct Sweep {
    std::vector<cdouble> kz;          // per medium
    std::vector<double> thickness;    // per interior medium (index m-1)
    std::vector<double> boundary;     // interface depths from medium 0
    std::vector<cdouble> down_top;    // downward amplitude at top of medium m
    std::vector<cdouble> up_bottom;   // upward amplitude at bottom of medium m
    cdouble r{}, t{};
    cdouble eval(double depth) const;
  };
  static Sweep solve(std::vector<cdouble> kz, std::vector<double> thickness);

  double to_top(double z) const { return z; }
  double to_bottom(double z) const { return stack_.total_thickness() - z; }

  CavityStack stack_;
  double phi_, k0_;
  std::vector<cdouble> kz_;
  Sweep top_, bottom_;
};

struct Green1D {
  cdouble value;
  double z = 0.0, z_prime = 0.0, phi = 0.0, k0 = 0.0;
};

Green1D green_1d(const CavityStack& stack, double phi, double k0, double z, double z_prime);

/// Amplitude reflection coefficient of the bare stack at its top surface.
cdouble bare_reflectivity(const CavityStack& stack, double phi, double k0);

struct ResonantAngles {
  std::vector<double> phi_rad;
  /// Set when the range held fewer minima than requested.
  bool incomplete = false;
};

/// The `count` lowest-angle local minima of |r0(phi)|^2 in [phi_lo, phi_hi],
/// each refined by Brent search to 1e-7 rad or better. An empty or inverted
/// range gives an empty result.
ResonantAngles resonant_angles(const CavityStack& stack, double k0, double phi_lo, double phi_hi,
                               std::size_t count, double scan_step = 1e-6);

}  // namespace xcav
