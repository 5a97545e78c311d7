#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xcav {

using cdouble = std::complex<double>;

/// hc in keV nm.
inline constexpr double kHcKeVNm = 1.23984198;

/// Vacuum wavenumber (1/nm) for a photon energy in keV.
double wavenumber_for_energy(double energy_keV);

/// Homogeneous x-ray material, n = 1 - delta + i beta.
struct Material {
  std::string name;
  double delta = 0.0;
  double beta = 0.0;
  double photon_energy_keV = 0.0;

  /// Throws std::invalid_argument on beta < 0 or delta outside [0, 1e-3).
  void validate() const;
  bool operator==(const Material&) const = default;
};

Material vacuum(double photon_energy_keV);

/// Complex refractive index 1 - delta + i beta.
cdouble refractive_index(const Material& material);

/// One hyperfine component: detuning from the species transition in units
/// of Gamma0, and its share of the total oscillator strength.
struct SpectralLine {
  double detuning = 0.0;
  double weight = 1.0;
  bool operator==(const SpectralLine&) const = default;
};

struct NuclearSpecies {
  std::string name;
  double transition_energy_keV = 14.413;
  double natural_linewidth_neV = 4.66;
  double internal_conversion_alpha = 8.6;
  std::vector<SpectralLine> lines{{0.0, 1.0}};

  /// Gamma_r = Gamma0 / (1 + alpha).
  double radiative_linewidth_neV() const;
  /// Rescales line weights to sum to one; throws if any weight is negative
  /// or the sum vanishes.
  void normalize();
  void validate() const;
  bool operator==(const NuclearSpecies&) const = default;
};

/// Resonant content of a layer. `scale` is the areal nuclear density per nm
/// of thickness, expressed in Gamma0 / nm^2. An unset scale marks a layer
/// that still needs calibration.
struct Resonance {
  NuclearSpecies species;
  std::optional<double> scale;
  bool operator==(const Resonance&) const = default;
};

struct Layer {
  Material material;
  double thickness_nm = 0.0;
  std::optional<Resonance> resonant;

  /// scale * thickness: the layer's total N/A weight (Gamma0 / nm).
  std::optional<double> areal_density() const;
  bool operator==(const Layer&) const = default;
};

/// Ordered top-to-bottom stack between two semi-infinite media. Depth z is
/// measured from the ambient/stack interface, increasing downward.
class CavityStack {
 public:
  CavityStack(std::vector<Layer> layers, Material substrate, Material ambient);

  const std::vector<Layer>& layers() const { return layers_; }
  const Material& substrate() const { return substrate_; }
  const Material& ambient() const { return ambient_; }
  std::size_t size() const { return layers_.size(); }

  double energy_keV() const { return ambient_.photon_energy_keV; }
  double k0() const { return wavenumber_for_energy(energy_keV()); }

  /// Depth of the top of layer i; top(size()) is the substrate interface.
  double top(std::size_t i) const { return boundaries_[i]; }
  double bottom(std::size_t i) const { return boundaries_[i + 1]; }
  double center(std::size_t i) const;
  double total_thickness() const { return boundaries_.back(); }
  const std::vector<double>& boundaries() const { return boundaries_; }

  /// Layer containing depth z, with half-open intervals [top, bottom); the
  /// bottom boundary itself maps to the last layer. Throws outside
  /// [0, total_thickness].
  std::size_t layer_of(double z) const;

  std::vector<std::size_t> resonant_layers() const;

  /// Copy with layer i's resonant scale replaced.
  CavityStack with_scale(std::size_t i, double scale) const;

  bool operator==(const CavityStack& o) const {
    return layers_ == o.layers_ && substrate_ == o.substrate_ && ambient_ == o.ambient_;
  }

 private:
  std::vector<Layer> layers_;
  Material substrate_;
  Material ambient_;
  std::vector<double> boundaries_;
};

/// Thrown by parse_cavity_spec. `line` is 1-based; 0 for document-level
/// problems.
class SpecError : public std::runtime_error {
 public:
  SpecError(std::size_t line, std::string field, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

CavityStack parse_cavity_spec(std::string_view text);
CavityStack load_cavity_spec(const std::string& path);

/// Inverse of parse_cavity_spec; values are written with round-trip
/// precision so parse(serialize(s)) == s.
std::string serialize_cavity_spec(const CavityStack& stack);

/// FNV-1a hash of the serialized stack, used to tag spectra.
std::string stack_hash(const CavityStack& stack);

}  // namespace xcav
