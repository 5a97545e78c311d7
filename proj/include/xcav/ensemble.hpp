#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "xcav/em_solver.hpp"
#include "xcav/stack_model.hpp"

namespace xcav {

/// A "macro-nucleus": one (sub-)layer of resonant nuclei collapsed onto the
/// depth of its center.
struct NuclearSite {
  double z = 0.0;
  double thickness = 0.0;
  /// N_l/A in Gamma0/nm (scale * thickness); empty for uncalibrated layers.
  std::optional<double> weight;
  NuclearSpecies species;
  std::size_t parent_layer = 0;
};

/// How resonant layers are cut into sub-layers.
struct SlicingPolicy {
  enum class Kind { max_thickness, one_per_layer, standing_wave };
  Kind kind = Kind::one_per_layer;
  double h_max = 0.0;        // max_thickness
  double phi = 0.0, k0 = 0.0;  // standing_wave: working angle and wavenumber
  double divisor = 12.0;     // standing_wave: h_max = (pi / |kz|) / divisor

  static SlicingPolicy max_thickness(double h) { return {Kind::max_thickness, h}; }
  static SlicingPolicy one_per_layer() { return {}; }
  static SlicingPolicy standing_wave(double phi, double k0, double divisor = 12.0) {
    return {Kind::standing_wave, 0.0, phi, k0, divisor};
  }
};

class CalibrationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Split each resonant layer into ceil(thickness / h_max) equal sub-layers,
/// one site at each sub-layer center. Throws if the stack has no resonant
/// layer.
std::vector<NuclearSite> build_sites(const CavityStack& stack, const SlicingPolicy& policy);

enum class LineTreatment {
  /// Lines at different detunings do not couple (block-diagonal G).
  independent,
  /// Every (site, line) oscillator couples through the field.
  coupled,
};

struct CouplingOptions {
  /// Global multiplier c on every site weight.
  double calibration = 1.0;
  /// Scale (Gamma0/nm^2) used for resonant layers that have none.
  std::optional<double> default_scale;
  LineTreatment lines = LineTreatment::independent;
  /// Input field amplitude a_in multiplying the drive vector.
  cdouble drive_amplitude = 1.0;
};

/// One row of the coupling matrix: a hyperfine line of one site.
struct Oscillator {
  std::size_t site = 0;
  std::size_t line = 0;
  double offset = 0.0;    // line detuning, Gamma0
  double weight = 0.0;    // c * site weight * line weight, Gamma0/nm
  double linewidth = 1.0; // single-nucleus width in units of the reference Gamma0
};

/// Steady-state problem M S = -Omega with
///   M = diag(Delta - offset + i linewidth/2) + G,
///   G_ab = sqrt(w_a w_b) G_1D(z_a, z_b).
/// G is complex symmetric (reciprocity), not Hermitian.
struct CouplingSystem {
  std::vector<NuclearSite> sites;
  std::vector<Oscillator> oscillators;
  Eigen::MatrixXcd G;
  Eigen::VectorXcd omega;
  double delta = 0.0;
  double phi = 0.0;

  std::size_t size() const { return oscillators.size(); }
  /// Delta-independent part: G + diag(-offset + i linewidth/2).
  Eigen::MatrixXcd kernel() const;
  Eigen::MatrixXcd matrix() const;
  Eigen::MatrixXcd decay_matrix() const { return 2.0 * G.imag().cast<cdouble>(); }
};

std::vector<Oscillator> make_oscillators(std::span<const NuclearSite> sites, const CouplingOptions& options);

CouplingSystem coupling_system(const FieldProfile& field, std::span<const NuclearSite> sites, double detuning,
                               const CouplingOptions& options = {});

CouplingSystem coupling_system(const CavityStack& stack, std::span<const NuclearSite> sites, double phi, double k0,
                               double detuning, const CouplingOptions& options = {});

struct CoherenceState {
  Eigen::VectorXcd S;
  std::optional<double> time;
};

class SingularSystemError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense LU solve of M S = -Omega.
CoherenceState steady_state(const CouplingSystem& sys);

/// Reuses one factorization of the kernel across many detunings: the
/// kernel is reduced once to Hessenberg form K = Q H Q^*, after which each
/// detuning costs a Givens sweep of H + Delta.
class SteadyStateSolver {
 public:
  explicit SteadyStateSolver(const CouplingSystem& sys);
  Eigen::VectorXcd solve(double detuning, const Eigen::VectorXcd& omega) const;
  Eigen::VectorXcd solve(double detuning) const { return solve(detuning, omega_); }

 private:
  Eigen::MatrixXcd q_;
  Eigen::MatrixXcd h_;
  Eigen::VectorXcd omega_;
};

class EvolutionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Drive envelope f(t) multiplying Omega.
using DriveProfile = std::function<cdouble(double)>;

struct EvolveOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-15;
  double min_step = 1e-14;
};

/// Integrates dS/dt = i (M S + f(t) Omega) with adaptive Dormand-Prince
/// steps and returns the state at every point of t_grid.
std::vector<CoherenceState> evolve(const CouplingSystem& sys, const CoherenceState& initial,
                                   const DriveProfile& drive, std::span<const double> t_grid,
                                   const EvolveOptions& options = {});

}  // namespace xcav
