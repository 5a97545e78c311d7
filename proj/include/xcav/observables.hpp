#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xcav/em_solver.hpp"
#include "xcav/ensemble.hpp"
#include "xcav/stack_model.hpp"

namespace xcav {

struct ModelOptions {
  /// A standing_wave policy with phi == 0 is resolved at the working angle.
  SlicingPolicy slicing = SlicingPolicy::one_per_layer();
  CouplingOptions coupling;
};

/// Standing-wave policies with an unset angle pick up (phi, k0).
SlicingPolicy resolve_slicing(SlicingPolicy policy, double phi, double k0);

/// Reflection amplitude at one angle as a function of detuning:
///   R(Delta) = r0 + sum_a sqrt(w_a) G_1D(0, z_a) S_a / a_in.
/// The kernel is factored once, so each detuning costs O(n^2).
class ReflectivityModel {
 public:
  ReflectivityModel(const CavityStack& stack, double phi, double k0, const ModelOptions& options = {});
  /// Empty `sites` gives the bare cavity.
  ReflectivityModel(const FieldProfile& field, std::vector<NuclearSite> sites, const CouplingOptions& options);

  cdouble operator()(double detuning) const;
  cdouble bare() const { return r0_; }
  double phi() const { return phi_; }
  /// Coupling system at Delta = 0; empty when there are no sites.
  const std::optional<CouplingSystem>& system() const { return sys_; }
  const Eigen::VectorXcd& readout() const { return readout_; }

 private:
  void init(const FieldProfile& field, std::vector<NuclearSite> sites, const CouplingOptions& options);

  double phi_ = 0.0;
  cdouble r0_{};
  cdouble a_in_{1.0};
  std::optional<CouplingSystem> sys_;
  std::optional<SteadyStateSolver> solver_;
  Eigen::VectorXcd readout_;
};

cdouble reflectivity(const CavityStack& stack, std::span<const NuclearSite> sites, const CouplingOptions& options,
                     double detuning, double phi, double k0);

struct SpectrumMetadata {
  std::string stack_hash;
  double calibration = 1.0;
  std::vector<SpectralLine> lines;
  std::string source = "model";
};

/// R(phi_i, delta_j) stored with one row per angle.
struct Spectrum {
  std::vector<double> delta_grid;
  std::vector<double> phi_grid;
  Eigen::MatrixXcd R;
  SpectrumMetadata metadata;

  Eigen::MatrixXd intensity() const { return R.cwiseAbs2(); }
};

struct ScanOptions {
  ModelOptions model;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 1;
  /// Angle used to resolve standing-wave slicing; defaults to the grid center.
  std::optional<double> slicing_phi;
};

/// Sites are built once for the whole grid so every angle sees the same
/// ensemble. Output does not depend on the thread count.
Spectrum spectrum_scan(const CavityStack& stack, std::span<const double> delta_grid,
                       std::span<const double> phi_grid, const ScanOptions& options = {});

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// CSV with a column header `# delta_gamma0, phi_mrad, re_R, im_R, abs2_R`,
/// phi-major rows, 12 significant digits.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
Spectrum read_spectrum_csv(std::istream& in);
std::string format_number(double v);

/// RMS of |R_a|^2 - |R_b|^2 over matching grids.
double rms_intensity_difference(const Spectrum& a, const Spectrum& b);

struct CalibrationResult {
  double scale = 0.0;
  CavityStack stack;
  double rms = 0.0;
  std::size_t evaluations = 0;
};

struct CalibrationOptions {
  ScanOptions scan;
  double scale_lo = 1e-4;
  double scale_hi = 1e2;
  std::size_t coarse_points = 33;
};

/// Fits the scale (Gamma0/nm^2) of resonant layer `layer` by minimizing the
/// RMS of |R_model - R_ref| over the reference grid. Throws CalibrationError
/// for a reference without a resonant feature.
CalibrationResult calibrate_density(const CavityStack& stack, const Spectrum& reference, std::size_t layer,
                                    const CalibrationOptions& options = {});

struct CollectiveParameters {
  double Ng = 0.0;      // Re(c w G(z, z)), Gamma0
  double Ngamma = 0.0;  // 2 Im(c w G(z, z)), Gamma0
  /// R = r0 + i C / (Delta + Ng + i (Ngamma + 1) / 2) for a single site.
  cdouble C{};
  cdouble r0{};
};

CollectiveParameters collective_parameters(const CavityStack& stack, const NuclearSite& site, double phi, double k0,
                                           const CouplingOptions& options = {});

struct FanoSample {
  double phi = 0.0;  // rad
  double value = 0.0;
};

struct FanoFit {
  double a = 0.0;
  double q = 0.0;
  double b = 0.0;      // 1/rad
  double phi_C = 0.0;  // rad
  double rms_residual = 0.0;
  std::size_t iterations = 0;
};

/// a |q + b x|^2 / (1 + b^2 x^2), x = phi - phi_C.
double fano_shape(const FanoFit& fit, double phi);

class FanoFitError : public std::runtime_error {
 public:
  FanoFitError(const std::string& what, FanoFit best) : std::runtime_error(what), best_(best) {}
  const FanoFit& best() const { return best_; }

 private:
  FanoFit best_;
};

/// Levenberg-Marquardt with multi-start over the sign of q. Reports b > 0.
FanoFit fano_fit(std::span<const FanoSample> samples);

struct LorentzFit {
  double g = 0.0;
  double kappa = 0.0;
  double center = 0.0;
  double rms_residual = 0.0;
};

/// Gamma_C = 2 |g|^2 kappa / (kappa^2 + Delta_C^2).
std::vector<double> jaynes_cummings_width(double g, double kappa, std::span<const double> delta_c);

/// Fits the Jaynes-Cummings profile with Delta_C = phi - center.
LorentzFit fit_jaynes_cummings(std::span<const FanoSample> samples);

enum class ModeLabel { broad, narrow, dark };
const char* to_string(ModeLabel label);

struct ModeReport {
  Eigen::VectorXcd eigenvalues;
  std::vector<double> widths;          // 2 Im(lambda)
  std::vector<double> positions;       // -Re(lambda)
  std::vector<double> drive_overlaps;  // |c_k|^2 / sum |c_j|^2, Omega = sum c_k v_k
  std::vector<ModeLabel> labels;
  /// sum |c_k|^2 with unit eigenvectors; equals |Omega|^2 for a unitary basis.
  double expansion_norm2 = 0.0;
  double condition_number = 1.0;
  bool ill_conditioned = false;
};

struct ModeOptions {
  double dark_threshold = 0.02;
  double broad_fraction = 0.5;
  double condition_limit = 1e8;
};

ModeReport mode_analysis(const CouplingSystem& sys, const ModeOptions& options = {});

std::string format_fano(const FanoFit& fit);
std::string format_modes(const ModeReport& report);

}  // namespace xcav
