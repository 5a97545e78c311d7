#include "xcav/oracle_semiclassical.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/tools/minima.hpp>

namespace xcav::oracle {

namespace {

constexpr cdouble kI{0.0, 1.0};

struct Slab {
  cdouble n;
  double thickness;
};

// Decaying branch of k0 sqrt(n^2 - cos^2 phi).
cdouble normal_wavenumber(cdouble n, double phi, double k0) {
  const double s = std::sin(phi);
  cdouble k = k0 * std::sqrt((n - 1.0) * (n + 1.0) + s * s);
  if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
  return k;
}

double layer_scale(const Layer& layer, const OracleOptions& options) {
  if (layer.resonant->scale) return *layer.resonant->scale;
  if (options.default_scale) return *options.default_scale;
  throw CalibrationError("resonant layer " + layer.material.name + " has no nuclear density scale");
}

// Classic Parratt: X_j = (r_j + X_{j+1} e^{2 i k_{j+1} d_{j+1}}) / (1 + r_j X_{j+1} e^{...}),
// j counted from the bottom interface upward.
cdouble parratt(cdouble n_top, const std::vector<Slab>& slabs, cdouble n_sub, double phi, double k0) {
  std::vector<cdouble> k;
  k.reserve(slabs.size() + 2);
  k.push_back(normal_wavenumber(n_top, phi, k0));
  for (const Slab& s : slabs) k.push_back(normal_wavenumber(s.n, phi, k0));
  k.push_back(normal_wavenumber(n_sub, phi, k0));
  cdouble x = 0.0;
  for (std::size_t j = k.size() - 1; j >= 1; --j) {
    const cdouble phase = j < k.size() - 1 ? std::exp(2.0 * kI * k[j] * slabs[j - 1].thickness) : cdouble(1.0);
    const cdouble r = (k[j - 1] - k[j]) / (k[j - 1] + k[j]);
    const cdouble y = x * phase;
    x = (r + y) / (1.0 + r * y);
  }
  return x;
}

}  // namespace

double default_kappa(double k0) { return 1.0 / (k0 * k0); }

cdouble ResonantIndex::operator()(double detuning) const {
  cdouble n = refractive_index(base);
  for (const auto& line : lines) n -= chi_amp * line.weight / (2.0 * (detuning - line.detuning) + kI * linewidth);
  return n;
}

ResonantIndex resonant_index(const Layer& layer, double k0, const OracleOptions& options) {
  ResonantIndex out;
  out.base = layer.material;
  if (!layer.resonant) {
    out.lines.clear();
    return out;
  }
  const double kappa = options.kappa.value_or(default_kappa(k0));
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  out.chi_amp = options.calibration * kappa * layer_scale(layer, options);
  out.lines = layer.resonant->species.lines;
  return out;
}

cdouble oracle_reflectivity(const CavityStack& stack, double detuning, double phi, const OracleOptions& options) {
  if (!(options.max_slice > 0.0)) throw std::invalid_argument("oracle slice thickness must be > 0");
  const double k0 = stack.k0();
  std::vector<Slab> slabs;
  for (const Layer& layer : stack.layers()) {
    if (!layer.resonant) {
      slabs.push_back({refractive_index(layer.material), layer.thickness_nm});
      continue;
    }
    const cdouble n = resonant_index(layer, k0, options)(detuning);
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(layer.thickness_nm / options.max_slice - 1e-9)));
    for (std::size_t i = 0; i < pieces; ++i) slabs.push_back({n, layer.thickness_nm / static_cast<double>(pieces)});
  }
  return parratt(refractive_index(stack.ambient()), slabs, refractive_index(stack.substrate()), phi, k0);
}

Spectrum oracle_spectrum(const CavityStack& stack, std::span<const double> delta_grid,
                         std::span<const double> phi_grid, const OracleOptions& options) {
  if (delta_grid.empty() || phi_grid.empty()) throw std::invalid_argument("spectrum grids must be non-empty");
  Spectrum out;
  out.delta_grid.assign(delta_grid.begin(), delta_grid.end());
  out.phi_grid.assign(phi_grid.begin(), phi_grid.end());
  out.R.resize(static_cast<Eigen::Index>(phi_grid.size()), static_cast<Eigen::Index>(delta_grid.size()));
  out.metadata.stack_hash = stack_hash(stack);
  out.metadata.calibration = options.kappa.value_or(default_kappa(stack.k0()));
  out.metadata.source = "oracle";
  for (std::size_t i : stack.resonant_layers()) {
    out.metadata.lines = stack.layers()[i].resonant->species.lines;
    break;
  }
  parallel_for(phi_grid.size(), options.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < delta_grid.size(); ++j)
      out.R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          oracle_reflectivity(stack, delta_grid[j], phi_grid[i], options);
  });
  return out;
}

KappaCalibration calibrate_kappa(const CavityStack& stack, const Spectrum& reference, const OracleOptions& options) {
  if (stack.resonant_layers().empty()) throw CalibrationError("stack has no resonant layer");
  if (reference.R.size() == 0) throw std::invalid_argument("empty reference spectrum");
  const double k0 = stack.k0();
  auto rms = [&](double log_ratio) {
    OracleOptions o = options;
    o.kappa = default_kappa(k0) * std::exp(log_ratio);
    const Spectrum s = oracle_spectrum(stack, reference.delta_grid, reference.phi_grid, o);
    return std::sqrt((s.R - reference.R).cwiseAbs2().mean());
  };
  // Coarse scan over two decades either side of the thin-sheet estimate.
  const int n = 41;
  double best_x = 0.0, best_f = rms(0.0);
  for (int i = 0; i < n; ++i) {
    const double x = std::log(100.0) * (2.0 * i / (n - 1) - 1.0);
    const double f = rms(x);
    if (f < best_f) best_f = f, best_x = x;
  }
  const double step = 2.0 * std::log(100.0) / (n - 1);
  const auto [x, f] = boost::math::tools::brent_find_minima(rms, best_x - step, best_x + step, 30);
  return {default_kappa(k0) * std::exp(x), f};
}

}  // namespace xcav::oracle
