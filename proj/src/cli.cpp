#include "xcav/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "xcav/em_solver.hpp"
#include "xcav/ensemble.hpp"
#include "xcav/observables.hpp"
#include "xcav/oracle_semiclassical.hpp"
#include "xcav/stack_model.hpp"

namespace xcav::cli {

namespace {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> to_rad(const std::vector<double>& mrad) {
  std::vector<double> out(mrad.size());
  std::transform(mrad.begin(), mrad.end(), out.begin(), [](double v) { return v * 1e-3; });
  return out;
}

SlicingPolicy slicing_from(const std::string& s) {
  if (s == "layer") return SlicingPolicy::one_per_layer();
  if (s == "auto") return SlicingPolicy::standing_wave(0.0, 0.0);
  double h = 0.0;
  try {
    std::size_t used = 0;
    h = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw ConfigError("slicing must be 'layer', 'auto' or a thickness in nm, got '" + s + "'");
  }
  if (!(h > 0.0)) throw ConfigError("slice thickness must be > 0");
  return SlicingPolicy::max_thickness(h);
}

ModelOptions model_options(const RunConfig& c) {
  ModelOptions m;
  m.slicing = slicing_from(c.slicing);
  m.coupling.calibration = c.calibration;
  m.coupling.default_scale = c.default_scale;
  return m;
}

ScanOptions scan_options(const RunConfig& c) {
  ScanOptions s;
  s.model = model_options(c);
  s.threads = c.threads;
  return s;
}

oracle::OracleOptions oracle_options(const RunConfig& c) {
  oracle::OracleOptions o;
  o.kappa = c.kappa;
  o.max_slice = c.oracle_slice;
  o.default_scale = c.default_scale;
  o.calibration = c.calibration;
  o.threads = c.threads;
  return o;
}

void check_grid(const Grid& g, const char* name) {
  if (g.count == 0) throw ConfigError(std::string(name) + " grid is empty");
  if (!std::isfinite(g.min) || !std::isfinite(g.max) || (g.count > 1 && !(g.max > g.min)))
    throw ConfigError(std::string(name) + " grid needs max > min");
}

void check_grids(const RunConfig& c, bool with_delta) {
  check_grid(c.phi_mrad, "phi");
  if (with_delta) {
    check_grid(c.delta, "delta");
    if (c.delta.count > kMaxGridPoints / c.phi_mrad.count)
      throw ConfigError("grid exceeds " + std::to_string(kMaxGridPoints) + " points");
  } else if (c.phi_mrad.count > kMaxGridPoints) {
    throw ConfigError("grid exceeds " + std::to_string(kMaxGridPoints) + " points");
  }
}

std::size_t pick_layer(const CavityStack& stack, const std::optional<std::size_t>& requested) {
  const auto resonant = stack.resonant_layers();
  if (resonant.empty()) throw ConfigError("stack has no resonant layer");
  if (!requested) {
    for (std::size_t i : resonant)
      if (!stack.layers()[i].resonant->scale) return i;
    return resonant.front();
  }
  if (*requested >= stack.size() || !stack.layers()[*requested].resonant)
    throw ConfigError("layer " + std::to_string(*requested) + " is not resonant");
  return *requested;
}

// Output sink: a file when requested, the given stream otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigError("cannot open output file " + path);
    out_ = file_.get();
  }
  std::ostream& operator*() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file " + path);
  f << text;
}

Spectrum oracle_for(const RunConfig& c, const CavityStack& stack, const std::vector<double>& delta,
                    const std::vector<double>& phi) {
  auto options = oracle_options(c);
  if (c.calibrate_at_mrad && !c.kappa) {
    const std::vector<double> at{*c.calibrate_at_mrad * 1e-3};
    const Spectrum ref = spectrum_scan(stack, delta, at, scan_options(c));
    options.kappa = oracle::calibrate_kappa(stack, ref, options).kappa;
  }
  return oracle::oracle_spectrum(stack, delta, phi, options);
}

void run_angles(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  const auto res = resonant_angles(stack, stack.k0(), c.phi_mrad.min * 1e-3, c.phi_mrad.max * 1e-3, c.mode);
  out << "stack_hash=" << stack_hash(stack) << '\n';
  for (std::size_t i = 0; i < res.phi_rad.size(); ++i)
    out << "mode" << i + 1 << "_mrad=" << format_number(res.phi_rad[i] * 1e3) << '\n';
  out << "incomplete=" << (res.incomplete ? "true" : "false") << '\n';
}

void run_rocking(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  out << "# source=bare\n# stack_hash=" << stack_hash(stack) << "\n# phi_mrad, re_r0, im_r0, abs2_r0\n";
  for (double p : c.phi_mrad.values()) {
    const cdouble r = bare_reflectivity(stack, p * 1e-3, stack.k0());
    out << format_number(p) << ',' << format_number(r.real()) << ',' << format_number(r.imag()) << ','
        << format_number(std::norm(r)) << '\n';
  }
}

NuclearSite single_site(const CavityStack& stack, std::size_t layer) {
  for (const auto& s : build_sites(stack, SlicingPolicy::one_per_layer()))
    if (s.parent_layer == layer) return s;
  throw ConfigError("layer " + std::to_string(layer) + " is not resonant");
}

void run_collective(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  const NuclearSite site = single_site(stack, pick_layer(stack, c.layer));
  const auto coupling = model_options(c).coupling;
  out << "# source=model\n# stack_hash=" << stack_hash(stack) << "\n# z_nm=" << format_number(site.z)
      << "\n# phi_mrad, Ng_gamma0, Ngamma_gamma0\n";
  const auto phis = c.phi_mrad.values();
  std::vector<CollectiveParameters> rows(phis.size());
  parallel_for(phis.size(), c.threads,
               [&](std::size_t i) { rows[i] = collective_parameters(stack, site, phis[i] * 1e-3, stack.k0(), coupling); });
  for (std::size_t i = 0; i < phis.size(); ++i)
    out << format_number(phis[i]) << ',' << format_number(rows[i].Ng) << ',' << format_number(rows[i].Ngamma) << '\n';
}

void run_fano(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  const NuclearSite site = single_site(stack, pick_layer(stack, c.layer));
  double center;
  if (c.phi_center_mrad) {
    center = *c.phi_center_mrad * 1e-3;
  } else {
    const auto res = resonant_angles(stack, stack.k0(), c.phi_mrad.min * 1e-3, c.phi_mrad.max * 1e-3, c.mode);
    if (res.phi_rad.size() < c.mode) throw ConfigError("fewer than " + std::to_string(c.mode) + " modes in range");
    center = res.phi_rad[c.mode - 1];
  }
  const double hw = c.window_mrad * 1e-3;
  if (!(hw > 0.0) || center - hw <= 0.0) throw ConfigError("invalid Fano window");
  const std::size_t n = std::max<std::size_t>(c.phi_mrad.count, 8);
  const auto coupling = model_options(c).coupling;
  std::vector<FanoSample> samples(n);
  parallel_for(n, c.threads, [&](std::size_t i) {
    const double p = center - hw + 2.0 * hw * static_cast<double>(i) / static_cast<double>(n - 1);
    samples[i] = {p, collective_parameters(stack, site, p, stack.k0(), coupling).Ngamma};
  });
  const FanoFit fit = fano_fit(samples);
  out << "z_nm=" << format_number(site.z) << '\n'
      << "window_center_mrad=" << format_number(center * 1e3) << '\n'
      << "window_half_width_mrad=" << format_number(c.window_mrad) << '\n'
      << format_fano(fit);
}

void run_modes(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  const double phi = c.phi_single_mrad * 1e-3;
  if (!(phi > 0.0)) throw ConfigError("modes needs --phi in mrad");
  const auto opts = model_options(c);
  const auto sites = build_sites(stack, resolve_slicing(opts.slicing, phi, stack.k0()));
  const auto sys = coupling_system(stack, sites, phi, stack.k0(), 0.0, opts.coupling);
  ModeOptions mo;
  mo.dark_threshold = c.dark_threshold;
  out << "phi_mrad=" << format_number(c.phi_single_mrad) << '\n' << format_modes(mode_analysis(sys, mo));
}

void run_compare(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  const auto delta = c.delta.values();
  const auto phi = to_rad(c.phi_mrad.values());
  const Spectrum model = spectrum_scan(stack, delta, phi, scan_options(c));
  const Spectrum orc = oracle_for(c, stack, delta, phi);

  std::ostringstream ms, os;
  write_spectrum_csv(ms, model);
  write_spectrum_csv(os, orc);
  if (!c.model_out.empty()) write_file(c.model_out, ms.str());
  if (!c.oracle_out.empty()) write_file(c.oracle_out, os.str());

  // Statistics use the emitted (formatted) values so readers can reproduce them.
  std::istringstream mi(ms.str()), oi(os.str());
  const Spectrum mr = read_spectrum_csv(mi), orr = read_spectrum_csv(oi);
  out << "# source=compare\n# stack_hash=" << stack_hash(stack) << "\n# oracle_kappa="
      << format_number(orc.metadata.calibration) << "\n# delta_gamma0, phi_mrad, abs2_model, abs2_oracle\n";
  const Eigen::MatrixXd a = mr.intensity(), b = orr.intensity();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out << format_number(delta[static_cast<std::size_t>(j)]) << ',' << format_number(phi[static_cast<std::size_t>(i)] * 1e3)
          << ',' << format_number(a(i, j)) << ',' << format_number(b(i, j)) << '\n';
  const double rms = rms_intensity_difference(mr, orr);
  const double contrast = a.maxCoeff() - a.minCoeff();
  out << "# summary rms_abs2=" << format_number(rms) << " peak_contrast=" << format_number(contrast)
      << " rms_fraction=" << format_number(contrast > 0.0 ? rms / contrast : 0.0) << '\n';
}

void run_calibrate(const RunConfig& c, const CavityStack& stack, std::ostream& out) {
  if (c.reference.empty()) throw ConfigError("calibrate needs --reference");
  std::ifstream in(c.reference);
  if (!in) throw ConfigError("cannot open reference " + c.reference);
  Spectrum ref;
  try {
    ref = read_spectrum_csv(in);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  const std::size_t layer = pick_layer(stack, c.layer);
  CalibrationOptions opts;
  opts.scan = scan_options(c);
  const auto res = calibrate_density(stack, ref, layer, opts);
  out << "layer=" << layer << '\n'
      << "scale_gamma0_per_nm2=" << format_number(res.scale) << '\n'
      << "rms=" << format_number(res.rms) << '\n'
      << "evaluations=" << res.evaluations << '\n';
  if (!c.output.empty()) write_file(c.output, serialize_cavity_spec(res.stack));
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::vector<double> Grid::values() const {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = count == 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

void execute(const RunConfig& c, std::ostream& out) {
  CavityStack stack = load_cavity_spec(c.spec_path);
  if (c.threads > 256) throw ConfigError("--threads must be <= 256");
  switch (c.command) {
    case Command::angles:
      check_grids(c, false);
      run_angles(c, stack, out);
      return;
    case Command::rocking:
      check_grids(c, false);
      run_rocking(c, stack, out);
      return;
    case Command::collective:
      check_grids(c, false);
      run_collective(c, stack, out);
      return;
    case Command::fano:
      run_fano(c, stack, out);
      return;
    case Command::modes:
      run_modes(c, stack, out);
      return;
    case Command::scan:
      check_grids(c, true);
      write_spectrum_csv(out, spectrum_scan(stack, c.delta.values(), to_rad(c.phi_mrad.values()), scan_options(c)));
      return;
    case Command::oracle:
      check_grids(c, true);
      write_spectrum_csv(out, oracle_for(c, stack, c.delta.values(), to_rad(c.phi_mrad.values())));
      return;
    case Command::compare:
      check_grids(c, true);
      run_compare(c, stack, out);
      return;
    case Command::calibrate:
      run_calibrate(c, stack, out);
      return;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thin-film x-ray cavity simulator with resonant nuclear layers", "xcavsim"};
  app.set_version_flag("--version", std::string("xcavsim model=") + kModelVersion + " oracle=" + kOracleVersion);
  app.require_subcommand(1);

  RunConfig c;
  app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();

  auto grid = [&](CLI::App* sub, bool delta) {
    sub->add_option("--phi-min", c.phi_mrad.min, "Lowest angle (mrad)")->capture_default_str();
    sub->add_option("--phi-max", c.phi_mrad.max, "Highest angle (mrad)")->capture_default_str();
    sub->add_option("--phi-count", c.phi_mrad.count, "Number of angles")->capture_default_str();
    if (!delta) return;
    sub->add_option("--delta-min", c.delta.min, "Lowest detuning (Gamma0)")->capture_default_str();
    sub->add_option("--delta-max", c.delta.max, "Highest detuning (Gamma0)")->capture_default_str();
    sub->add_option("--delta-count", c.delta.count, "Number of detunings")->capture_default_str();
  };
  auto model = [&](CLI::App* sub) {
    sub->add_option("--slicing", c.slicing, "'layer', 'auto' or max slice thickness in nm")->capture_default_str();
    sub->add_option("--default-scale", c.default_scale, "Density scale for unscaled layers (Gamma0/nm^2)");
    sub->add_option("--calibration", c.calibration, "Global coupling multiplier")->capture_default_str();
  };
  auto oracle_flags = [&](CLI::App* sub) {
    sub->add_option("--kappa", c.kappa, "Oracle susceptibility per unit scale (nm^2)");
    sub->add_option("--calibrate-at", c.calibrate_at_mrad, "Fit kappa against the model at this angle (mrad)");
    sub->add_option("--oracle-slice", c.oracle_slice, "Oracle slice thickness (nm)")->capture_default_str();
  };

  struct Sub {
    const char* name;
    Command cmd;
    const char* help;
  };
  const Sub subs[] = {
      {"angles", Command::angles, "List guided-mode angles (minima of the bare reflectivity)"},
      {"scan", Command::scan, "Reflectivity map over detuning and angle"},
      {"rocking", Command::rocking, "Bare-cavity reflectivity versus angle"},
      {"collective", Command::collective, "Collective shift and superradiant rate versus angle"},
      {"fano", Command::fano, "Fano fit of the superradiant rate around a guided mode"},
      {"modes", Command::modes, "Eigenmodes of the coupling matrix at one angle"},
      {"oracle", Command::oracle, "Reflectivity map from the semiclassical layer oracle"},
      {"compare", Command::compare, "Model and oracle maps with RMS summary"},
      {"calibrate", Command::calibrate, "Fit a layer density scale to a reference spectrum"},
  };
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("spec", c.spec_path, "Cavity spec file")->required();
    sub->add_option("-o,--output", c.output, "Output file (default stdout)");
    sub->callback([&c, cmd = s.cmd] { c.command = cmd; });
    switch (s.cmd) {
      case Command::angles:
        grid(sub, false);
        sub->add_option("--count", c.mode, "Number of modes")->capture_default_str();
        break;
      case Command::rocking:
        grid(sub, false);
        break;
      case Command::collective:
        grid(sub, false);
        model(sub);
        sub->add_option("--layer", c.layer, "Resonant layer index (0-based)");
        break;
      case Command::fano:
        grid(sub, false);
        model(sub);
        sub->add_option("--layer", c.layer, "Resonant layer index (0-based)");
        sub->add_option("--mode", c.mode, "Guided mode to center the window on (1-based)")->capture_default_str();
        sub->add_option("--window", c.window_mrad, "Half-width of the angle window (mrad)")->capture_default_str();
        sub->add_option("--center", c.phi_center_mrad, "Window center (mrad), overrides --mode");
        break;
      case Command::modes:
        model(sub);
        sub->add_option("--phi", c.phi_single_mrad, "Angle (mrad)")->required();
        sub->add_option("--dark-threshold", c.dark_threshold, "Overlap below which a mode is dark")
            ->capture_default_str();
        break;
      case Command::scan:
        grid(sub, true);
        model(sub);
        break;
      case Command::oracle:
        grid(sub, true);
        model(sub);
        oracle_flags(sub);
        break;
      case Command::compare:
        grid(sub, true);
        model(sub);
        oracle_flags(sub);
        sub->add_option("--model-out", c.model_out, "Also write the model CSV");
        sub->add_option("--oracle-out", c.oracle_out, "Also write the oracle CSV");
        break;
      case Command::calibrate:
        model(sub);
        sub->add_option("--reference", c.reference, "Reference spectrum CSV")->required();
        sub->add_option("--layer", c.layer, "Resonant layer index (0-based)");
        break;
    }
  }

  auto fail = [&](ExitCode code, const std::string& reason) {
    err << "error=" << (code == config_error ? "config" : "numerical") << " exit=" << static_cast<int>(code)
        << " reason=" << one_line(reason) << '\n';
    return static_cast<int>(code);
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForVersion& e) {
    out << app.version() << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    return fail(config_error, e.what());
  }

  try {
    // Subcommand output goes to --output when given, the sink otherwise. The
    // calibrate command writes the fitted spec to --output instead.
    const bool file_output = c.command != Command::calibrate && !c.output.empty();
    std::ostringstream buffer;
    execute(c, buffer);
    Sink sink(file_output ? c.output : std::string(), out);
    *sink << buffer.str();
    return ok;
  } catch (const SpecError& e) {
    return fail(config_error, std::string("spec: ") + e.what());
  } catch (const ConfigError& e) {
    return fail(config_error, e.what());
  } catch (const CalibrationError& e) {
    return fail(config_error, std::string("calibration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(config_error, e.what());
  } catch (const FanoFitError& e) {
    return fail(numerical_error, std::string("fano: ") + e.what());
  } catch (const SingularFieldError& e) {
    return fail(numerical_error, std::string("field: ") + e.what());
  } catch (const SingularSystemError& e) {
    return fail(numerical_error, std::string("steady state: ") + e.what());
  } catch (const EvolutionError& e) {
    return fail(numerical_error, std::string("evolve: ") + e.what());
  } catch (const std::exception& e) {
    return fail(numerical_error, e.what());
  }
}

}  // namespace xcav::cli
