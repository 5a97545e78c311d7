#include "xcav/observables.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace xcav {

namespace {

constexpr cdouble kI{0.0, 1.0};

double site_weight(const NuclearSite& s, const CouplingOptions& options) {
  if (s.weight) return options.calibration * *s.weight;
  if (options.default_scale) return options.calibration * *options.default_scale * s.thickness;
  throw CalibrationError("site in layer " + std::to_string(s.parent_layer) + " has no nuclear density scale");
}

std::vector<NuclearSite> sites_or_empty(const CavityStack& stack, const SlicingPolicy& policy) {
  if (stack.resonant_layers().empty()) return {};
  return build_sites(stack, policy);
}

}  // namespace

SlicingPolicy resolve_slicing(SlicingPolicy policy, double phi, double k0) {
  if (policy.kind == SlicingPolicy::Kind::standing_wave) {
    if (policy.phi == 0.0) policy.phi = phi;
    if (policy.k0 == 0.0) policy.k0 = k0;
  }
  return policy;
}

ReflectivityModel::ReflectivityModel(const CavityStack& stack, double phi, double k0, const ModelOptions& options) {
  FieldProfile field(stack, phi, k0);
  init(field, sites_or_empty(stack, resolve_slicing(options.slicing, phi, k0)), options.coupling);
}

ReflectivityModel::ReflectivityModel(const FieldProfile& field, std::vector<NuclearSite> sites,
                                     const CouplingOptions& options) {
  init(field, std::move(sites), options);
}

void ReflectivityModel::init(const FieldProfile& field, std::vector<NuclearSite> sites,
                             const CouplingOptions& options) {
  phi_ = field.phi();
  r0_ = field.reflectivity();
  a_in_ = options.drive_amplitude;
  if (std::abs(a_in_) == 0.0) throw std::invalid_argument("drive amplitude must be nonzero");
  if (sites.empty()) return;
  sys_ = coupling_system(field, sites, 0.0, options);
  solver_.emplace(*sys_);
  const cdouble gf = field.green_factor() * field.q(0.0);
  readout_.resize(static_cast<Eigen::Index>(sys_->size()));
  for (std::size_t a = 0; a < sys_->size(); ++a) {
    const auto& o = sys_->oscillators[a];
    readout_(static_cast<Eigen::Index>(a)) = std::sqrt(o.weight) * gf * field.p(sys_->sites[o.site].z);
  }
}

cdouble ReflectivityModel::operator()(double detuning) const {
  if (!solver_) return r0_;
  const Eigen::VectorXcd s = solver_->solve(detuning);
  return r0_ + readout_.cwiseProduct(s).sum() / a_in_;
}

cdouble reflectivity(const CavityStack& stack, std::span<const NuclearSite> sites, const CouplingOptions& options,
                     double detuning, double phi, double k0) {
  FieldProfile field(stack, phi, k0);
  ReflectivityModel model(field, std::vector<NuclearSite>(sites.begin(), sites.end()), options);
  return model(detuning);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Spectrum spectrum_scan(const CavityStack& stack, std::span<const double> delta_grid,
                       std::span<const double> phi_grid, const ScanOptions& options) {
  if (delta_grid.empty() || phi_grid.empty()) throw std::invalid_argument("spectrum grids must be non-empty");
  const double k0 = stack.k0();
  const double slice_phi = options.slicing_phi.value_or(phi_grid[phi_grid.size() / 2]);
  const auto sites = sites_or_empty(stack, resolve_slicing(options.model.slicing, slice_phi, k0));

  Spectrum out;
  out.delta_grid.assign(delta_grid.begin(), delta_grid.end());
  out.phi_grid.assign(phi_grid.begin(), phi_grid.end());
  out.R.resize(static_cast<Eigen::Index>(phi_grid.size()), static_cast<Eigen::Index>(delta_grid.size()));
  out.metadata.stack_hash = stack_hash(stack);
  out.metadata.calibration = options.model.coupling.calibration;
  for (std::size_t i : stack.resonant_layers()) {
    out.metadata.lines = stack.layers()[i].resonant->species.lines;
    break;
  }

  parallel_for(phi_grid.size(), options.threads, [&](std::size_t i) {
    FieldProfile field(stack, phi_grid[i], k0);
    ReflectivityModel model(field, sites, options.model.coupling);
    for (std::size_t j = 0; j < delta_grid.size(); ++j)
      out.R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = model(delta_grid[j]);
  });
  return out;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "# source=" << s.metadata.source << '\n';
  if (!s.metadata.stack_hash.empty()) out << "# stack_hash=" << s.metadata.stack_hash << '\n';
  out << "# calibration=" << format_number(s.metadata.calibration) << '\n';
  if (!s.metadata.lines.empty()) {
    out << "# lines=";
    for (std::size_t i = 0; i < s.metadata.lines.size(); ++i)
      out << (i ? ";" : "") << '(' << format_number(s.metadata.lines[i].detuning) << ','
          << format_number(s.metadata.lines[i].weight) << ')';
    out << '\n';
  }
  out << "# delta_gamma0, phi_mrad, re_R, im_R, abs2_R\n";
  for (Eigen::Index i = 0; i < s.R.rows(); ++i) {
    const std::string phi = format_number(s.phi_grid[static_cast<std::size_t>(i)] * 1e3);
    for (Eigen::Index j = 0; j < s.R.cols(); ++j) {
      const cdouble r = s.R(i, j);
      out << format_number(s.delta_grid[static_cast<std::size_t>(j)]) << ',' << phi << ',' << format_number(r.real())
          << ',' << format_number(r.imag()) << ',' << format_number(std::norm(r)) << '\n';
    }
  }
}

Spectrum read_spectrum_csv(std::istream& in) {
  Spectrum s;
  std::vector<std::array<double, 5>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto value = [&](std::string_view key) -> std::optional<std::string> {
        const auto pos = line.find(key);
        if (pos == std::string::npos) return std::nullopt;
        return line.substr(pos + key.size());
      };
      if (auto v = value("source=")) s.metadata.source = *v;
      if (auto v = value("stack_hash=")) s.metadata.stack_hash = *v;
      if (auto v = value("calibration=")) s.metadata.calibration = std::stod(*v);
      if (auto v = value("lines=")) {
        std::size_t p = 0;
        while ((p = v->find('(', p)) != std::string::npos) {
          const auto comma = v->find(',', p), close = v->find(')', p);
          if (comma == std::string::npos || close == std::string::npos || comma > close)
            throw std::runtime_error("malformed lines metadata at line " + std::to_string(lineno));
          s.metadata.lines.push_back({std::stod(v->substr(p + 1, comma - p - 1)),
                                      std::stod(v->substr(comma + 1, close - comma - 1))});
          p = close;
        }
      }
      continue;
    }
    std::array<double, 5> row{};
    std::size_t col = 0, start = 0;
    for (; col < 5 && start <= line.size(); ++col) {
      const auto end = std::min(line.find(',', start), line.size());
      const auto res = std::from_chars(line.data() + start, line.data() + end, row[col]);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw std::runtime_error("malformed spectrum row at line " + std::to_string(lineno));
      start = end + 1;
    }
    if (col != 5 || start <= line.size()) throw std::runtime_error("wrong column count at line " + std::to_string(lineno));
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("spectrum file has no rows");
  for (const auto& r : rows) {
    if (s.phi_grid.empty() || s.phi_grid.back() != r[1] * 1e-3) s.phi_grid.push_back(r[1] * 1e-3);
    if (s.phi_grid.size() == 1) s.delta_grid.push_back(r[0]);
  }
  const std::size_t nd = s.delta_grid.size(), np = s.phi_grid.size();
  if (nd * np != rows.size()) throw std::runtime_error("spectrum rows do not form a phi-major grid");
  s.R.resize(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(nd));
  for (std::size_t k = 0; k < rows.size(); ++k)
    s.R(static_cast<Eigen::Index>(k / nd), static_cast<Eigen::Index>(k % nd)) = cdouble(rows[k][2], rows[k][3]);
  return s;
}

double rms_intensity_difference(const Spectrum& a, const Spectrum& b) {
  if (a.R.rows() != b.R.rows() || a.R.cols() != b.R.cols()) throw std::invalid_argument("spectrum grids differ");
  return std::sqrt((a.intensity() - b.intensity()).array().square().mean());
}

CalibrationResult calibrate_density(const CavityStack& stack, const Spectrum& reference, std::size_t layer,
                                    const CalibrationOptions& options) {
  if (layer >= stack.size() || !stack.layers()[layer].resonant)
    throw std::invalid_argument("calibration layer " + std::to_string(layer) + " is not resonant");
  for (std::size_t i : stack.resonant_layers())
    if (i != layer && !stack.layers()[i].resonant->scale && !options.scan.model.coupling.default_scale)
      throw CalibrationError("layer " + std::to_string(i) + " also lacks a density scale");
  if (reference.R.size() == 0) throw std::invalid_argument("empty reference spectrum");
  if (!(options.scale_lo > 0.0 && options.scale_hi > options.scale_lo) || options.coarse_points < 3)
    throw std::invalid_argument("invalid calibration bracket");

  const double k0 = stack.k0();
  double feature = 0.0;
  for (std::size_t i = 0; i < reference.phi_grid.size(); ++i) {
    const cdouble r0 = bare_reflectivity(stack, reference.phi_grid[i], k0);
    for (Eigen::Index j = 0; j < reference.R.cols(); ++j)
      feature = std::max(feature, std::abs(reference.R(static_cast<Eigen::Index>(i), j) - r0));
  }
  if (!(feature > 1e-9)) throw CalibrationError("reference spectrum has no resonant feature");

  std::size_t evaluations = 0;
  auto rms = [&](double log_scale) {
    ++evaluations;
    const Spectrum model = spectrum_scan(stack.with_scale(layer, std::exp(log_scale)), reference.delta_grid,
                                         reference.phi_grid, options.scan);
    return std::sqrt((model.R - reference.R).cwiseAbs2().mean());
  };

  const double lo = std::log(options.scale_lo), hi = std::log(options.scale_hi);
  const std::size_t n = options.coarse_points;
  std::vector<double> x(n), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    f[i] = rms(x[i]);
  }
  const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  const double a = x[best == 0 ? 0 : best - 1], b = x[std::min(best + 1, n - 1)];
  const auto [xmin, fmin] = boost::math::tools::brent_find_minima(rms, a, b, 30);
  const double scale = std::exp(xmin);
  return {scale, stack.with_scale(layer, scale), fmin, evaluations};
}

CollectiveParameters collective_parameters(const CavityStack& stack, const NuclearSite& site, double phi, double k0,
                                           const CouplingOptions& options) {
  const FieldProfile field(stack, phi, k0);
  const double w = site_weight(site, options);
  const cdouble g = w * field.green(site.z, site.z);
  CollectiveParameters out;
  out.Ng = g.real();
  out.Ngamma = 2.0 * g.imag();
  out.C = kI * w * field.green(0.0, site.z) * field.p(site.z);
  out.r0 = field.reflectivity();
  return out;
}

double fano_shape(const FanoFit& fit, double phi) {
  const double u = fit.b * (phi - fit.phi_C);
  return fit.a * (fit.q + u) * (fit.q + u) / (1.0 + u * u);
}

namespace {

// Residuals of the Fano model in scaled variables
// x = (a / a_s, q, b * h, (phi_C - c) / h), divided by the data scale.
struct FanoFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const FanoSample> samples;
  double a_s, h, c, f_s;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(samples.size()); }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double u = x[2] * ((samples[i].phi - c) / h - x[3]);
      const double n = (x[1] + u) * (x[1] + u), d = 1.0 + u * u;
      r[static_cast<Eigen::Index>(i)] = (a_s * x[0] * n / d - samples[i].value) / f_s;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double t = (samples[i].phi - c) / h - x[3];
      const double u = x[2] * t;
      const double d = 1.0 + u * u;
      const double a = a_s * x[0];
      const double dfdu = 2.0 * a * (x[1] + u) * (1.0 - u * x[1]) / (d * d);
      j(k, 0) = a_s * (x[1] + u) * (x[1] + u) / d / f_s;
      j(k, 1) = 2.0 * a * (x[1] + u) / d / f_s;
      j(k, 2) = dfdu * t / f_s;
      j(k, 3) = -dfdu * x[2] / f_s;
    }
    return 0;
  }
};

bool lm_converged(Eigen::LevenbergMarquardtSpace::Status status) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (status) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
      return true;
    default:
      return false;
  }
}

}  // namespace

FanoFit fano_fit(std::span<const FanoSample> samples) {
  if (samples.size() < 8) throw std::invalid_argument("Fano fit needs at least 8 samples");
  double lo = samples.front().phi, hi = lo, fmax = -std::numeric_limits<double>::infinity();
  std::size_t peak = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].value) || !std::isfinite(samples[i].phi))
      throw std::invalid_argument("non-finite Fano sample");
    lo = std::min(lo, samples[i].phi);
    hi = std::max(hi, samples[i].phi);
    if (samples[i].value > fmax) fmax = samples[i].value, peak = i;
  }
  if (!(hi > lo)) throw std::invalid_argument("Fano samples must span a range of angles");
  auto edge = [&](bool low) {
    const auto it = std::min_element(samples.begin(), samples.end(), [&](const FanoSample& x, const FanoSample& y) {
      return low ? x.phi < y.phi : x.phi > y.phi;
    });
    return it->value;
  };
  const double a_guess = std::max(std::min(edge(true), edge(false)), 1e-6 * std::abs(fmax));
  const double q_guess = std::sqrt(std::max(fmax / a_guess - 1.0, 1e-3));

  FanoFunctor fn{samples, a_guess, 0.5 * (hi - lo), 0.5 * (hi + lo), std::max(std::abs(fmax), 1e-300)};
  const double peak_t = (samples[peak].phi - fn.c) / fn.h;

  FanoFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (double sign : {1.0, -1.0}) {
    for (double bh : {4.0, 10.0, 30.0, 100.0, 1.5}) {
      const double q0 = sign * q_guess;
      // The maximum of the profile sits at u = 1/q.
      for (double shift : {1.0 / (q0 * bh), 0.0}) {
        Eigen::VectorXd x(4);
        x << 1.0, q0, bh, peak_t - shift;
        Eigen::LevenbergMarquardt<FanoFunctor> lm(fn);
        lm.parameters.ftol = 1e-15;
        lm.parameters.xtol = 1e-12;
        lm.parameters.gtol = 1e-10;
        lm.parameters.maxfev = 4000;
        const auto status = lm.minimize(x);
        if (!x.allFinite()) continue;
        Eigen::VectorXd r(fn.values());
        fn(x, r);
        const double cost = r.squaredNorm();
        const bool ok = lm_converged(status);
        if ((ok && !any_converged) || ((ok || !any_converged) && cost < best_cost)) {
          any_converged = any_converged || ok;
          best_cost = cost;
          best.a = fn.a_s * x[0];
          best.q = x[1];
          best.b = x[2] / fn.h;
          best.phi_C = fn.c + fn.h * x[3];
          best.iterations = static_cast<std::size_t>(lm.iter);
        }
      }
    }
  }
  if (best.b < 0.0) {
    best.b = -best.b;
    best.q = -best.q;
  }
  double ss = 0.0;
  for (const auto& s : samples) ss += std::pow(fano_shape(best, s.phi) - s.value, 2);
  best.rms_residual = std::sqrt(ss / static_cast<double>(samples.size()));
  if (!any_converged) throw FanoFitError("Fano fit did not converge", best);
  return best;
}

std::vector<double> jaynes_cummings_width(double g, double kappa, std::span<const double> delta_c) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  std::vector<double> out(delta_c.size());
  for (std::size_t i = 0; i < delta_c.size(); ++i)
    out[i] = 2.0 * g * g * kappa / (kappa * kappa + delta_c[i] * delta_c[i]);
  return out;
}

namespace {

// Peak height P = 2 g^2 / kappa, half width kappa and center, in scaled units.
struct LorentzFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const FanoSample> samples;
  double h, c, f_s;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(samples.size()); }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = (samples[i].phi - c) / h - x[2];
      r[static_cast<Eigen::Index>(i)] = x[0] * x[1] * x[1] / (x[1] * x[1] + d * d) - samples[i].value / f_s;
    }
    return 0;
  }
};

}  // namespace

LorentzFit fit_jaynes_cummings(std::span<const FanoSample> samples) {
  if (samples.size() < 4) throw std::invalid_argument("Lorentz fit needs at least 4 samples");
  double lo = samples.front().phi, hi = lo;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    lo = std::min(lo, samples[i].phi);
    hi = std::max(hi, samples[i].phi);
    if (samples[i].value > samples[peak].value) peak = i;
  }
  if (!(hi > lo) || !(samples[peak].value > 0.0)) throw std::invalid_argument("degenerate Lorentz samples");
  LorentzFunctor fn{samples, 0.5 * (hi - lo), 0.5 * (hi + lo), samples[peak].value};
  Eigen::NumericalDiff<LorentzFunctor> nd(fn);
  LorentzFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double width : {0.05, 0.2, 1.0}) {
    Eigen::VectorXd x(3);
    x << 1.0, width, (samples[peak].phi - fn.c) / fn.h;
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LorentzFunctor>> lm(nd);
    lm.parameters.maxfev = 4000;
    lm.minimize(x);
    if (!x.allFinite()) continue;
    Eigen::VectorXd r(fn.values());
    fn(x, r);
    if (r.squaredNorm() >= best_cost) continue;
    best_cost = r.squaredNorm();
    best.kappa = std::abs(x[1]) * fn.h;
    best.center = fn.c + fn.h * x[2];
    best.g = std::sqrt(std::abs(x[0]) * fn.f_s * best.kappa / 2.0);
    best.rms_residual = std::sqrt(best_cost / static_cast<double>(samples.size())) * fn.f_s;
  }
  if (!std::isfinite(best_cost)) throw std::runtime_error("Lorentz fit failed");
  return best;
}

const char* to_string(ModeLabel label) {
  switch (label) {
    case ModeLabel::broad: return "broad";
    case ModeLabel::narrow: return "narrow";
    case ModeLabel::dark: return "dark";
  }
  return "?";
}

ModeReport mode_analysis(const CouplingSystem& sys, const ModeOptions& options) {
  const Eigen::MatrixXcd k = sys.kernel();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(k);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::MatrixXcd v = es.eigenvectors();
  v.colwise().normalize();

  ModeReport out;
  out.eigenvalues = es.eigenvalues();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto& sv = svd.singularValues();
  out.condition_number = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition_number < options.condition_limit);

  const Eigen::VectorXcd c = v.fullPivLu().solve(sys.omega);
  out.expansion_norm2 = c.squaredNorm();
  const auto n = static_cast<std::size_t>(k.rows());
  double max_width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cdouble lambda = out.eigenvalues(static_cast<Eigen::Index>(i));
    out.widths.push_back(2.0 * lambda.imag());
    out.positions.push_back(-lambda.real());
    out.drive_overlaps.push_back(out.expansion_norm2 > 0.0 ? std::norm(c(static_cast<Eigen::Index>(i))) / out.expansion_norm2
                                                           : 0.0);
    max_width = std::max(max_width, out.widths.back());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.drive_overlaps[i] < options.dark_threshold)
      out.labels.push_back(ModeLabel::dark);
    else
      out.labels.push_back(out.widths[i] >= options.broad_fraction * max_width ? ModeLabel::broad : ModeLabel::narrow);
  }
  return out;
}

std::string format_fano(const FanoFit& fit) {
  std::ostringstream os;
  os << "a=" << format_number(fit.a) << '\n'
     << "q=" << format_number(fit.q) << '\n'
     << "abs_q=" << format_number(std::abs(fit.q)) << '\n'
     << "b_per_mrad=" << format_number(fit.b * 1e-3) << '\n'
     << "phi_C_mrad=" << format_number(fit.phi_C * 1e3) << '\n'
     << "rms_residual=" << format_number(fit.rms_residual) << '\n'
     << "iterations=" << fit.iterations << '\n';
  return os.str();
}

std::string format_modes(const ModeReport& r) {
  std::ostringstream os;
  os << "modes=" << r.widths.size() << '\n'
     << "condition_number=" << format_number(r.condition_number) << '\n'
     << "ill_conditioned=" << (r.ill_conditioned ? "true" : "false") << '\n';
  for (std::size_t i = 0; i < r.widths.size(); ++i) {
    os << "mode" << i << ".position_gamma0=" << format_number(r.positions[i]) << '\n'
       << "mode" << i << ".width_gamma0=" << format_number(r.widths[i]) << '\n'
       << "mode" << i << ".overlap=" << format_number(r.drive_overlaps[i]) << '\n'
       << "mode" << i << ".label=" << to_string(r.labels[i]) << '\n';
  }
  return os.str();
}

}  // namespace xcav
