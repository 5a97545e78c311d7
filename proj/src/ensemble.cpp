#include "xcav/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/numeric/odeint.hpp>

namespace xcav {

namespace {

constexpr cdouble kI{0.0, 1.0};

double slice_height(const CavityStack& stack, std::size_t layer, const SlicingPolicy& policy) {
  switch (policy.kind) {
    case SlicingPolicy::Kind::one_per_layer:
      return stack.layers()[layer].thickness_nm;
    case SlicingPolicy::Kind::max_thickness:
      if (!(policy.h_max > 0.0)) throw std::invalid_argument("slice thickness must be > 0");
      return policy.h_max;
    case SlicingPolicy::Kind::standing_wave: {
      if (!(policy.divisor >= 1.0)) throw std::invalid_argument("standing-wave divisor must be >= 1");
      const cdouble kz = kz_in_layer(refractive_index(stack.layers()[layer].material), policy.phi, policy.k0);
      return std::numbers::pi / std::abs(kz) / policy.divisor;
    }
  }
  return stack.layers()[layer].thickness_nm;
}

}  // namespace

std::vector<NuclearSite> build_sites(const CavityStack& stack, const SlicingPolicy& policy) {
  const auto resonant = stack.resonant_layers();
  if (resonant.empty()) throw std::invalid_argument("stack has no resonant layer");
  std::vector<NuclearSite> sites;
  for (std::size_t i : resonant) {
    const Layer& layer = stack.layers()[i];
    const double h_max = slice_height(stack, i, policy);
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(layer.thickness_nm / h_max - 1e-9)));
    const double h = layer.thickness_nm / static_cast<double>(pieces);
    for (std::size_t k = 0; k < pieces; ++k) {
      NuclearSite s;
      s.z = stack.top(i) + (static_cast<double>(k) + 0.5) * h;
      s.thickness = h;
      if (layer.resonant->scale) s.weight = *layer.resonant->scale * h;
      s.species = layer.resonant->species;
      s.parent_layer = i;
      sites.push_back(std::move(s));
    }
  }
  return sites;
}

std::vector<Oscillator> make_oscillators(std::span<const NuclearSite> sites, const CouplingOptions& options) {
  if (sites.empty()) throw std::invalid_argument("no nuclear sites");
  if (!(options.calibration > 0.0)) throw std::invalid_argument("calibration factor must be > 0");
  const double gamma_ref = sites.front().species.natural_linewidth_neV;
  std::vector<Oscillator> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const NuclearSite& s = sites[i];
    double w;
    if (s.weight) {
      w = *s.weight;
    } else if (options.default_scale) {
      w = *options.default_scale * s.thickness;
    } else {
      throw CalibrationError("site in layer " + std::to_string(s.parent_layer) + " has no nuclear density scale");
    }
    if (!(w >= 0.0)) throw std::invalid_argument("negative site weight");
    for (std::size_t j = 0; j < s.species.lines.size(); ++j) {
      const SpectralLine& line = s.species.lines[j];
      out.push_back({i, j, line.detuning, options.calibration * w * line.weight,
                     s.species.natural_linewidth_neV / gamma_ref});
    }
  }
  return out;
}

Eigen::MatrixXcd CouplingSystem::kernel() const {
  Eigen::MatrixXcd k = G;
  for (std::size_t a = 0; a < oscillators.size(); ++a) {
    const auto& o = oscillators[a];
    k(a, a) += cdouble(-o.offset, 0.5 * o.linewidth);
  }
  return k;
}

Eigen::MatrixXcd CouplingSystem::matrix() const {
  Eigen::MatrixXcd m = kernel();
  m.diagonal().array() += delta;
  return m;
}

CouplingSystem coupling_system(const FieldProfile& field, std::span<const NuclearSite> sites, double detuning,
                               const CouplingOptions& options) {
  CouplingSystem sys;
  sys.sites.assign(sites.begin(), sites.end());
  sys.oscillators = make_oscillators(sites, options);
  sys.delta = detuning;
  sys.phi = field.phi();
  const std::size_t n = sys.oscillators.size();

  std::vector<cdouble> p(sites.size()), q(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    p[i] = field.p(sites[i].z);
    q[i] = field.q(sites[i].z);
  }
  const cdouble gf = field.green_factor();

  sys.G = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys.omega.resize(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    const auto& oa = sys.oscillators[a];
    const double sa = std::sqrt(oa.weight);
    sys.omega(static_cast<Eigen::Index>(a)) = sa * p[oa.site] * options.drive_amplitude;
    for (std::size_t b = a; b < n; ++b) {
      const auto& ob = sys.oscillators[b];
      if (options.lines == LineTreatment::independent && std::abs(oa.offset - ob.offset) > 1e-12) continue;
      const std::size_t deep = sites[oa.site].z >= sites[ob.site].z ? oa.site : ob.site;
      const std::size_t shallow = deep == oa.site ? ob.site : oa.site;
      const cdouble g = gf * p[deep] * q[shallow];
      const cdouble v = sa * std::sqrt(ob.weight) * g;
      sys.G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      sys.G(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return sys;
}

CouplingSystem coupling_system(const CavityStack& stack, std::span<const NuclearSite> sites, double phi, double k0,
                               double detuning, const CouplingOptions& options) {
  return coupling_system(FieldProfile(stack, phi, k0), sites, detuning, options);
}

CoherenceState steady_state(const CouplingSystem& sys) {
  const Eigen::MatrixXcd m = sys.matrix();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  Eigen::VectorXcd s = lu.solve(-sys.omega);
  const double scale = m.norm() * s.norm() + sys.omega.norm();
  const double residual = (m * s + sys.omega).norm();
  if (!std::isfinite(residual) || residual > 1e-8 * scale)
    throw SingularSystemError("coupling matrix is singular at detuning " + std::to_string(sys.delta));
  return {std::move(s), std::nullopt};
}

SteadyStateSolver::SteadyStateSolver(const CouplingSystem& sys) : omega_(sys.omega) {
  Eigen::HessenbergDecomposition<Eigen::MatrixXcd> hd(sys.kernel());
  q_ = hd.matrixQ();
  h_ = hd.matrixH();
}

Eigen::VectorXcd SteadyStateSolver::solve(double detuning, const Eigen::VectorXcd& omega) const {
  const Eigen::Index n = h_.rows();
  Eigen::MatrixXcd a = h_;
  a.diagonal().array() += detuning;
  Eigen::VectorXcd rhs = -(q_.adjoint() * omega);
  // Givens sweep: zero the subdiagonal so a becomes upper triangular.
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    Eigen::JacobiRotation<cdouble> rot;
    rot.makeGivens(a(k, k), a(k + 1, k));
    a.applyOnTheLeft(k, k + 1, rot.adjoint());
    rhs.applyOnTheLeft(k, k + 1, rot.adjoint());
  }
  const double tiny = 1e-13 * std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(a(k, k)) < tiny)
      throw SingularSystemError("coupling matrix is singular at detuning " + std::to_string(detuning));
  Eigen::VectorXcd y = a.triangularView<Eigen::Upper>().solve(rhs);
  return q_ * y;
}

std::vector<CoherenceState> evolve(const CouplingSystem& sys, const CoherenceState& initial,
                                   const DriveProfile& drive, std::span<const double> t_grid,
                                   const EvolveOptions& options) {
  namespace odeint = boost::numeric::odeint;
  const auto n = static_cast<Eigen::Index>(sys.size());
  if (initial.S.size() != n) throw std::invalid_argument("initial state has wrong dimension");
  if (t_grid.empty()) return {};
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");

  const Eigen::MatrixXcd m = sys.matrix();
  using State = std::vector<double>;
  auto rhs = [&](const State& x, State& dx, double t) {
    Eigen::Map<const Eigen::VectorXcd> s(reinterpret_cast<const cdouble*>(x.data()), n);
    Eigen::Map<Eigen::VectorXcd> ds(reinterpret_cast<cdouble*>(dx.data()), n);
    const cdouble f = drive ? drive(t) : cdouble(0.0);
    ds.noalias() = kI * (m * s + f * sys.omega);
  };

  State x(static_cast<std::size_t>(2 * n));
  Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<cdouble*>(x.data()), n) = initial.S;
  const double t0 = initial.time.value_or(t_grid.front());
  if (t0 > t_grid.front()) throw std::invalid_argument("time grid starts before the initial state");

  std::vector<double> times;
  times.reserve(t_grid.size() + 1);
  if (t0 < t_grid.front()) times.push_back(t0);
  times.insert(times.end(), t_grid.begin(), t_grid.end());
  const bool skip_first = times.size() > t_grid.size();

  std::vector<CoherenceState> out;
  out.reserve(t_grid.size());
  bool first = true;
  auto observer = [&](const State& y, double t) {
    for (double v : y)
      if (!std::isfinite(v)) throw EvolutionError("state diverged at t = " + std::to_string(t));
    if (first && skip_first) {
      first = false;
      return;
    }
    first = false;
    CoherenceState cs;
    cs.S = Eigen::Map<const Eigen::VectorXcd>(reinterpret_cast<const cdouble*>(y.data()), n);
    cs.time = t;
    out.push_back(std::move(cs));
  };

  const double span = times.back() - times.front();
  const double rate = std::max(1.0, m.cwiseAbs().rowwise().sum().maxCoeff());
  const double dt0 = span > 0.0 ? std::min(span, 0.01 / rate) : 1e-6;
  auto stepper = odeint::make_dense_output(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observer);
  return out;
}

}  // namespace xcav
