#include "xcav/em_solver.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

namespace xcav {

namespace {

constexpr cdouble kI{0.0, 1.0};

void check_angle(double phi) {
  if (!(phi > 0.0 && phi < 0.1)) throw std::invalid_argument("grazing angle must lie in (0, 0.1) rad");
}

std::vector<cdouble> medium_kz(const CavityStack& stack, double phi, double k0) {
  std::vector<cdouble> kz;
  kz.reserve(stack.size() + 2);
  kz.push_back(kz_in_layer(refractive_index(stack.ambient()), phi, k0));
  for (const auto& l : stack.layers()) kz.push_back(kz_in_layer(refractive_index(l.material), phi, k0));
  kz.push_back(kz_in_layer(refractive_index(stack.substrate()), phi, k0));
  return kz;
}

// Fresnel coefficient (s-polarization) from medium a into medium b.
cdouble fresnel(cdouble ka, cdouble kb, std::size_t interface) {
  const cdouble sum = ka + kb;
  if (std::abs(sum) == 0.0) throw SingularFieldError(interface, "degenerate interface " + std::to_string(interface));
  return (ka - kb) / sum;
}

}  // namespace

AngleGrid::AngleGrid(std::vector<double> phi, std::optional<double> reference)
    : phi_rad(std::move(phi)), reference_angle(reference) {
  for (std::size_t i = 0; i < phi_rad.size(); ++i) {
    check_angle(phi_rad[i]);
    if (i > 0 && !(phi_rad[i] > phi_rad[i - 1])) throw std::invalid_argument("angle grid must be strictly increasing");
  }
}

AngleGrid AngleGrid::linspace(double lo, double hi, std::size_t count) {
  std::vector<double> phi(count);
  for (std::size_t i = 0; i < count; ++i)
    phi[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return AngleGrid(std::move(phi));
}

std::vector<double> AngleGrid::deviations() const {
  if (!reference_angle) throw std::logic_error("angle grid has no reference angle");
  std::vector<double> out(phi_rad.size());
  std::transform(phi_rad.begin(), phi_rad.end(), out.begin(), [&](double p) { return p - *reference_angle; });
  return out;
}

cdouble kz_in_layer(cdouble n, double phi, double k0) {
  // n^2 - cos^2(phi) written without the 1 - 1 cancellation.
  const double s = std::sin(phi);
  const cdouble arg = (n - 1.0) * (n + 1.0) + s * s;
  cdouble k = k0 * std::sqrt(arg);
  if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
  return k;
}

FieldProfile::Sweep FieldProfile::solve(std::vector<cdouble> kz, std::vector<double> thickness) {
  Sweep s;
  const std::size_t media = kz.size();
  const std::size_t last = media - 1;
  s.kz = std::move(kz);
  s.thickness = std::move(thickness);
  s.boundary.assign(media - 1, 0.0);
  for (std::size_t m = 1; m < last; ++m) s.boundary[m] = s.boundary[m - 1] + s.thickness[m - 1];

  // Ratio of upward to downward amplitude at the bottom of each medium
  // (x_bottom) and at its top (x_top), swept from the exit medium upward.
  std::vector<cdouble> x_bottom(media, 0.0), x_top(media, 0.0), rif(media, 0.0);
  for (std::size_t m = last; m-- > 0;) {
    rif[m] = fresnel(s.kz[m], s.kz[m + 1], m);
    const cdouble y = x_top[m + 1];
    const cdouble den = 1.0 + rif[m] * y;
    if (std::abs(den) < 1e-300) throw SingularFieldError(m, "singular transfer at layer " + std::to_string(m));
    x_bottom[m] = (rif[m] + y) / den;
    if (m > 0) x_top[m] = x_bottom[m] * std::exp(2.0 * kI * s.kz[m] * s.thickness[m - 1]);
  }
  s.r = x_bottom[0];

  s.down_top.assign(media, 0.0);
  s.up_bottom.assign(media, 0.0);
  s.down_top[0] = 1.0;
  cdouble down_at_bottom = 1.0;
  for (std::size_t m = 0; m < last; ++m) {
    s.up_bottom[m] = x_bottom[m] * down_at_bottom;
    const cdouble den = 1.0 + rif[m] * x_top[m + 1];
    if (std::abs(den) < 1e-300) throw SingularFieldError(m + 1, "singular transfer into layer " + std::to_string(m + 1));
    s.down_top[m + 1] = down_at_bottom * (1.0 + rif[m]) / den;
    down_at_bottom = m + 1 < last ? s.down_top[m + 1] * std::exp(kI * s.kz[m + 1] * s.thickness[m]) : s.down_top[m + 1];
  }
  s.t = s.down_top[last];
  return s;
}

cdouble FieldProfile::Sweep::eval(double depth) const {
  const std::size_t last = kz.size() - 1;
  if (depth < 0.0) return std::exp(kI * kz[0] * depth) + r * std::exp(-kI * kz[0] * depth);
  if (depth >= boundary[last - 1]) return t * std::exp(kI * kz[last] * (depth - boundary[last - 1]));
  // Interior medium m spans [boundary[m-1], boundary[m]).
  auto it = std::upper_bound(boundary.begin(), boundary.end(), depth);
  const auto m = static_cast<std::size_t>(it - boundary.begin());
  const double top = boundary[m - 1], bottom = boundary[m];
  return down_top[m] * std::exp(kI * kz[m] * (depth - top)) + up_bottom[m] * std::exp(-kI * kz[m] * (depth - bottom));
}

FieldProfile::FieldProfile(const CavityStack& stack, double phi, double k0)
    : stack_(stack), phi_(phi), k0_(k0) {
  check_angle(phi);
  if (!(k0 > 0.0)) throw std::invalid_argument("k0 must be > 0");
  kz_ = medium_kz(stack_, phi, k0);
  std::vector<double> thickness;
  thickness.reserve(stack_.size());
  for (const auto& l : stack_.layers()) thickness.push_back(l.thickness_nm);
  top_ = solve(kz_, thickness);
  std::vector<cdouble> kz_rev(kz_.rbegin(), kz_.rend());
  std::reverse(thickness.begin(), thickness.end());
  bottom_ = solve(std::move(kz_rev), std::move(thickness));
}

cdouble FieldProfile::green(double z, double z_prime) const {
  const double deep = std::max(z, z_prime), shallow = std::min(z, z_prime);
  // Wronskian of p and q evaluated in the ambient: -2 i k_amb t_q.
  return green_factor() * p(deep) * q(shallow);
}

cdouble FieldProfile::green_factor() const { return kI / (2.0 * kz_ambient() * bottom_.t); }

Green1D green_1d(const CavityStack& stack, double phi, double k0, double z, double z_prime) {
  FieldProfile f(stack, phi, k0);
  return {f.green(z, z_prime), z, z_prime, phi, k0};
}

cdouble bare_reflectivity(const CavityStack& stack, double phi, double k0) {
  check_angle(phi);
  const auto kz = medium_kz(stack, phi, k0);
  const std::size_t last = kz.size() - 1;
  cdouble x = 0.0;
  for (std::size_t m = last; m-- > 0;) {
    const cdouble r = fresnel(kz[m], kz[m + 1], m);
    x = (r + x) / (1.0 + r * x);
    if (m > 0) x *= std::exp(2.0 * kI * kz[m] * stack.layers()[m - 1].thickness_nm);
  }
  return x;
}

ResonantAngles resonant_angles(const CavityStack& stack, double k0, double phi_lo, double phi_hi,
                               std::size_t count, double scan_step) {
  ResonantAngles out;
  if (!(phi_hi > phi_lo) || count == 0) {
    out.incomplete = count > 0;
    return out;
  }
  check_angle(phi_lo);
  check_angle(phi_hi);
  // Even spacing no wider than scan_step; clamping to phi_hi would repeat the
  // last sample and fake a minimum at the boundary.
  const auto n = static_cast<std::size_t>(std::ceil((phi_hi - phi_lo) / scan_step - 1e-9)) + 1;
  auto refl = [&](double phi) { return std::norm(bare_reflectivity(stack, phi, k0)); };
  std::vector<double> phi(n), r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = phi_lo + (phi_hi - phi_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    r2[i] = refl(phi[i]);
  }
  for (std::size_t i = 1; i + 1 < n && out.phi_rad.size() < count; ++i) {
    if (!(r2[i] < r2[i - 1] && r2[i] <= r2[i + 1])) continue;
    auto [best, value] = boost::math::tools::brent_find_minima(refl, phi[i - 1], phi[i + 1], 26);
    (void)value;
    out.phi_rad.push_back(best);
  }
  out.incomplete = out.phi_rad.size() < count;
  return out;
}

}  // namespace xcav
