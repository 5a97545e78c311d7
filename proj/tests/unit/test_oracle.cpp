#include <doctest.h>

#include <cmath>

#include "../support/support.hpp"
#include "xcav/observables.hpp"
#include "xcav/oracle_semiclassical.hpp"

using namespace xcav;
using xcav::testing::linspace;
using xcav::testing::load_case;
using xcav::testing::Rng;

namespace {

constexpr cdouble kI{0.0, 1.0};

double first_mode(const CavityStack& s) { return resonant_angles(s, s.k0(), 1e-3, 8e-3, 1).phi_rad.at(0); }
double third_mode(const CavityStack& s) { return resonant_angles(s, s.k0(), 1e-3, 8e-3, 3).phi_rad.at(2); }

// kappa fitted once against the model on the single-layer stack, at an
// angle away from the first mode.
double frozen_kappa() {
  static const double kappa = [] {
    const CavityStack s = load_case("single_ss_layer.cav");
    const std::vector<double> p{first_mode(s) + 0.4e-3};
    const Spectrum ref = spectrum_scan(s, linspace(-40.0, 40.0, 81), p);
    return oracle::calibrate_kappa(s, ref).kappa;
  }();
  return kappa;
}

oracle::OracleOptions frozen() {
  oracle::OracleOptions o;
  o.kappa = frozen_kappa();
  return o;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("index far off resonance is the base index") {
  const CavityStack s = load_case("single_ss_layer.cav");
  const auto idx = oracle::resonant_index(s.layers()[2], s.k0());
  CHECK(idx.chi_amp > 0.0);
  const cdouble base = refractive_index(s.layers()[2].material);
  CHECK(std::abs(idx(1e6) - base) < 1e-9);
  CHECK(std::abs(idx(-1e6) - base) < 1e-9);
  const auto plain = oracle::resonant_index(s.layers()[1], s.k0());
  CHECK(plain.chi_amp == 0.0);
  CHECK(plain(0.0) == refractive_index(s.layers()[1].material));
}

TEST_CASE("index absorption peaks at each line center") {
  Layer l = load_case("single_ss_layer.cav").layers()[2];
  l.resonant->species.lines = {{-15.0, 0.4}, {20.0, 0.6}};
  const auto idx = oracle::resonant_index(l, 73.041203);
  const double base = l.material.beta;
  for (double center : {-15.0, 20.0}) {
    double best = -1.0, at = 0.0;
    for (double d : linspace(center - 5.0, center + 5.0, 1001)) {
      const double im = idx(d).imag();
      if (im > best) best = im, at = d;
    }
    CHECK(at == doctest::Approx(center).epsilon(1e-9));
  }
  for (double d : linspace(-200.0, 200.0, 4001)) CHECK(idx(d).imag() >= base);
}

TEST_CASE("default kappa is the thin-sheet estimate") {
  CHECK(oracle::default_kappa(2.0) == doctest::Approx(0.25));
  const CavityStack s = load_case("single_ss_layer.cav");
  oracle::OracleOptions o;
  o.kappa = -1.0;
  CHECK_THROWS_AS(oracle::resonant_index(s.layers()[2], s.k0(), o), std::invalid_argument);
}

TEST_CASE("without resonant layers the oracle is the bare stack") {
  Rng rng(401);
  for (int trial = 0; trial < 40; ++trial) {
    xcav::testing::StackOptions o;
    o.resonant_probability = 0.0;
    const CavityStack s = xcav::testing::random_stack(rng, o);
    const double phi = rng.uniform(1e-3, 2e-2);
    const cdouble r0 = bare_reflectivity(s, phi, s.k0());
    const cdouble r = oracle::oracle_reflectivity(s, rng.uniform(-50.0, 50.0), phi);
    CHECK(std::abs(r - r0) <= 1e-12 * std::max(1.0, std::abs(r0)));
  }
}

TEST_CASE("oracle is passive") {
  Rng rng(402);
  for (int trial = 0; trial < 20; ++trial) {
    xcav::testing::StackOptions o;
    o.ensure_resonant = true;
    const CavityStack s = xcav::testing::random_stack(rng, o);
    const std::vector<double> p{rng.uniform(1e-3, 1e-2), rng.uniform(1e-3, 1e-2)};
    const Spectrum sp = oracle::oracle_spectrum(s, linspace(-60.0, 60.0, 61), p);
    CHECK(sp.R.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("oracle slices are converged") {
  for (const char* name : {"single_ss_layer.cav", "eit_node_antinode.cav"}) {
    const CavityStack s = load_case(name);
    const double phi = std::string(name) == "single_ss_layer.cav" ? first_mode(s) : third_mode(s);
    const std::vector<double> p{phi - 0.1e-3, phi, phi + 0.1e-3};
    const auto delta = linspace(-40.0, 40.0, 81);
    oracle::OracleOptions coarse = frozen(), fine = frozen();
    fine.max_slice = 0.5 * coarse.max_slice;
    const Spectrum a = oracle::oracle_spectrum(s, delta, p, coarse), b = oracle::oracle_spectrum(s, delta, p, fine);
    INFO(name);
    CHECK(rms_intensity_difference(a, b) < 0.005 * b.intensity().maxCoeff());
  }
}

TEST_CASE("spectrum metadata") {
  const CavityStack s = load_case("single_ss_layer.cav");
  const std::vector<double> d{0.0, 1.0}, p{2.5e-3};
  oracle::OracleOptions o;
  o.kappa = 2e-4;
  const Spectrum sp = oracle::oracle_spectrum(s, d, p, o);
  CHECK(sp.metadata.source == "oracle");
  CHECK(sp.metadata.calibration == 2e-4);
  CHECK(sp.metadata.stack_hash == stack_hash(s));
  CHECK(sp.R(0, 1) == oracle::oracle_reflectivity(s, 1.0, 2.5e-3, o));
}

TEST_CASE("kappa calibration recovers its own reference") {
  const CavityStack s = load_case("single_ss_layer.cav");
  oracle::OracleOptions truth;
  truth.kappa = 1.37 * oracle::default_kappa(s.k0());
  const std::vector<double> p{first_mode(s)};
  const Spectrum ref = oracle::oracle_spectrum(s, linspace(-40.0, 40.0, 81), p, truth);
  const auto cal = oracle::calibrate_kappa(s, ref);
  CHECK(cal.kappa == doctest::Approx(*truth.kappa).epsilon(1e-6));
  CHECK(cal.rms < 1e-8);
}

TEST_CASE("single-layer line matches the collective parameters") {
  const CavityStack s = load_case("single_ss_layer.cav");
  const double phi0 = first_mode(s);
  const auto site = build_sites(s, SlicingPolicy::one_per_layer()).front();
  const auto cp = collective_parameters(s, site, phi0, s.k0());
  const double center = -cp.Ng, width = cp.Ngamma + 1.0;
  const auto delta = linspace(-80.0, 80.0, 3201);
  std::vector<double> y;
  for (double d : delta) y.push_back(std::norm(oracle::oracle_reflectivity(s, d, phi0, frozen())));
  std::size_t k = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[k]) k = i;
  const double half = 0.5 * y[k];
  std::size_t lo = k, hi = k;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  const double fwhm = delta[hi] - delta[lo];
  CHECK(delta[k] == doctest::Approx(center).epsilon(0.05));
  CHECK(fwhm == doctest::Approx(width).epsilon(0.05));
}

TEST_CASE("EIT dip appears only for the node-antinode order") {
  for (auto [name, dip] : {std::pair{"eit_node_antinode.cav", true}, {"eit_antinode_node.cav", false}}) {
    const CavityStack s = load_case(name);
    const double phi = third_mode(s);
    std::vector<double> y;
    const auto delta = linspace(-30.0, 30.0, 601);
    for (double d : delta) y.push_back(std::norm(oracle::oracle_reflectivity(s, d, phi, frozen())));
    const double depth = xcav::testing::dip_depth(delta, y, -10.0, 10.0);
    INFO(name << " dip depth " << depth);
    CHECK((depth > 0.01) == dip);
  }
}

TEST_CASE("oracle and model agree near the first mode") {
  const CavityStack s = load_case("single_ss_layer.cav");
  const double phi0 = first_mode(s);
  const auto delta = linspace(-40.0, 40.0, 81);
  const auto p = linspace(phi0 - 0.3e-3, phi0 + 0.3e-3, 13);
  const Spectrum m = spectrum_scan(s, delta, p), o = oracle::oracle_spectrum(s, delta, p, frozen());
  const double contrast = m.intensity().maxCoeff() - m.intensity().minCoeff();
  CHECK(rms_intensity_difference(m, o) < 0.02 * contrast);
}

}  // TEST_SUITE
