#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "../support/properties.hpp"
#include "../support/support.hpp"
#include "xcav/ensemble.hpp"

using namespace xcav;
using xcav::testing::Rng;

namespace {

constexpr cdouble kI{0.0, 1.0};

double third_mode(const CavityStack& s) { return resonant_angles(s, s.k0(), 1e-3, 8e-3, 3).phi_rad.at(2); }

// Pt/C/Fe/C/Fe/C/Pt between two vacuum half-spaces, mirror symmetric.
CavityStack symmetric_cavity() {
  const CavityStack ref = xcav::testing::load_case("eit_node_antinode.cav");
  const Layer pt = ref.layers()[0], fe = ref.layers()[2];
  Layer c = ref.layers()[1];
  c.thickness_nm = 10.0;
  Layer pt_thick = pt;
  pt_thick.thickness_nm = 10.0;
  return CavityStack({pt_thick, c, fe, c, fe, c, pt_thick}, vacuum(14.413), vacuum(14.413));
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("thin layer becomes one centered site") {
  const CavityStack s = xcav::testing::load_case("single_ss_layer.cav");
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(1.0));
  REQUIRE(sites.size() == 1);
  CHECK(sites[0].z == doctest::Approx(18.5));
  CHECK(sites[0].parent_layer == 2);
  CHECK(*sites[0].weight == doctest::Approx(0.321348 * 0.6));
}

TEST_CASE("1.12 nm layer at 0.28 nm gives four equal sites") {
  const CavityStack ref = xcav::testing::load_case("fe_bilayers_x30.cav");
  const CavityStack s({ref.layers()[0], ref.layers()[1]}, ref.substrate(), ref.ambient());
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(0.28));
  REQUIRE(sites.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(sites[k].thickness == doctest::Approx(0.28));
    CHECK(sites[k].z == doctest::Approx(0.14 + 0.28 * static_cast<double>(k)));
    CHECK(*sites[k].weight == *sites[0].weight);
  }
}

TEST_CASE("30 bilayers give 120 sites, none in the 56Fe layers") {
  const CavityStack s = xcav::testing::load_case("fe_bilayers_x30.cav");
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(0.28));
  CHECK(sites.size() == 120);
  for (const auto& site : sites) CHECK(s.layers()[site.parent_layer].resonant.has_value());
  CHECK(build_sites(s, SlicingPolicy::one_per_layer()).size() == 30);
}

TEST_CASE("sub-site weights sum to the layer weight") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    xcav::testing::StackOptions o;
    o.ensure_resonant = true;
    const CavityStack s = xcav::testing::random_stack(rng, o);
    const auto sites = build_sites(s, SlicingPolicy::max_thickness(rng.uniform(0.05, 3.0)));
    for (std::size_t i : s.resonant_layers()) {
      double sum = 0.0;
      for (const auto& site : sites)
        if (site.parent_layer == i) {
          CHECK(*site.weight >= 0.0);
          sum += *site.weight;
        }
      CHECK(sum == doctest::Approx(*s.layers()[i].areal_density()).epsilon(1e-12));
    }
  }
}

TEST_CASE("standing-wave slicing follows the field period") {
  const CavityStack s = xcav::testing::load_case("fe_bilayers_x30.cav");
  const double phi = 16e-3;
  const cdouble kz = kz_in_layer(refractive_index(s.layers()[0].material), phi, s.k0());
  const double h = std::numbers::pi / std::abs(kz) / 12.0;
  const auto sites = build_sites(s, SlicingPolicy::standing_wave(phi, s.k0()));
  const auto per_layer = static_cast<std::size_t>(std::ceil(1.12 / h));
  CHECK(sites.size() == 30 * per_layer);
  CHECK(sites[0].thickness <= h);
}

TEST_CASE("stack without resonant layers has no sites") {
  const CavityStack s = xcav::testing::fe_probe_stack(12.0);
  std::vector<Layer> layers = s.layers();
  for (auto& l : layers) l.resonant.reset();
  CHECK_THROWS_AS(build_sites(CavityStack(layers, s.substrate(), s.ambient()), SlicingPolicy::one_per_layer()),
                  std::invalid_argument);
}

TEST_CASE("uncalibrated layers need a default scale") {
  const CavityStack s = xcav::testing::load_case("single_ss_layer.cav");
  std::vector<Layer> layers = s.layers();
  layers[2].resonant->scale.reset();
  const CavityStack bare(layers, s.substrate(), s.ambient());
  const auto sites = build_sites(bare, SlicingPolicy::one_per_layer());
  CHECK(!sites[0].weight);
  CHECK_THROWS_AS(coupling_system(bare, sites, 2.5e-3, bare.k0(), 0.0), CalibrationError);
  CouplingOptions o;
  o.default_scale = 0.321348;
  const auto with_default = coupling_system(bare, sites, 2.5e-3, bare.k0(), 0.0, o);
  const auto reference = coupling_system(s, build_sites(s, SlicingPolicy::one_per_layer()), 2.5e-3, s.k0(), 0.0);
  CHECK(std::abs(with_default.G(0, 0) - reference.G(0, 0)) < 1e-12 * std::abs(reference.G(0, 0)));
}

TEST_CASE("single-site entries match the weighted Green function") {
  const CavityStack s = xcav::testing::load_case("single_ss_layer.cav");
  const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
  const double phi = 2.46e-3;
  CouplingOptions o;
  o.calibration = 1.7;
  o.drive_amplitude = cdouble(0.3, -0.4);
  const auto sys = coupling_system(s, sites, phi, s.k0(), 0.0, o);
  const double w = 1.7 * 0.321348 * 0.6;
  const FieldProfile f(s, phi, s.k0());
  const cdouble g = w * green_1d(s, phi, s.k0(), 18.5, 18.5).value;
  CHECK(std::abs(sys.G(0, 0) - g) < 1e-12 * std::abs(g));
  CHECK(std::abs(sys.omega(0) - std::sqrt(w) * f.p(18.5) * o.drive_amplitude) < 1e-12);
}

TEST_CASE("single-site steady state is the macro-nucleus response") {
  const CavityStack s = xcav::testing::load_case("single_ss_layer.cav");
  const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
  for (double delta : {-20.0, -4.0, 0.0, 3.5, 50.0}) {
    const auto sys = coupling_system(s, sites, 2.46e-3, s.k0(), delta);
    const double ng = sys.G(0, 0).real(), ngamma = 2.0 * sys.G(0, 0).imag();
    const cdouble expected = -sys.omega(0) / (delta + ng + kI * (ngamma + 1.0) / 2.0);
    const cdouble got = steady_state(sys).S(0);
    CHECK(std::abs(got - expected) < 1e-12 * std::abs(expected));
  }
}

TEST_CASE("mirror-symmetric sites have equal self-coupling") {
  const CavityStack s = symmetric_cavity();
  const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].z + sites[1].z == doctest::Approx(s.total_thickness()));
  for (double phi : {2e-3, 3.5e-3, 5e-3}) {
    const auto sys = coupling_system(s, sites, phi, s.k0(), 0.0);
    CHECK(std::abs(sys.G(0, 0) - sys.G(1, 1)) < 1e-10 * std::abs(sys.G(0, 0)));
  }
}

TEST_CASE("G is symmetric but not Hermitian") {
  const CavityStack s = xcav::testing::load_case("eit_node_antinode.cav");
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(0.5));
  const auto sys = coupling_system(s, sites, third_mode(s), s.k0(), 0.0);
  CHECK((sys.G - sys.G.transpose()).norm() <= 1e-12 * sys.G.norm());
  CHECK((sys.G - sys.G.adjoint()).norm() > 1e-3 * sys.G.norm());
  for (Eigen::Index i = 0; i < sys.G.rows(); ++i) CHECK(sys.decay_matrix()(i, i).real() >= 0.0);
}

TEST_CASE("interlayer coupling of the EIT structures") {
  for (auto [name, target] : {std::pair{"eit_node_antinode.cav", 3.8}, {"eit_antinode_node.cav", 3.2}}) {
    const CavityStack s = xcav::testing::load_case(name);
    const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
    const auto sys = coupling_system(s, sites, third_mode(s), s.k0(), 0.0);
    INFO(name << " |G12| = " << std::abs(sys.G(0, 1)));
    CHECK(std::abs(sys.G(0, 1)) == doctest::Approx(target).epsilon(0.25));
  }
}

TEST_CASE("far off resonance the response vanishes") {
  const CavityStack s = xcav::testing::load_case("eit_node_antinode.cav");
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(0.5));
  const auto sys = coupling_system(s, sites, third_mode(s), s.k0(), 1e6);
  CHECK(steady_state(sys).S.norm() < 1e-5 * sys.omega.norm());
}

TEST_CASE("hyperfine lines couple only within a line") {
  const CavityStack ref = xcav::testing::load_case("eit_node_antinode.cav");
  std::vector<Layer> layers = ref.layers();
  for (auto& l : layers)
    if (l.resonant) l.resonant->species.lines = {{-10.0, 0.5}, {10.0, 0.5}};
  const CavityStack s(layers, ref.substrate(), ref.ambient());
  const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
  const auto independent = coupling_system(s, sites, 3.5e-3, s.k0(), 0.0);
  REQUIRE(independent.size() == 4);
  CouplingOptions o;
  o.lines = LineTreatment::coupled;
  const auto coupled = coupling_system(s, sites, 3.5e-3, s.k0(), 0.0, o);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      const auto& oa = independent.oscillators[a];
      const auto& ob = independent.oscillators[b];
      const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
      if (oa.line != ob.line) {
        CHECK(independent.G(i, j) == cdouble(0.0));
        CHECK(std::abs(coupled.G(i, j)) > 0.0);
      } else {
        CHECK(independent.G(i, j) == coupled.G(i, j));
      }
    }
  CHECK(independent.kernel()(0, 0).real() == doctest::Approx(independent.G(0, 0).real() + 10.0));
}

TEST_CASE("Hessenberg solver reuses one factorization") {
  const CavityStack s = xcav::testing::load_case("fe_bilayers_x30.cav");
  const auto sites = build_sites(s, SlicingPolicy::max_thickness(0.28));
  auto sys = coupling_system(s, sites, 16e-3, s.k0(), 0.0);
  const SteadyStateSolver solver(sys);
  for (double delta : {-60.0, -5.0, 0.0, 12.0}) {
    sys.delta = delta;
    const Eigen::VectorXcd lu = steady_state(sys).S;
    CHECK((solver.solve(delta) - lu).norm() <= 1e-9 * lu.norm());
  }
}

TEST_CASE("zero drive from rest stays at zero") {
  const CavityStack s = xcav::testing::load_case("eit_node_antinode.cav");
  const auto sites = build_sites(s, SlicingPolicy::one_per_layer());
  const auto sys = coupling_system(s, sites, third_mode(s), s.k0(), 0.0);
  const CoherenceState zero{Eigen::VectorXcd::Zero(2), 0.0};
  const std::vector<double> t{0.0, 1.0, 5.0};
  for (const auto& state : evolve(sys, zero, [](double) { return cdouble(0.0); }, t)) CHECK(state.S.norm() == 0.0);
}

TEST_CASE("free evolution never grows the coherence") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    auto [st, sys] = xcav::testing::random_system(rng, 10);
    CoherenceState s0{Eigen::VectorXcd::Zero(sys.omega.size()), 0.0};
    for (Eigen::Index i = 0; i < s0.S.size(); ++i) s0.S(i) = rng.complex();
    const auto grid = xcav::testing::linspace(0.0, 3.0, 31);
    const auto out = evolve(sys, s0, {}, grid);
    // d|S|^2/dt = -S^* (Gamma0 + 2 Im G) S, which cannot be positive.
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i].S.norm() <= out[i - 1].S.norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("steady state is linear in the drive") {
  const auto r = xcav::testing::linearity_property(201);
  INFO(r.name << " worst " << r.worst);
  CHECK(r.pass());
}

TEST_CASE("steady state agrees with naive elimination") {
  const auto r = xcav::testing::brute_force_property(202);
  INFO(r.name << " worst " << r.worst);
  CHECK(r.pass());
}

TEST_CASE("decay matrix is positive semidefinite") {
  const auto r = xcav::testing::passivity_property(203);
  INFO(r.decay.name << " worst " << r.decay.worst);
  CHECK(r.decay.pass());
}

TEST_CASE("time evolution against steady state and free decay") {
  const auto r = xcav::testing::ode_property(204);
  INFO(r.name << " worst " << r.worst);
  CHECK(r.pass());
}

}  // TEST_SUITE
