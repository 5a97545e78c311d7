#pragma once

// Shared helpers for the unit and acceptance suites: case loading, seeded
// random generators and a brute-force linear solver used as an oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcav/stack_model.hpp"

namespace xcav::testing {

inline std::string case_path(const std::string& name) { return std::string(XCAV_DATA_DIR) + "/cases/" + name; }

inline CavityStack load_case(const std::string& name) { return load_cavity_spec(case_path(name)); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  cdouble complex(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

 private:
  std::mt19937_64 eng_;
};

inline Material random_material(Rng& rng, const std::string& name, bool lossless = false) {
  Material m;
  m.name = name;
  m.delta = rng.uniform(1e-6, 3e-5);
  m.beta = lossless ? 0.0 : rng.uniform(0.0, 3e-6);
  m.photon_energy_keV = 14.413;
  return m;
}

inline NuclearSpecies fe57() {
  NuclearSpecies s;
  s.name = "Fe57";
  return s;
}

struct StackOptions {
  int min_layers = 1;
  int max_layers = 6;
  bool lossless = false;
  double resonant_probability = 0.4;
  bool ensure_resonant = false;
};

/// Random passive stack under vacuum.
inline CavityStack random_stack(Rng& rng, const StackOptions& o = {}) {
  std::vector<Layer> layers;
  const int n = rng.integer(o.min_layers, o.max_layers);
  for (int i = 0; i < n; ++i) {
    Layer l;
    l.material = random_material(rng, "m" + std::to_string(i), o.lossless);
    l.thickness_nm = rng.uniform(0.5, 20.0);
    if (rng.coin(o.resonant_probability)) l.resonant = Resonance{fe57(), rng.uniform(0.1, 1.0)};
    layers.push_back(l);
  }
  if (o.ensure_resonant) {
    bool any = false;
    for (const auto& x : layers) any = any || x.resonant.has_value();
    if (!any) layers[static_cast<std::size_t>(rng.integer(0, n - 1))].resonant = Resonance{fe57(), rng.uniform(0.1, 1.0)};
  }
  return CavityStack(std::move(layers), random_material(rng, "sub", o.lossless), vacuum(14.413));
}

/// Gaussian elimination with partial pivoting on an augmented copy. Kept
/// deliberately naive so it shares nothing with the library solvers.
inline Eigen::VectorXcd brute_force_solve(Eigen::MatrixXcd a, Eigen::VectorXcd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      for (Eigen::Index j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b(k), b(piv));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const cdouble f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b(i) -= f * b(k);
    }
  }
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    cdouble s = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j);
    x(i) = s / a(i, i);
  }
  return x;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

/// Deepest interior local minimum of y with its abscissa inside [lo, hi]:
/// the drop below the lower of the two side maxima, relative to max(y).
/// Zero when there is none.
inline double dip_depth(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
  const double top = *std::max_element(y.begin(), y.end());
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (x[i] < lo || x[i] > hi || !(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
    const double left = *std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    const double right = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(i), y.end());
    best = std::max(best, (std::min(left, right) - y[i]) / top);
  }
  return best;
}

/// Builds the Pt(2)/C/Fe(1)/C/Pt(10) stack with the Fe center at z0 and the
/// C total kept at 40 nm, using materials from the shipped z0 = 12 nm case.
inline CavityStack fe_probe_stack(double z0) {
  const CavityStack ref = load_case("pt_c_pt_fe_z12.cav");
  const auto& L = ref.layers();
  const Layer pt_top = L[0], carbon = L[1], fe = L[2], pt_bottom = L[4];
  const double top_c = z0 - 0.5 * fe.thickness_nm - pt_top.thickness_nm;
  const double c_total = L[1].thickness_nm + L[3].thickness_nm;
  std::vector<Layer> layers{pt_top};
  if (top_c > 1e-9) {
    Layer c = carbon;
    c.thickness_nm = top_c;
    layers.push_back(c);
  }
  layers.push_back(fe);
  Layer c = carbon;
  c.thickness_nm = c_total - std::max(top_c, 0.0);
  layers.push_back(c);
  layers.push_back(pt_bottom);
  return CavityStack(std::move(layers), ref.substrate(), ref.ambient());
}

}  // namespace xcav::testing
