#include "xcav/stack_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <cstdio>

namespace xcav {

double wavenumber_for_energy(double energy_keV) {
  return 2.0 * std::numbers::pi * energy_keV / kHcKeVNm;
}

void Material::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("material " + name + ": beta must be >= 0");
  if (!(delta >= 0.0 && delta < 1e-3))
    throw std::invalid_argument("material " + name + ": delta outside [0, 1e-3)");
}

Material vacuum(double photon_energy_keV) { return {"vacuum", 0.0, 0.0, photon_energy_keV}; }

cdouble refractive_index(const Material& material) {
  return {1.0 - material.delta, material.beta};
}

double NuclearSpecies::radiative_linewidth_neV() const {
  return natural_linewidth_neV / (1.0 + internal_conversion_alpha);
}

void NuclearSpecies::normalize() {
  double sum = 0.0;
  for (const auto& l : lines) {
    if (!(l.weight >= 0.0)) throw std::invalid_argument("species " + name + ": negative line weight");
    sum += l.weight;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("species " + name + ": line weights sum to zero");
  // Already-normalized tables are left bit-identical.
  if (std::abs(sum - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return;
  for (auto& l : lines) l.weight /= sum;
}

void NuclearSpecies::validate() const {
  if (lines.empty()) throw std::invalid_argument("species " + name + ": no lines");
  if (!(natural_linewidth_neV > 0.0)) throw std::invalid_argument("species " + name + ": gamma0 must be > 0");
  if (!(radiative_linewidth_neV() > 0.0))
    throw std::invalid_argument("species " + name + ": radiative width must be > 0");
}

std::optional<double> Layer::areal_density() const {
  if (!resonant || !resonant->scale) return std::nullopt;
  return *resonant->scale * thickness_nm;
}

CavityStack::CavityStack(std::vector<Layer> layers, Material substrate, Material ambient)
    : layers_(std::move(layers)), substrate_(std::move(substrate)), ambient_(std::move(ambient)) {
  if (layers_.empty()) throw std::invalid_argument("cavity stack needs at least one layer");
  substrate_.validate();
  ambient_.validate();
  boundaries_.reserve(layers_.size() + 1);
  boundaries_.push_back(0.0);
  for (const auto& l : layers_) {
    if (!(l.thickness_nm > 0.0) || !std::isfinite(l.thickness_nm))
      throw std::invalid_argument("layer thickness must be > 0");
    l.material.validate();
    if (l.resonant) {
      l.resonant->species.validate();
      if (l.resonant->scale && !(*l.resonant->scale >= 0.0))
        throw std::invalid_argument("resonant scale must be >= 0");
    }
    boundaries_.push_back(boundaries_.back() + l.thickness_nm);
  }
}

double CavityStack::center(std::size_t i) const { return 0.5 * (boundaries_[i] + boundaries_[i + 1]); }

std::size_t CavityStack::layer_of(double z) const {
  if (!(z >= 0.0 && z <= total_thickness())) throw std::out_of_range("depth outside stack");
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), z);
  auto idx = static_cast<std::size_t>(it - boundaries_.begin());
  return std::min(idx, layers_.size()) - 1;
}

std::vector<std::size_t> CavityStack::resonant_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].resonant) out.push_back(i);
  return out;
}

CavityStack CavityStack::with_scale(std::size_t i, double scale) const {
  auto layers = layers_;
  if (i >= layers.size() || !layers[i].resonant) throw std::invalid_argument("layer is not resonant");
  layers[i].resonant->scale = scale;
  return {std::move(layers), substrate_, ambient_};
}

SpecError::SpecError(std::size_t line, std::string field, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", " + field + ": " + message),
      line_(line),
      field_(std::move(field)) {}

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_real(std::string_view s, std::size_t line, const std::string& field) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw SpecError(line, field, "expected a real number, got '" + std::string(s) + "'");
  return v;
}

struct RawLayer {
  std::size_t line;
  std::string material;
  double thickness;
  std::optional<std::string> species;
  std::optional<double> scale;
};

std::map<std::string, std::string_view> key_values(std::span<const std::string_view> tokens,
                                                   std::size_t line,
                                                   std::initializer_list<std::string_view> allowed) {
  std::map<std::string, std::string_view> kv;
  for (auto tok : tokens) {
    auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw SpecError(line, std::string(tok), "expected key=value");
    std::string key(tok.substr(0, eq));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw SpecError(line, key, "unknown key");
    if (kv.count(key)) throw SpecError(line, key, "duplicate key");
    kv[key] = tok.substr(eq + 1);
  }
  return kv;
}

std::vector<SpectralLine> parse_lines(std::string_view s, std::size_t line) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw SpecError(line, "lines", "expected [(d,w),...]");
  s = s.substr(1, s.size() - 2);
  std::vector<SpectralLine> out;
  while (!trim(s).empty()) {
    s = trim(s);
    if (s.front() != '(') throw SpecError(line, "lines", "expected '('");
    auto close = s.find(')');
    if (close == std::string_view::npos) throw SpecError(line, "lines", "missing ')'");
    auto body = s.substr(1, close - 1);
    auto comma = body.find(',');
    if (comma == std::string_view::npos) throw SpecError(line, "lines", "expected (detuning,weight)");
    out.push_back({to_real(body.substr(0, comma), line, "lines"), to_real(body.substr(comma + 1), line, "lines")});
    s = trim(s.substr(close + 1));
    if (!s.empty()) {
      if (s.front() != ',') throw SpecError(line, "lines", "expected ','");
      s.remove_prefix(1);
    }
  }
  if (out.empty()) throw SpecError(line, "lines", "empty line table");
  return out;
}

}  // namespace

CavityStack parse_cavity_spec(std::string_view text) {
  std::optional<double> energy;
  std::map<std::string, std::pair<std::size_t, Material>> materials;
  std::map<std::string, std::pair<std::size_t, NuclearSpecies>> species;
  std::vector<RawLayer> raw_layers;
  std::optional<std::pair<std::size_t, std::string>> substrate, ambient;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.starts_with("energy_keV")) {
      auto eq = line.find('=');
      if (eq == std::string_view::npos || trim(line.substr(0, eq)) != "energy_keV")
        throw SpecError(lineno, "energy_keV", "expected 'energy_keV = <real>'");
      if (energy) throw SpecError(lineno, "energy_keV", "duplicate header");
      energy = to_real(line.substr(eq + 1), lineno, "energy_keV");
      if (!(*energy > 0.0)) throw SpecError(lineno, "energy_keV", "must be > 0");
      continue;
    }

    std::string lines_table;
    std::string scratch(line);
    if (auto lp = scratch.find("lines="); lp != std::string::npos) {
      auto rb = scratch.find(']', lp);
      if (rb == std::string::npos) throw SpecError(lineno, "lines", "missing ']'");
      lines_table = scratch.substr(lp + 6, rb - lp - 5);
      scratch.erase(lp, rb - lp + 1);
    }
    auto tokens = split_ws(scratch);
    auto keyword = tokens.front();
    std::span<const std::string_view> rest(tokens.data() + 1, tokens.size() - 1);
    if (!lines_table.empty() && keyword != "species") throw SpecError(lineno, "lines", "unknown key");

    if (keyword == "material") {
      if (rest.empty()) throw SpecError(lineno, "material", "missing name");
      std::string name(rest[0]);
      auto kv = key_values(rest.subspan(1), lineno, {"delta", "beta"});
      for (auto k : {"delta", "beta"})
        if (!kv.count(k)) throw SpecError(lineno, k, "missing");
      Material m{name, to_real(kv["delta"], lineno, "delta"), to_real(kv["beta"], lineno, "beta"), 0.0};
      try {
        m.validate();
      } catch (const std::invalid_argument& e) {
        throw SpecError(lineno, "material", e.what());
      }
      if (materials.count(name) || name == "vacuum") throw SpecError(lineno, "material", "duplicate material " + name);
      materials[name] = {lineno, m};
    } else if (keyword == "species") {
      if (rest.empty()) throw SpecError(lineno, "species", "missing name");
      NuclearSpecies sp;
      sp.name = std::string(rest[0]);
      auto kv = key_values(rest.subspan(1), lineno, {"E0_keV", "gamma0_neV", "alpha"});
      for (auto k : {"E0_keV", "gamma0_neV", "alpha"})
        if (!kv.count(k)) throw SpecError(lineno, k, "missing");
      sp.transition_energy_keV = to_real(kv["E0_keV"], lineno, "E0_keV");
      sp.natural_linewidth_neV = to_real(kv["gamma0_neV"], lineno, "gamma0_neV");
      sp.internal_conversion_alpha = to_real(kv["alpha"], lineno, "alpha");
      if (!lines_table.empty()) sp.lines = parse_lines(lines_table, lineno);
      try {
        sp.normalize();
        sp.validate();
      } catch (const std::invalid_argument& e) {
        throw SpecError(lineno, "species", e.what());
      }
      if (species.count(sp.name)) throw SpecError(lineno, "species", "duplicate species " + sp.name);
      species[sp.name] = {lineno, sp};
    } else if (keyword == "layer") {
      if (rest.size() < 2) throw SpecError(lineno, "layer", "expected 'layer <material> <thickness_nm>'");
      RawLayer rl{lineno, std::string(rest[0]), to_real(rest[1], lineno, "thickness"), {}, {}};
      if (!(rl.thickness > 0.0)) throw SpecError(lineno, "thickness", "must be > 0");
      if (rest.size() > 2) {
        if (rest[2] != "resonant") throw SpecError(lineno, std::string(rest[2]), "unknown key");
        auto kv = key_values(rest.subspan(3), lineno, {"species", "scale"});
        if (!kv.count("species")) throw SpecError(lineno, "species", "resonant layer needs species=<name>");
        rl.species = std::string(kv["species"]);
        if (kv.count("scale")) {
          rl.scale = to_real(kv["scale"], lineno, "scale");
          if (!(*rl.scale >= 0.0)) throw SpecError(lineno, "scale", "must be >= 0");
        }
      }
      raw_layers.push_back(std::move(rl));
    } else if (keyword == "substrate" || keyword == "ambient") {
      if (rest.size() != 1) throw SpecError(lineno, std::string(keyword), "expected one material name");
      auto& slot = keyword == "substrate" ? substrate : ambient;
      if (slot) throw SpecError(lineno, std::string(keyword), "duplicate");
      slot = {lineno, std::string(rest[0])};
    } else {
      throw SpecError(lineno, std::string(keyword), "unknown keyword");
    }
  }

  if (!energy) throw SpecError(0, "energy_keV", "missing header");
  auto resolve = [&](const std::string& name, std::size_t line, const std::string& field) {
    if (name == "vacuum") return vacuum(*energy);
    auto it = materials.find(name);
    if (it == materials.end()) throw SpecError(line, field, "unknown material " + name);
    Material m = it->second.second;
    m.photon_energy_keV = *energy;
    return m;
  };

  if (raw_layers.empty()) throw SpecError(0, "layer", "stack has no layers");
  if (!substrate) throw SpecError(0, "substrate", "missing substrate line");
  std::vector<Layer> layers;
  for (const auto& rl : raw_layers) {
    Layer l{resolve(rl.material, rl.line, "material"), rl.thickness, std::nullopt};
    if (rl.species) {
      auto it = species.find(*rl.species);
      if (it == species.end()) throw SpecError(rl.line, "species", "unknown species " + *rl.species);
      l.resonant = Resonance{it->second.second, rl.scale};
    }
    layers.push_back(std::move(l));
  }
  Material sub = resolve(substrate->second, substrate->first, "substrate");
  Material amb = ambient ? resolve(ambient->second, ambient->first, "ambient") : vacuum(*energy);
  return CavityStack(std::move(layers), std::move(sub), std::move(amb));
}

CavityStack load_cavity_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(0, "path", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cavity_spec(ss.str());
}

namespace {
std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
}  // namespace

std::string serialize_cavity_spec(const CavityStack& stack) {
  std::ostringstream out;
  out << "energy_keV = " << num(stack.energy_keV()) << "\n";
  std::vector<std::string> seen_m, seen_s;
  auto emit_material = [&](const Material& m) {
    if (m.name == "vacuum" && m.delta == 0.0 && m.beta == 0.0) return;
    if (std::find(seen_m.begin(), seen_m.end(), m.name) != seen_m.end()) return;
    seen_m.push_back(m.name);
    out << "material " << m.name << " delta=" << num(m.delta) << " beta=" << num(m.beta) << "\n";
  };
  emit_material(stack.ambient());
  for (const auto& l : stack.layers()) emit_material(l.material);
  emit_material(stack.substrate());
  for (const auto& l : stack.layers()) {
    if (!l.resonant) continue;
    const auto& sp = l.resonant->species;
    if (std::find(seen_s.begin(), seen_s.end(), sp.name) != seen_s.end()) continue;
    seen_s.push_back(sp.name);
    out << "species " << sp.name << " E0_keV=" << num(sp.transition_energy_keV)
        << " gamma0_neV=" << num(sp.natural_linewidth_neV) << " alpha=" << num(sp.internal_conversion_alpha)
        << " lines=[";
    for (std::size_t i = 0; i < sp.lines.size(); ++i)
      out << (i ? "," : "") << "(" << num(sp.lines[i].detuning) << "," << num(sp.lines[i].weight) << ")";
    out << "]\n";
  }
  for (const auto& l : stack.layers()) {
    out << "layer " << l.material.name << " " << num(l.thickness_nm);
    if (l.resonant) {
      out << " resonant species=" << l.resonant->species.name;
      if (l.resonant->scale) out << " scale=" << num(*l.resonant->scale);
    }
    out << "\n";
  }
  out << "substrate " << stack.substrate().name << "\n";
  if (stack.ambient().name != "vacuum") out << "ambient " << stack.ambient().name << "\n";
  return out.str();
}

std::string stack_hash(const CavityStack& stack) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize_cavity_spec(stack)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace xcav
