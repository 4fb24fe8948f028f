#include "ghostsim/sample.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ghostsim/units.hpp"

namespace ghostsim::sample {

double FluorophoreMap::concentration_at(double x_um) const {
  const double half = 0.5 * extent_um;
  if (x_um < -half || x_um >= half) return 0.0;
  const auto idx = static_cast<std::size_t>((x_um + half) / cell_width_um());
  if (idx >= concentration_uM.size()) return 0.0;  // x == +half edge
  return concentration_uM[idx];
}

void FluorophoreMap::validate() const {
  if (!(extent_um > 0.0)) {
    throw std::invalid_argument("FluorophoreMap: extent must be positive");
  }
  if (!(thickness_um > 0.0)) {
    throw std::invalid_argument("FluorophoreMap: thickness must be positive");
  }
  if (concentration_uM.empty()) {
    throw std::invalid_argument("FluorophoreMap: concentration grid is empty");
  }
  for (double m : concentration_uM) {
    if (m < 0.0 || !std::isfinite(m)) {
      throw std::invalid_argument(
          "FluorophoreMap: concentrations must be finite and >= 0");
    }
  }
  if (!(dye.epsilon_per_M_um > 0.0) || !(dye.lifetime_ns > 0.0)) {
    throw std::invalid_argument(
        "FluorophoreMap: extinction and lifetime must be positive");
  }
  if (dye.quantum_yield < 0.0 || dye.quantum_yield > 1.0) {
    throw std::invalid_argument("FluorophoreMap: quantum yield outside [0,1]");
  }
  if (probe_scatter_prob < 0.0 || probe_scatter_prob > 1.0 ||
      fluo_scatter_prob < 0.0 || fluo_scatter_prob > 1.0) {
    throw std::invalid_argument(
        "FluorophoreMap: scattering probabilities outside [0,1]");
  }
  if (probe_scatter_sigma_um < 0.0 || fluo_scatter_delay_ns < 0.0) {
    throw std::invalid_argument(
        "FluorophoreMap: scattering spreads must be >= 0");
  }
}

double absorption_probability(double concentration_uM,
                              double epsilon_per_M_um, double thickness_um) {
  if (concentration_uM < 0.0 || epsilon_per_M_um < 0.0 ||
      thickness_um < 0.0) {
    throw std::invalid_argument(
        "absorption_probability: arguments must be >= 0");
  }
  const double tau = concentration_uM * units::kMolarPerMicromolar *
                     epsilon_per_M_um * thickness_um;
  return -std::expm1(-tau);
}

std::optional<AbsorptionEvent> try_absorb(double x1_um,
                                          const FluorophoreMap& map,
                                          rng::Stream& rs) {
  const double half = 0.5 * map.extent_um;
  if (x1_um < -half || x1_um >= half) return std::nullopt;

  double x = x1_um;
  if (map.probe_scatter_prob > 0.0 && rs.bernoulli(map.probe_scatter_prob)) {
    x += rs.normal(0.0, map.probe_scatter_sigma_um);
  }
  const double p = absorption_probability(
      map.concentration_at(x), map.dye.epsilon_per_M_um, map.thickness_um);
  if (p <= 0.0) return std::nullopt;
  if (!rs.bernoulli(p)) return std::nullopt;
  return AbsorptionEvent{x};
}

double emission_delay(const DyeSpec& dye, rng::Stream& rs) {
  return rs.exponential(dye.lifetime_ns);
}

std::optional<FluorescencePhoton> fluorescence_emission(
    const FluorophoreMap& map, rng::Stream& rs) {
  if (!rs.bernoulli(map.dye.quantum_yield)) return std::nullopt;
  FluorescencePhoton ph;
  ph.emit_offset_ns = emission_delay(map.dye, rs);
  if (map.fluo_scatter_prob > 0.0 && rs.bernoulli(map.fluo_scatter_prob)) {
    ph.scattered = true;
    ph.extra_delay_ns = rs.exponential(map.fluo_scatter_delay_ns);
  }
  return ph;
}

namespace {

FluorophoreMap base_map(double extent_um, int cells) {
  if (cells <= 0) {
    throw std::invalid_argument("map builder: cell count must be positive");
  }
  FluorophoreMap map;
  map.extent_um = extent_um;
  map.concentration_uM.assign(static_cast<std::size_t>(cells), 0.0);
  return map;
}

}  // namespace

FluorophoreMap point_source_map(double extent_um, int cells, double x0_um,
                                double width_um, double concentration_uM) {
  FluorophoreMap map = base_map(extent_um, cells);
  const double w = map.cell_width_um();
  for (std::size_t i = 0; i < map.concentration_uM.size(); ++i) {
    const double xc = map.x_min_um() + (static_cast<double>(i) + 0.5) * w;
    if (std::fabs(xc - x0_um) <= 0.5 * width_um) {
      map.concentration_uM[i] = concentration_uM;
    }
  }
  return map;
}

FluorophoreMap two_point_map(double extent_um, int cells, double center_um,
                             double separation_um, double width_um,
                             double concentration_uM) {
  FluorophoreMap map = base_map(extent_um, cells);
  const double w = map.cell_width_um();
  const double x_a = center_um - 0.5 * separation_um;
  const double x_b = center_um + 0.5 * separation_um;
  for (std::size_t i = 0; i < map.concentration_uM.size(); ++i) {
    const double xc = map.x_min_um() + (static_cast<double>(i) + 0.5) * w;
    if (std::fabs(xc - x_a) <= 0.5 * width_um ||
        std::fabs(xc - x_b) <= 0.5 * width_um) {
      map.concentration_uM[i] = concentration_uM;
    }
  }
  return map;
}

FluorophoreMap uniform_slab_map(double extent_um, int cells,
                                double concentration_uM) {
  FluorophoreMap map = base_map(extent_um, cells);
  for (double& m : map.concentration_uM) m = concentration_uM;
  return map;
}

FluorophoreMap bar_pattern_map(double extent_um, int cells, double period_um,
                               double duty, double concentration_uM) {
  if (!(period_um > 0.0) || duty < 0.0 || duty > 1.0) {
    throw std::invalid_argument("bar_pattern_map: bad period or duty cycle");
  }
  FluorophoreMap map = base_map(extent_um, cells);
  const double w = map.cell_width_um();
  for (std::size_t i = 0; i < map.concentration_uM.size(); ++i) {
    const double xc = map.x_min_um() + (static_cast<double>(i) + 0.5) * w;
    double phase = std::fmod(xc - map.x_min_um(), period_um) / period_um;
    if (phase < duty) map.concentration_uM[i] = concentration_uM;
  }
  return map;
}

FluorophoreMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_map: cannot open " + path);
  }
  FluorophoreMap map;
  std::size_t points = 0;
  bool have_header = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (!have_header) {
      std::string tag;
      if (!(ls >> tag)) continue;  // blank line before header
      if (tag != "extent_um") {
        throw std::runtime_error("load_map: header must start with extent_um");
      }
      ls >> map.extent_um;
      std::string key;
      while (ls >> key) {
        double v = 0.0;
        if (!(ls >> v)) {
          throw std::runtime_error("load_map: header key without value: " + key);
        }
        if (key == "points") points = static_cast<std::size_t>(v);
        else if (key == "thickness_um") map.thickness_um = v;
        else if (key == "epsilon_per_M_um") map.dye.epsilon_per_M_um = v;
        else if (key == "quantum_yield") map.dye.quantum_yield = v;
        else if (key == "lifetime_ns") map.dye.lifetime_ns = v;
        else if (key == "peak_absorption_nm") map.dye.peak_absorption_nm = v;
        else throw std::runtime_error("load_map: unknown header key: " + key);
      }
      if (points == 0) {
        throw std::runtime_error("load_map: header must give points");
      }
      have_header = true;
      continue;
    }
    double v;
    while (ls >> v) map.concentration_uM.push_back(v);
  }
  if (!have_header) {
    throw std::runtime_error("load_map: missing header line in " + path);
  }
  if (map.concentration_uM.size() != points) {
    throw std::runtime_error(
        "load_map: expected " + std::to_string(points) + " concentrations, got " +
        std::to_string(map.concentration_uM.size()));
  }
  map.validate();
  return map;
}

void save_map(const std::string& path, const FluorophoreMap& map) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_map: cannot open " + path);
  }
  out << "extent_um " << map.extent_um << " points "
      << map.concentration_uM.size() << " thickness_um " << map.thickness_um
      << " epsilon_per_M_um " << map.dye.epsilon_per_M_um << " quantum_yield "
      << map.dye.quantum_yield << " lifetime_ns " << map.dye.lifetime_ns
      << " peak_absorption_nm " << map.dye.peak_absorption_nm << "\n";
  for (double m : map.concentration_uM) out << m << "\n";
  if (!out) {
    throw std::runtime_error("save_map: write failed for " + path);
  }
}

}  // namespace ghostsim::sample
