#include "ghostsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "ghostsim/coincidence.hpp"
#include "ghostsim/core.hpp"
#include "ghostsim/sample.hpp"

namespace ghostsim::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Flat INI store with per-key consumption tracking, so anything the
/// binder never asked for can be reported as a typo.
class Ini {
 public:
  static Ini parse(const std::string& text, const std::string& origin) {
    Ini ini;
    ini.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        ini.data_[section];  // a bare header is a valid (empty) section
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      }
      if (section.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
      }
      ini.data_[section][key] = Entry{value, false};
    }
    return ini;
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    const auto s = data_.find(section);
    if (s == data_.end()) return fallback;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    k->second.used = true;
    return k->second.value;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    if (!has(section, key)) return fallback;
    return to_double(section, key, get_string(section, key, ""));
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key, "");
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE) {
      throw ConfigError(where(section, key) + ": not an integer: '" + raw + "'");
    }
    return v;
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key, "");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE || raw.find('-') == 0) {
      throw ConfigError(where(section, key) + ": not an unsigned integer: '" + raw + "'");
    }
    return v;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    if (!has(section, key)) return fallback;
    std::string raw = get_string(section, key, "");
    std::transform(raw.begin(), raw.end(), raw.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError(where(section, key) + ": not a boolean: '" + raw + "'");
  }

  double to_double(const std::string& section, const std::string& key,
                   const std::string& raw) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0' || errno == ERANGE) {
      throw ConfigError(where(section, key) + ": not a number: '" + raw + "'");
    }
    return v;
  }

  std::string where(const std::string& section, const std::string& key) const {
    return origin_ + ": [" + section + "] " + key;
  }

  /// All keys in a section whose names begin with the given prefix.
  std::vector<std::string> keys_with_prefix(const std::string& section,
                                            const std::string& prefix) const {
    std::vector<std::string> out;
    const auto s = data_.find(section);
    if (s == data_.end()) return out;
    for (const auto& [k, v] : s->second) {
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
  }

  void reject_unconsumed(const std::vector<std::string>& known_sections) const {
    std::string bad;
    for (const auto& [sec, keys] : data_) {
      if (std::find(known_sections.begin(), known_sections.end(), sec) ==
          known_sections.end()) {
        bad += (bad.empty() ? "" : ", ") + ("[" + sec + "]");
        continue;
      }
      for (const auto& [key, entry] : keys) {
        if (!entry.used) bad += (bad.empty() ? "" : ", ") + ("[" + sec + "] " + key);
      }
    }
    if (!bad.empty()) throw ConfigError(origin_ + ": unknown config keys: " + bad);
  }

 private:
  struct Entry {
    std::string value;
    bool used = false;
  };
  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> data_;
};

sample::FluorophoreMap build_map(Ini& ini) {
  const std::string file = ini.get_string("sample", "map_file", "");
  sample::FluorophoreMap map;
  if (!file.empty()) {
    map = sample::load_map(file);
    // geometry and dye come from the file; scatter knobs still apply
  } else {
    const std::string object = ini.get_string("sample", "object", "point");
    const double extent = ini.get_double("sample", "extent_um", 400.0);
    const int cells = static_cast<int>(ini.get_int("sample", "cells", 200));
    const double m = ini.get_double("sample", "concentration_uM", 100.0);
    if (object == "point") {
      map = sample::point_source_map(extent, cells, ini.get_double("sample", "x0_um", 10.0),
                                     ini.get_double("sample", "width_um", 4.0), m);
    } else if (object == "two_point") {
      map = sample::two_point_map(extent, cells, ini.get_double("sample", "x0_um", 0.0),
                                  ini.get_double("sample", "separation_um", 30.0),
                                  ini.get_double("sample", "width_um", 4.0), m);
    } else if (object == "slab") {
      map = sample::uniform_slab_map(extent, cells, m);
    } else if (object == "bars") {
      map = sample::bar_pattern_map(extent, cells, ini.get_double("sample", "period_um", 50.0),
                                    ini.get_double("sample", "duty", 0.5), m);
    } else {
      throw ConfigError("[sample] object: unknown kind '" + object +
                        "' (point, two_point, slab, bars)");
    }
    map.thickness_um = ini.get_double("sample", "thickness_um", map.thickness_um);
    map.dye.epsilon_per_M_um =
        ini.get_double("sample", "epsilon_per_M_um", map.dye.epsilon_per_M_um);
    map.dye.quantum_yield = ini.get_double("sample", "quantum_yield", map.dye.quantum_yield);
    map.dye.lifetime_ns = ini.get_double("sample", "lifetime_ns", map.dye.lifetime_ns);
    map.dye.peak_absorption_nm =
        ini.get_double("sample", "peak_absorption_nm", map.dye.peak_absorption_nm);
  }
  map.probe_scatter_prob =
      ini.get_double("sample", "probe_scatter_prob", map.probe_scatter_prob);
  map.probe_scatter_sigma_um =
      ini.get_double("sample", "probe_scatter_sigma_um", map.probe_scatter_sigma_um);
  map.fluo_scatter_prob = ini.get_double("sample", "fluo_scatter_prob", map.fluo_scatter_prob);
  map.fluo_scatter_delay_ns =
      ini.get_double("sample", "fluo_scatter_delay_ns", map.fluo_scatter_delay_ns);
  return map;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "budget") return Mode::budget;
  if (name == "image") return Mode::image;
  if (name == "psf") return Mode::psf;
  if (name == "spectral") return Mode::spectral;
  if (name == "g2") return Mode::g2;
  if (name == "scan_b") return Mode::scan_b;
  throw ConfigError("unknown mode '" + name +
                    "' (budget, image, psf, spectral, g2, scan_b)");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::budget: return "budget";
    case Mode::image: return "image";
    case Mode::psf: return "psf";
    case Mode::spectral: return "spectral";
    case Mode::g2: return "g2";
    case Mode::scan_b: return "scan_b";
  }
  return "?";
}

ExperimentConfig default_config() { return parse_config_text("", "<defaults>"); }

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  Ini ini = Ini::parse(text, origin);
  ExperimentConfig cfg;

  cfg.mode = parse_mode(ini.get_string("run", "mode", "image"));
  cfg.run.seed = ini.get_u64("run", "seed", 1);
  cfg.run.exposure_s = ini.get_double("run", "exposure_s", 1.0);
  cfg.run.workers = static_cast<int>(ini.get_int("run", "workers", 1));
  cfg.run.target_coincidences = ini.get_u64("run", "target_coincidences", 0);
  cfg.run.diffraction_blur = ini.get_bool("run", "diffraction_blur", true);
  cfg.run.aperture_half_width_um = ini.get_double("run", "aperture_half_width_um", 50.0);
  cfg.run.aperture_clip = ini.get_bool("run", "aperture_clip", false);
  cfg.dump_events_path = ini.get_string("run", "dump_events", "");
  cfg.dump_clicks_path = ini.get_string("run", "dump_clicks", "");

  auto& src = cfg.scene.source;
  src.pair_rate_per_s = ini.get_double("source", "pair_rate_per_s", 4.0e6);
  src.pump_wavelength_nm = ini.get_double("source", "pump_wavelength_nm", 351.0);
  src.pump_waist_um = ini.get_double("source", "pump_waist_um", 50.0);
  src.angular_spread_rad = ini.get_double("source", "angular_spread_rad", 0.05);
  const std::string spectrum = ini.get_string("source", "spectrum", "monochromatic");
  if (spectrum == "monochromatic") {
    src.spectral.kind = source::SpectralModel::Kind::monochromatic;
  } else if (spectrum == "gaussian") {
    src.spectral.kind = source::SpectralModel::Kind::gaussian_bandwidth;
  } else {
    throw ConfigError("[source] spectrum: expected monochromatic or gaussian, got '" +
                      spectrum + "'");
  }
  src.spectral.lambda1_nm = ini.get_double("source", "lambda1_nm", 702.0);
  src.spectral.bandwidth_sigma_nm = ini.get_double("source", "bandwidth_sigma_nm", 0.0);

  cfg.scene.map = build_map(ini);

  auto& bucket = cfg.scene.bucket;
  bucket.efficiency = ini.get_double("bucket", "efficiency", 0.7);
  bucket.collection_efficiency = ini.get_double("bucket", "collection_efficiency", 0.5);
  bucket.jitter_fwhm_ns = ini.get_double("bucket", "jitter_fwhm_ns", 0.5);
  bucket.const_delay_ns = ini.get_double("bucket", "const_delay_ns", 0.0);
  bucket.dark_rate_per_s = ini.get_double("bucket", "dark_rate_per_s", 0.0);

  auto& array = cfg.scene.array;
  array.efficiency = ini.get_double("array", "efficiency", 0.7);
  array.jitter_fwhm_ns = ini.get_double("array", "jitter_fwhm_ns", 0.5);
  array.dead_time_ns = ini.get_double("array", "dead_time_ns", 50.0);
  array.pixel_pitch_um = ini.get_double("array", "pixel_pitch_um", 2.0);
  array.pixel_count = static_cast<int>(ini.get_int("array", "pixel_count", 100));
  const std::string offset = ini.get_string("array", "extent_offset_um", "auto");
  array.const_delay_ns = ini.get_double("array", "const_delay_ns", 0.0);
  array.dark_rate_per_s = ini.get_double("array", "dark_rate_per_s", 0.0);

  auto& layout = cfg.scene.layout;
  layout.pump_wavelength_nm = src.pump_wavelength_nm;
  layout.lambda1_nm = ini.get_double("layout", "lambda1_nm", src.spectral.lambda1_nm);
  const std::string lambda2 = ini.get_string("layout", "lambda2_nm", "auto");
  layout.lambda2_nm = lambda2 == "auto"
                          ? core::signal_wavelength(src.pump_wavelength_nm, layout.lambda1_nm)
                          : ini.to_double("layout", "lambda2_nm", lambda2);
  layout.a_um = ini.get_double("layout", "a_um", 1000.0);
  layout.f_obj_um = ini.get_double("layout", "f_obj_um", 1000.0);
  const std::string s1 = ini.get_string("layout", "s1_um", "2000");
  const std::string b = ini.get_string("layout", "b_um", "1000");
  if (s1 == "auto" && b == "auto") {
    throw ConfigError("[layout]: s1_um and b_um cannot both be auto");
  }
  if (b == "auto") {
    layout.s1_um = ini.to_double("layout", "s1_um", s1);
    const auto sol = optics::solve_reference_distance(layout.s1_um, layout.a_um,
                                                      layout.f_obj_um, layout.lambda1_nm,
                                                      layout.lambda2_nm);
    if (!sol.feasible) {
      throw ConfigError("[layout] b_um = auto: imaging condition needs a negative b");
    }
    layout.b_um = sol.b_um;
  } else if (s1 == "auto") {
    layout.b_um = ini.to_double("layout", "b_um", b);
    const auto sol = optics::solve_image_distance(layout.a_um, layout.b_um, layout.f_obj_um,
                                                  layout.lambda1_nm, layout.lambda2_nm);
    if (sol.virtual_image) {
      throw ConfigError("[layout] s1_um = auto: layout images virtually (s1 < 0)");
    }
    layout.s1_um = sol.s1_um;
  } else {
    layout.s1_um = ini.to_double("layout", "s1_um", s1);
    layout.b_um = ini.to_double("layout", "b_um", b);
  }
  const bool allow_defocus = ini.get_bool("layout", "allow_defocus", false);

  if (offset == "auto") {
    array.extent_offset_um = -0.5 * array.pixel_pitch_um * array.pixel_count;
  } else {
    array.extent_offset_um = ini.to_double("array", "extent_offset_um", offset);
  }

  auto& window = cfg.scene.window;
  window.window_ns = ini.get_double("coincidence", "window_ns", 10.0);
  const std::string policy = ini.get_string("coincidence", "policy", "discard_window");
  if (policy == "discard_window") {
    window.policy = coinc::AmbiguityPolicy::discard_window;
  } else if (policy == "keep_first") {
    window.policy = coinc::AmbiguityPolicy::keep_first;
  } else {
    throw ConfigError("[coincidence] policy: expected discard_window or keep_first, got '" +
                      policy + "'");
  }
  const std::string center = ini.get_string("coincidence", "window_center_ns", "auto");
  if (center == "auto") {
    const coinc::TimingModel timing{cfg.scene.map.dye.lifetime_ns, bucket.jitter_fwhm_ns,
                                    array.jitter_fwhm_ns};
    window.window_center_ns = coinc::optimal_window_center(timing, window.window_ns);
  } else {
    window.window_center_ns = ini.to_double("coincidence", "window_center_ns", center);
  }

  cfg.psf.x2_um = ini.get_double("psf", "x2_um", 20.0);
  cfg.psf.kernel.aperture_half_width_um =
      ini.get_double("psf", "aperture_half_width_um", cfg.run.aperture_half_width_um);
  cfg.psf.kernel.grid_extent_um = ini.get_double("psf", "grid_extent_um", 112.0);
  cfg.psf.kernel.grid_points = static_cast<int>(ini.get_int("psf", "grid_points", 129));
  cfg.psf.kernel.lambda1_nm = layout.lambda1_nm;
  cfg.psf.kernel.lambda2_nm = layout.lambda2_nm;

  cfg.g2.t_min_ns = ini.get_double("g2", "t_min_ns", -5.0);
  cfg.g2.t_max_ns = ini.get_double("g2", "t_max_ns", 15.0);
  cfg.g2.points = static_cast<int>(ini.get_int("g2", "points", 2001));
  if (cfg.g2.points < 2 || !(cfg.g2.t_max_ns > cfg.g2.t_min_ns)) {
    throw ConfigError("[g2]: need points >= 2 and t_max_ns > t_min_ns");
  }

  cfg.dispersion.center_wavelength_nm =
      ini.get_double("spectral", "center_wavelength_nm", src.spectral.lambda1_nm);
  cfg.dispersion.dispersion_um_per_nm =
      ini.get_double("spectral", "dispersion_um_per_nm", 10.0);
  cfg.dispersion.field_extent_um =
      ini.get_double("spectral", "field_extent_um", cfg.scene.map.extent_um);
  cfg.dispersion.spectrometer_resolution_nm =
      ini.get_double("spectral", "spectrometer_resolution_nm", 0.2);
  cfg.spectrometer.efficiency = ini.get_double("spectral", "spectrometer_efficiency", 0.7);
  cfg.spectrometer.jitter_fwhm_ns =
      ini.get_double("spectral", "spectrometer_jitter_fwhm_ns", 0.5);
  cfg.spectrometer.const_delay_ns =
      ini.get_double("spectral", "spectrometer_const_delay_ns", 0.0);
  cfg.spectral_bins = static_cast<int>(ini.get_int("spectral", "bins", 64));

  cfg.budget.counts_per_pixel = ini.get_double("budget", "counts_per_pixel", 100.0);
  cfg.budget.image_pixels = static_cast<int>(ini.get_int("budget", "image_pixels", 10000));
  if (ini.has("budget", "concentration_uM")) {
    cfg.budget.concentration_uM = ini.get_double("budget", "concentration_uM", 0.0);
  }
  for (const auto& key : ini.keys_with_prefix("budget", "expected_")) {
    cfg.budget.reference.emplace_back(key.substr(9), ini.get_double("budget", key, 0.0));
  }

  cfg.scan.b_min_um = ini.get_double("scan", "b_min_um", 500.0);
  cfg.scan.b_max_um = ini.get_double("scan", "b_max_um", 1500.0);
  cfg.scan.steps = static_cast<int>(ini.get_int("scan", "steps", 41));
  cfg.scan.events = ini.get_u64("scan", "events", 200000);

  ini.reject_unconsumed({"run", "source", "sample", "bucket", "array", "layout",
                         "coincidence", "psf", "g2", "spectral", "budget", "scan"});

  try {
    cfg.scene.source.validate();
    cfg.scene.map.validate();
    cfg.scene.bucket.validate();
    cfg.scene.array.validate();
    cfg.scene.layout.validate();
    cfg.scene.window.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (cfg.run.workers < 1) throw ConfigError("[run] workers must be >= 1");
  if (cfg.run.exposure_s < 0.0) throw ConfigError("[run] exposure_s must be >= 0");
  if (cfg.spectral_bins < 2) throw ConfigError("[spectral] bins must be >= 2");
  if (cfg.mode == Mode::image && !allow_defocus && !cfg.scene.layout.in_focus()) {
    throw ConfigError(origin +
                      ": layout violates the imaging condition; set [layout] s1_um or "
                      "b_um to auto, or allow_defocus = true");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace ghostsim::config
