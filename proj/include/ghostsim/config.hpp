#pragma once

// Experiment configuration: flat INI-style text ([section], key = value,
// '#' comments) bound to the simulator's spec structs, with unknown-key
// rejection and cross-field consistency checks.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ghostsim/optics.hpp"
#include "ghostsim/pipeline.hpp"
#include "ghostsim/spectral.hpp"

namespace ghostsim::config {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Mode { budget, image, psf, spectral, g2, scan_b };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct PsfJob {
  double x2_um = 20.0;
  optics::FresnelKernelSpec kernel;
};

struct G2Job {
  double t_min_ns = -5.0;
  double t_max_ns = 15.0;
  int points = 2001;
};

struct BudgetJob {
  double counts_per_pixel = 100.0;
  int image_pixels = 10000;
  // NaN means "use the peak concentration of the sample map".
  double concentration_uM = std::numeric_limits<double>::quiet_NaN();
  // expected_* keys, echoed next to the computed values in the report.
  std::vector<std::pair<std::string, double>> reference;
};

struct ScanJob {
  double b_min_um = 500.0;
  double b_max_um = 1500.0;
  int steps = 41;
  std::uint64_t events = 200000;
};

struct ExperimentConfig {
  Mode mode = Mode::image;
  pipeline::ImagingScene scene;
  pipeline::ImagingOptions run;  // sinks stay empty; the CLI wires dumps
  std::string dump_events_path;
  std::string dump_clicks_path;
  PsfJob psf;
  G2Job g2;
  spectral::DispersionSpec dispersion;
  spectral::SpectrometerSpec spectrometer;
  int spectral_bins = 64;
  BudgetJob budget;
  ScanJob scan;
};

/// The configuration an empty file yields: degenerate 702/702 pairs at
/// 4e6 pairs/s, the 1:1 a=b=f=1 mm layout, a 4 um point object at
/// x0 = 10 um, and 70% efficient detectors with 0.5 ns FWHM jitter.
ExperimentConfig default_config();

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

}  // namespace ghostsim::config
