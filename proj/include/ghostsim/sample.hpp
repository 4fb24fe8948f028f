#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ghostsim/rng.hpp"

namespace ghostsim::sample {

struct DyeSpec {
  double epsilon_per_M_um = 20.0;   // molar extinction, 1/(M um)
  double quantum_yield = 0.25;
  double lifetime_ns = 1.0;
  double peak_absorption_nm = 700.0;
};

/// @brief 1-D fluorophore concentration map across the sample plane.
///
/// Piecewise-constant concentration over a uniform grid spanning
/// [-extent/2, +extent/2], zero outside. Thickness is the optical path
/// used by the absorption law. Scattering knobs describe the embedding
/// medium: probe scattering displaces the excitation position before
/// the concentration lookup, fluorescence scattering only delays the
/// emitted photon.
struct FluorophoreMap {
  double extent_um = 400.0;
  double thickness_um = 20.0;
  DyeSpec dye;
  double probe_scatter_prob = 0.0;
  double probe_scatter_sigma_um = 0.0;
  double fluo_scatter_prob = 0.0;
  double fluo_scatter_delay_ns = 1.0;
  std::vector<double> concentration_uM;

  double cell_width_um() const {
    return extent_um / static_cast<double>(concentration_uM.size());
  }
  double x_min_um() const { return -0.5 * extent_um; }

  /// Concentration of the cell containing x, zero outside the grid.
  double concentration_at(double x_um) const;

  void validate() const;
};

/// Beer-Lambert absorption probability 1 - exp(-m eps L), with m in uM.
double absorption_probability(double concentration_uM,
                              double epsilon_per_M_um, double thickness_um);

struct AbsorptionEvent {
  double x_um = 0.0;  // where the excitation landed
};

/// One probe photon meets the sample. Probe scattering fires first
/// (probability probe_scatter_prob) and displaces the position by
/// Normal(0, sigma) before the concentration lookup. Positions outside
/// the grid pass through. Draw order: scatter gate, displacement,
/// absorption gate.
std::optional<AbsorptionEvent> try_absorb(double x1_um,
                                          const FluorophoreMap& map,
                                          rng::Stream& rs);

/// Exponential emission delay with mean lifetime_ns.
double emission_delay(const DyeSpec& dye, rng::Stream& rs);

/// @brief Fluorescence photon emitted into 4 pi.
///
/// Deliberately carries no transverse coordinate: the bucket detector
/// never learns where the emission happened, so nothing downstream can
/// depend on it.
struct FluorescencePhoton {
  double emit_offset_ns = 0.0;   // exponential emission delay
  double extra_delay_ns = 0.0;   // added path delay if scattered
  bool scattered = false;
};

/// Emission with probability quantum_yield; nullopt on non-radiative
/// decay. Fluorescence scattering (probability fluo_scatter_prob) adds
/// an exponential extra delay of mean fluo_scatter_delay_ns and never
/// touches anything but time. Draw order: yield gate, emission delay,
/// scatter gate, extra delay.
std::optional<FluorescencePhoton> fluorescence_emission(
    const FluorophoreMap& map, rng::Stream& rs);

/// Builtin test objects. All return a map centered on the axis.
FluorophoreMap point_source_map(double extent_um, int cells, double x0_um,
                                double width_um, double concentration_uM);
FluorophoreMap two_point_map(double extent_um, int cells, double center_um,
                             double separation_um, double width_um,
                             double concentration_uM);
FluorophoreMap uniform_slab_map(double extent_um, int cells,
                                double concentration_uM);
FluorophoreMap bar_pattern_map(double extent_um, int cells, double period_um,
                               double duty, double concentration_uM);

/// Text map format: a header line
///   extent_um <v> points <n> thickness_um <v> epsilon_per_M_um <v>
///   quantum_yield <v> lifetime_ns <v> peak_absorption_nm <v>
/// followed by one concentration (uM) per line. '#' starts a comment.
FluorophoreMap load_map(const std::string& path);
void save_map(const std::string& path, const FluorophoreMap& map);

}  // namespace ghostsim::sample
