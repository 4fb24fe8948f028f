#pragma once

// End-to-end imaging runs: pair source -> two-arm ray trace -> sample
// interaction -> detectors -> windowed coincidences -> image. Also the
// reference-distance sweep that demonstrates remote focusing.

#include <cstdint>
#include <functional>
#include <vector>

#include "ghostsim/coincidence.hpp"
#include "ghostsim/core.hpp"
#include "ghostsim/detect.hpp"
#include "ghostsim/sample.hpp"
#include "ghostsim/source.hpp"

namespace ghostsim::pipeline {

/// Everything physical about one imaging experiment.
struct ImagingScene {
  source::SourceSpec source;
  core::OpticalLayout layout;
  sample::FluorophoreMap map;
  detect::BucketSpec bucket;
  detect::ArraySpec array;
  coinc::CoincidenceConfig window;
};

/// Run controls. Sinks and target_coincidences force single-threaded
/// execution; with workers > 1 the exposure is split into contiguous
/// block ranges that regenerate their boundary blocks, so totals are
/// statistically (not bitwise) equal to the serial run.
struct ImagingOptions {
  double exposure_s = 1.0;
  std::uint64_t target_coincidences = 0;  // when > 0, run until reached
  int workers = 1;
  std::uint64_t seed = 1;

  /// Sample a diffraction offset for each probe ray from the coincidence
  /// point-spread profile, so ray-traced images carry the physical width.
  bool diffraction_blur = true;
  double aperture_half_width_um = 50.0;
  /// Reject probe rays missing the objective aperture (off by default;
  /// the source spread usually underfills the aperture).
  bool aperture_clip = false;

  std::function<void(const core::PhotonPairEvent&)> event_sink;
  coinc::StreamingPairer::ClickSink click_sink;
};

struct ImagingResult {
  coinc::CoincidenceImage image;
  coinc::PairDiagnostics pair_diag;
  std::uint64_t pairs = 0;
  std::uint64_t probe_clipped = 0;
  std::uint64_t absorbed = 0;
  std::uint64_t fluorescence_photons = 0;
  std::uint64_t bucket_clicks = 0;  // physical + dark
  std::uint64_t array_clicks = 0;
  std::uint64_t bucket_dark_clicks = 0;
  std::uint64_t array_dark_clicks = 0;
  double exposure_s = 0.0;   // exposure actually simulated
  double blur_fwhm_um = 0.0; // width of the applied diffraction kernel
};

ImagingResult run_imaging(const ImagingScene& scene, const ImagingOptions& opt);

/// One point of the remote-focus sweep: conditional spread of the probe
/// position given the reference position (the rms residual about the
/// best linear predictor), at reference-arm distance b.
struct ScanPoint {
  double b_um = 0.0;
  double spread_um = 0.0;
};

struct ScanResult {
  std::vector<ScanPoint> points;
  std::size_t best_index = 0;
  double predicted_b_um = 0.0;  // from the imaging-condition inverse
  bool prediction_feasible = false;
};

/// Sweeps b over a uniform grid, n_events pairs per sweep (the same
/// pair stream is reused across b values).
ScanResult scan_reference_distance(const source::SourceSpec& src,
                                   const core::OpticalLayout& base,
                                   double b_min_um, double b_max_um, int steps,
                                   std::uint64_t n_events, std::uint64_t seed);

}  // namespace ghostsim::pipeline
