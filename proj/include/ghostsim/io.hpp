#pragma once

// All file formats the simulator emits: PGM images, two-column profiles,
// key-value diagnostics, CSV event/click dumps, budget reports and the
// remote-focus sweep table. Formatting is locale-free and stable, so a
// rerun with the same seed produces byte-identical files.

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ghostsim/budget.hpp"
#include "ghostsim/coincidence.hpp"
#include "ghostsim/core.hpp"
#include "ghostsim/detect.hpp"
#include "ghostsim/pipeline.hpp"

namespace ghostsim::io {

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// P2 (ASCII) graymap, one row per image: counts min-max scaled to
/// [0, 65535]; a constant image maps to all zeros.
void write_pgm(const std::string& path, const coinc::CoincidenceImage& img);

/// Sidecar for the PGM: metadata header ('#' lines), then one line per
/// pixel: index, reference-plane center (um), reconstructed object
/// coordinate (um), raw count.
void write_image_counts(const std::string& path, const coinc::CoincidenceImage& img,
                        const core::OpticalLayout& layout);

/// key = value lines, in the given order.
void write_diagnostics(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& kv);

/// '#'-prefixed header lines, then two columns per row.
void write_profile(const std::string& path, const std::string& header,
                   const std::vector<double>& x, const std::vector<double>& y);

/// Budget report: every factor on its own line, with any caller-supplied
/// reference values echoed next to the computed numbers.
std::string budget_report(const budget::BudgetParams& params,
                          const budget::BudgetBreakdown& breakdown,
                          const budget::AcquisitionEstimate& acquisition,
                          double counts_per_pixel, int image_pixels,
                          double multi_pair_probability, double window_ns,
                          const std::vector<std::pair<std::string, double>>& reference);

/// b (um) vs conditional spread (um) table with the predicted optimum
/// in the header.
void write_scan_table(const std::string& path, const pipeline::ScanResult& scan);

/// CSV dump of generated pair events, one row per pair.
class EventCsvWriter {
 public:
  explicit EventCsvWriter(const std::string& path);
  void write(const core::PhotonPairEvent& ev);

 private:
  std::ofstream out_;
};

/// CSV dump of detector clicks in global time order; the bucket channel
/// reports pixel -1.
class ClickCsvWriter {
 public:
  explicit ClickCsvWriter(const std::string& path);
  void write(const detect::DetectionClick& click);

 private:
  std::ofstream out_;
};

}  // namespace ghostsim::io
