#include "ghostsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace ghostsim::io {

namespace {

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  // shortest round-trip representation, fixed or scientific
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

void write_pgm(const std::string& path, const coinc::CoincidenceImage& img) {
  auto out = open_or_throw(path);
  const std::size_t n = img.counts.size();
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (std::uint64_t c : img.counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (n == 0) lo = hi = 0;
  out << "P2\n" << n << " 1\n65535\n";
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = 0;
    if (hi > lo)
      v = static_cast<unsigned>(
          std::llround(65535.0 * static_cast<double>(img.counts[i] - lo) /
                       static_cast<double>(hi - lo)));
    out << v << (i + 1 == n ? '\n' : ' ');
  }
  if (n == 0) out << '\n';
  if (!out) throw std::runtime_error("io: write failed: " + path);
}

void write_image_counts(const std::string& path, const coinc::CoincidenceImage& img,
                        const core::OpticalLayout& layout) {
  auto out = open_or_throw(path);
  out << "# pixels = " << img.array.pixel_count << "\n";
  out << "# pixel_pitch_um = " << format_double(img.array.pixel_pitch_um) << "\n";
  out << "# exposure_s = " << format_double(img.exposure_s) << "\n";
  out << "# total_counts = " << img.total() << "\n";
  out << "# magnification = " << format_double(-layout.s1_um / layout.unfolded_distance_um())
      << "\n";
  out << "# columns: pixel reference_x_um object_x_um count\n";
  for (int p = 0; p < img.array.pixel_count; ++p) {
    out << p << ' ' << format_double(img.array.pixel_center_um(p)) << ' '
        << format_double(img.reconstructed_x_um(p, layout)) << ' '
        << img.counts[static_cast<std::size_t>(p)] << '\n';
  }
  if (!out) throw std::runtime_error("io: write failed: " + path);
}

void write_diagnostics(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_or_throw(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) throw std::runtime_error("io: write failed: " + path);
}

void write_profile(const std::string& path, const std::string& header,
                   const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("io: profile column size mismatch");
  auto out = open_or_throw(path);
  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << '\n';
  for (std::size_t i = 0; i < x.size(); ++i)
    out << format_double(x[i]) << ' ' << format_double(y[i]) << '\n';
  if (!out) throw std::runtime_error("io: write failed: " + path);
}

std::string budget_report(const budget::BudgetParams& params,
                          const budget::BudgetBreakdown& breakdown,
                          const budget::AcquisitionEstimate& acquisition,
                          double counts_per_pixel, int image_pixels,
                          double multi_pair_probability, double window_ns,
                          const std::vector<std::pair<std::string, double>>& reference) {
  std::ostringstream out;
  auto ref = [&](const std::string& key) -> std::string {
    for (const auto& [k, v] : reference)
      if (k == key) return "   (reference " + format_double(v) + ")";
    return "";
  };
  auto line = [&](const std::string& key, double v, const std::string& unit) {
    out << key << " = " << format_double(v);
    if (!unit.empty()) out << ' ' << unit;
    out << ref(key) << '\n';
  };
  out << "photon budget\n-------------\n";
  line("pair_rate_per_s", params.pair_rate_per_s, "1/s");
  line("concentration_uM", params.concentration_uM, "uM");
  line("epsilon_per_M_um", params.epsilon_per_M_um, "1/(M um)");
  line("thickness_um", params.thickness_um, "um");
  line("absorption_probability", breakdown.absorption_probability, "");
  line("absorbed_rate_per_s", breakdown.absorbed_rate_per_s, "1/s");
  line("quantum_yield", params.quantum_yield, "");
  line("fluorescence_rate_per_s", breakdown.fluorescence_rate_per_s, "1/s");
  line("collection_efficiency", params.collection_efficiency, "");
  line("collected_rate_per_s", breakdown.collected_rate_per_s, "1/s");
  line("bucket_efficiency", params.bucket_efficiency, "");
  line("array_efficiency", params.array_efficiency, "");
  line("coincidence_rate_per_s", breakdown.coincidence_rate_per_s, "1/s");
  out << '\n';
  line("window_ns", window_ns, "ns");
  line("multi_pair_window_probability", multi_pair_probability, "");
  out << '\n';
  line("counts_per_pixel", counts_per_pixel, "");
  line("image_pixels", static_cast<double>(image_pixels), "");
  if (acquisition.bounded) {
    line("per_pixel_s", acquisition.per_pixel_s, "s");
    line("total_s", acquisition.total_s, "s");
  } else {
    out << "per_pixel_s = unbounded (no coincidences at these settings)\n";
    out << "total_s = unbounded\n";
  }
  return out.str();
}

void write_scan_table(const std::string& path, const pipeline::ScanResult& scan) {
  auto out = open_or_throw(path);
  out << "# remote focus sweep: conditional probe spread vs reference arm length\n";
  if (scan.prediction_feasible)
    out << "# predicted_b_um = " << format_double(scan.predicted_b_um) << '\n';
  else
    out << "# predicted_b_um = none (imaging condition not reachable)\n";
  if (!scan.points.empty())
    out << "# best_b_um = " << format_double(scan.points[scan.best_index].b_um) << '\n';
  out << "# columns: b_um spread_um\n";
  for (const auto& p : scan.points)
    out << format_double(p.b_um) << ' ' << format_double(p.spread_um) << '\n';
  if (!out) throw std::runtime_error("io: write failed: " + path);
}

EventCsvWriter::EventCsvWriter(const std::string& path) : out_(open_or_throw(path)) {
  out_ << "birth_time_ns,birth_x_um,probe_angle_rad,reference_angle_rad,"
          "probe_wavelength_nm,reference_wavelength_nm\n";
}

void EventCsvWriter::write(const core::PhotonPairEvent& ev) {
  out_ << format_double(ev.birth_time_ns) << ',' << format_double(ev.birth_x_um) << ','
       << format_double(ev.theta1_rad) << ',' << format_double(ev.theta2_rad) << ','
       << format_double(ev.lambda1_nm) << ',' << format_double(ev.lambda2_nm) << '\n';
}

ClickCsvWriter::ClickCsvWriter(const std::string& path) : out_(open_or_throw(path)) {
  out_ << "channel,pixel,timestamp_ns\n";
}

void ClickCsvWriter::write(const detect::DetectionClick& click) {
  const bool bucket = click.pixel == detect::kBucketChannel;
  out_ << (bucket ? "bucket" : "array") << ',' << click.pixel << ','
       << format_double(click.t_ns) << '\n';
}

}  // namespace ghostsim::io
