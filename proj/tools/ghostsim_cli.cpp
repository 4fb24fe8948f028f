// Command-line front end. One experiment description (INI file or the
// builtin defaults), one mode, one output directory. Exit codes:
//   0  success
//   2  bad command line or bad configuration
//   3  runtime failure (filesystem, numerical preconditions)

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ghostsim/budget.hpp"
#include "ghostsim/coincidence.hpp"
#include "ghostsim/config.hpp"
#include "ghostsim/io.hpp"
#include "ghostsim/optics.hpp"
#include "ghostsim/pipeline.hpp"
#include "ghostsim/source.hpp"
#include "ghostsim/spectral.hpp"
#include "ghostsim/stats.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ghostsim;

using KvList = std::vector<std::pair<std::string, std::string>>;

std::string joined(const fs::path& dir, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return p.string();
  return (dir / p).string();
}

void add(KvList& kv, const std::string& key, const std::string& value) {
  kv.emplace_back(key, value);
}
void add(KvList& kv, const std::string& key, double value) {
  kv.emplace_back(key, io::format_double(value));
}
void add(KvList& kv, const std::string& key, std::uint64_t value) {
  kv.emplace_back(key, std::to_string(value));
}

int run_budget(const config::ExperimentConfig& cfg, const fs::path& out) {
  budget::BudgetParams bp;
  bp.pair_rate_per_s = cfg.scene.source.pair_rate_per_s;
  if (std::isnan(cfg.budget.concentration_uM)) {
    double peak = 0.0;
    for (double c : cfg.scene.map.concentration_uM) peak = std::max(peak, c);
    bp.concentration_uM = peak;
  } else {
    bp.concentration_uM = cfg.budget.concentration_uM;
  }
  bp.epsilon_per_M_um = cfg.scene.map.dye.epsilon_per_M_um;
  bp.thickness_um = cfg.scene.map.thickness_um;
  bp.quantum_yield = cfg.scene.map.dye.quantum_yield;
  bp.collection_efficiency = cfg.scene.bucket.collection_efficiency;
  bp.bucket_efficiency = cfg.scene.bucket.efficiency;
  bp.array_efficiency = cfg.scene.array.efficiency;

  const auto breakdown = budget::photon_budget(bp);
  const auto acq = budget::acquisition_time(breakdown.coincidence_rate_per_s,
                                            cfg.budget.counts_per_pixel,
                                            cfg.budget.image_pixels);
  const double mp = source::multi_pair_probability(bp.pair_rate_per_s,
                                                   cfg.scene.window.window_ns);
  const std::string report =
      io::budget_report(bp, breakdown, acq, cfg.budget.counts_per_pixel,
                        cfg.budget.image_pixels, mp, cfg.scene.window.window_ns,
                        cfg.budget.reference);

  const std::string path = joined(out, "budget.txt");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << report;
  std::cout << report;
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_image(const config::ExperimentConfig& cfg, const fs::path& out) {
  pipeline::ImagingOptions opt = cfg.run;

  std::unique_ptr<io::EventCsvWriter> events;
  std::unique_ptr<io::ClickCsvWriter> clicks;
  if (!cfg.dump_events_path.empty()) {
    events = std::make_unique<io::EventCsvWriter>(joined(out, cfg.dump_events_path));
    opt.event_sink = [&events](const core::PhotonPairEvent& ev) { events->write(ev); };
  }
  if (!cfg.dump_clicks_path.empty()) {
    clicks = std::make_unique<io::ClickCsvWriter>(joined(out, cfg.dump_clicks_path));
    opt.click_sink = [&clicks](const detect::DetectionClick& c) { clicks->write(c); };
  }

  const auto res = pipeline::run_imaging(cfg.scene, opt);

  io::write_pgm(joined(out, "image.pgm"), res.image);
  io::write_image_counts(joined(out, "image_counts.txt"), res.image, cfg.scene.layout);

  KvList kv;
  add(kv, "mode", std::string("image"));
  add(kv, "seed", static_cast<std::uint64_t>(opt.seed));
  add(kv, "workers", static_cast<std::uint64_t>(opt.workers));
  add(kv, "exposure_s", res.exposure_s);
  add(kv, "pairs_generated", res.pairs);
  add(kv, "probe_clipped", res.probe_clipped);
  add(kv, "absorbed", res.absorbed);
  add(kv, "fluorescence_photons", res.fluorescence_photons);
  add(kv, "bucket_clicks", res.bucket_clicks);
  add(kv, "array_clicks", res.array_clicks);
  add(kv, "bucket_dark_clicks", res.bucket_dark_clicks);
  add(kv, "array_dark_clicks", res.array_dark_clicks);
  add(kv, "coincidences", res.image.total());
  add(kv, "ambiguous_windows", res.pair_diag.ambiguous_windows);
  add(kv, "unpaired_buckets", res.pair_diag.unpaired_buckets);
  add(kv, "window_ns", cfg.scene.window.window_ns);
  add(kv, "window_center_ns", cfg.scene.window.window_center_ns);
  add(kv, "diffraction_blur_fwhm_um", res.blur_fwhm_um);
  add(kv, "magnification",
      -cfg.scene.layout.s1_um / cfg.scene.layout.unfolded_distance_um());
  const std::uint64_t total = res.image.total();
  if (total < 100) {
    add(kv, "warning",
        std::string("under-sampled image: only ") + std::to_string(total) +
            " coincidences; increase exposure or rates");
    std::cerr << "warning: under-sampled image (" << total << " coincidences)\n";
  }
  io::write_diagnostics(joined(out, "diagnostics.txt"), kv);

  std::cout << "coincidences: " << total << " over " << io::format_double(res.exposure_s)
            << " s simulated\n";
  std::cout << "wrote " << joined(out, "image.pgm") << ", " << joined(out, "image_counts.txt")
            << ", " << joined(out, "diagnostics.txt") << "\n";
  return 0;
}

int run_psf(const config::ExperimentConfig& cfg, const fs::path& out) {
  const auto prof = optics::biphoton_psf_1d(cfg.scene.layout, cfg.psf.kernel, cfg.psf.x2_um);

  double peak = stats::peak_location(prof.x_um, prof.intensity);
  double width = std::numeric_limits<double>::quiet_NaN();
  try {
    width = stats::fwhm(prof.x_um, prof.intensity);
  } catch (const std::exception&) {
    // grid too narrow for half-max crossings; leave nan
  }

  std::string header = "coincidence point-spread profile at fixed reference position\n";
  header += "x2_um = " + io::format_double(cfg.psf.x2_um) + "\n";
  header += "conjugate_x_um = " +
            io::format_double(optics::conjugate_map(cfg.psf.x2_um, cfg.scene.layout)) + "\n";
  header += "lambda1_nm = " + io::format_double(cfg.psf.kernel.lambda1_nm) +
            ", lambda2_nm = " + io::format_double(cfg.psf.kernel.lambda2_nm) + "\n";
  header += "aperture_half_width_um = " +
            io::format_double(cfg.psf.kernel.aperture_half_width_um) + "\n";
  header += "peak_x_um = " + io::format_double(peak) + "\n";
  header += "fwhm_um = " + io::format_double(width) + "\n";
  header += "columns: x1_um intensity";

  const std::string path = joined(out, "psf_profile.txt");
  io::write_profile(path, header, prof.x_um, prof.intensity);
  std::cout << "psf peak at " << io::format_double(peak) << " um, fwhm "
            << io::format_double(width) << " um\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_spectral(const config::ExperimentConfig& cfg, const fs::path& out) {
  spectral::SpectralScanOptions opt;
  opt.exposure_s = cfg.run.exposure_s;
  opt.target_coincidences = cfg.run.target_coincidences;
  opt.seed = cfg.run.seed;
  opt.bins = cfg.spectral_bins;
  opt.window = cfg.scene.window;

  const auto res = spectral::simulate_spectral_scan(cfg.scene.source, cfg.dispersion,
                                                    cfg.scene.map, cfg.scene.bucket,
                                                    cfg.spectrometer, opt);

  std::vector<double> counts(res.counts.size());
  for (std::size_t i = 0; i < res.counts.size(); ++i)
    counts[i] = static_cast<double>(res.counts[i]);

  std::string header = "spectrally encoded scan: coincidences vs inferred probe position\n";
  header += "center_wavelength_nm = " +
            io::format_double(cfg.dispersion.center_wavelength_nm) + "\n";
  header += "dispersion_um_per_nm = " +
            io::format_double(cfg.dispersion.dispersion_um_per_nm) + "\n";
  header += "field_extent_um = " + io::format_double(cfg.dispersion.field_extent_um) + "\n";
  header += "columns: inferred_x_um coincidences";
  io::write_profile(joined(out, "spectral_profile.txt"), header, res.bin_center_um, counts);

  KvList kv;
  add(kv, "mode", std::string("spectral"));
  add(kv, "seed", static_cast<std::uint64_t>(opt.seed));
  add(kv, "exposure_s", res.exposure_s);
  add(kv, "pairs_generated", res.pairs);
  add(kv, "out_of_band", res.out_of_band);
  add(kv, "bucket_clicks", res.bucket_clicks);
  add(kv, "reference_clicks", res.reference_clicks);
  add(kv, "coincidences", res.coincidences);
  add(kv, "ambiguous_windows", res.ambiguous_windows);
  add(kv, "off_scale", res.off_scale);
  add(kv, "spectrometer_resolution_nm", cfg.dispersion.spectrometer_resolution_nm);
  if (res.coincidences < 100) {
    add(kv, "warning",
        std::string("under-sampled scan: only ") + std::to_string(res.coincidences) +
            " coincidences; increase exposure or rates");
    std::cerr << "warning: under-sampled scan (" << res.coincidences << " coincidences)\n";
  }
  io::write_diagnostics(joined(out, "spectral_diagnostics.txt"), kv);

  std::cout << "coincidences: " << res.coincidences << " over "
            << io::format_double(res.exposure_s) << " s simulated\n";
  std::cout << "wrote " << joined(out, "spectral_profile.txt") << ", "
            << joined(out, "spectral_diagnostics.txt") << "\n";
  return 0;
}

int run_g2(const config::ExperimentConfig& cfg, const fs::path& out) {
  coinc::TimingModel model;
  model.lifetime_ns = cfg.scene.map.dye.lifetime_ns;
  model.bucket_jitter_fwhm_ns = cfg.scene.bucket.jitter_fwhm_ns;
  model.array_jitter_fwhm_ns = cfg.scene.array.jitter_fwhm_ns;

  const int n = cfg.g2.points;
  std::vector<double> t(static_cast<std::size_t>(n)), f(static_cast<std::size_t>(n));
  const double dt = (cfg.g2.t_max_ns - cfg.g2.t_min_ns) / (n - 1);
  for (int i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = cfg.g2.t_min_ns + dt * i;
    f[static_cast<std::size_t>(i)] = coinc::broadened_g2(t[static_cast<std::size_t>(i)], model);
  }

  const double T = cfg.scene.window.window_ns;
  const auto best = coinc::window_capture_fraction(model, T);
  const double c = cfg.scene.window.window_center_ns;
  const double configured = coinc::broadened_g2_cdf(c + T / 2, model) -
                            coinc::broadened_g2_cdf(c - T / 2, model);

  std::string header = "coincidence delay density: exponential decay blurred by detector jitter\n";
  header += "lifetime_ns = " + io::format_double(model.lifetime_ns) + "\n";
  header += "jitter_sigma_ns = " + io::format_double(model.sigma_ns()) + "\n";
  header += "window_ns = " + io::format_double(T) + "\n";
  header += "window_center_ns = " + io::format_double(c) + "\n";
  header += "capture_fraction = " + io::format_double(configured) + "\n";
  header += "optimal_center_ns = " + io::format_double(best.start_ns + T / 2) + "\n";
  header += "optimal_capture_fraction = " + io::format_double(best.capture_fraction) + "\n";
  header += "columns: delay_ns density_per_ns";

  const std::string path = joined(out, "g2_curve.txt");
  io::write_profile(path, header, t, f);
  std::cout << "capture fraction " << io::format_double(configured) << " in a "
            << io::format_double(T) << " ns window centered at " << io::format_double(c)
            << " ns\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_scan(const config::ExperimentConfig& cfg, const fs::path& out) {
  const auto res = pipeline::scan_reference_distance(
      cfg.scene.source, cfg.scene.layout, cfg.scan.b_min_um, cfg.scan.b_max_um,
      cfg.scan.steps, cfg.scan.events, cfg.run.seed);
  const std::string path = joined(out, "scan_b.txt");
  io::write_scan_table(path, res);
  std::cout << "sharpest focus at b = "
            << io::format_double(res.points[res.best_index].b_um) << " um";
  if (res.prediction_feasible)
    std::cout << " (predicted " << io::format_double(res.predicted_b_um) << " um)";
  std::cout << "\nwrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ghostsim: coincidence fluorescence imaging with entangled photon pairs.\n"
      "Modes: budget, image, psf, spectral, g2, scan_b. The mode comes from the\n"
      "subcommand, or from the config file's [run] mode when no subcommand is given."};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 0;
  double exposure = -1.0;
  std::uint64_t target = 0;

  app.add_option("-c,--config", config_path, "experiment description (INI)");
  app.add_option("-o,--out", out_dir, "output directory, created if missing")
      ->capture_default_str();
  auto* seed_opt = app.add_option("-s,--seed", seed, "override the config seed");
  auto* workers_opt = app.add_option("-w,--workers", workers, "override worker count");
  auto* exposure_opt =
      app.add_option("-e,--exposure", exposure, "override exposure seconds");
  auto* target_opt = app.add_option(
      "-t,--target", target, "stop after this many coincidences (forces one worker)");

  app.add_subcommand("budget", "analytic photon budget and acquisition time")->fallthrough();
  app.add_subcommand("image", "Monte Carlo coincidence image")->fallthrough();
  app.add_subcommand("psf", "diffraction point-spread profile by quadrature")->fallthrough();
  app.add_subcommand("spectral", "spectrally encoded scan (no scanning optics)")->fallthrough();
  app.add_subcommand("g2", "coincidence delay density and window capture")->fallthrough();
  app.add_subcommand("scan_b", "remote focus sweep over the reference arm length")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  config::ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? config::default_config() : config::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (*seed_opt) cfg.run.seed = seed;
  if (*workers_opt) {
    if (workers < 1) {
      std::cerr << "config error: workers must be >= 1\n";
      return 2;
    }
    cfg.run.workers = workers;
  }
  if (*exposure_opt) {
    if (!(exposure >= 0.0)) {
      std::cerr << "config error: exposure must be >= 0\n";
      return 2;
    }
    cfg.run.exposure_s = exposure;
  }
  if (*target_opt) cfg.run.target_coincidences = target;

  const auto subs = app.get_subcommands();
  config::Mode mode = cfg.mode;
  if (!subs.empty()) {
    try {
      mode = config::parse_mode(subs.front()->get_name());
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    const fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir);

    switch (mode) {
      case config::Mode::budget:
        return run_budget(cfg, out);
      case config::Mode::image:
        return run_image(cfg, out);
      case config::Mode::psf:
        return run_psf(cfg, out);
      case config::Mode::spectral:
        return run_spectral(cfg, out);
      case config::Mode::g2:
        return run_g2(cfg, out);
      case config::Mode::scan_b:
        return run_scan(cfg, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
