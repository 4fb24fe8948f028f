#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "ghostsim/coincidence.hpp"
#include "ghostsim/pipeline.hpp"
#include "ghostsim/stats.hpp"

using namespace ghostsim;

namespace {

// lossless slab geometry: every probe sees the dye, every reference
// photon lands on the array, so the analytic budget chain applies
pipeline::ImagingScene slab_scene() {
  pipeline::ImagingScene scene;
  scene.map = sample::uniform_slab_map(1200.0, 120, 100.0);
  scene.array.pixel_count = 400;
  scene.array.extent_offset_um = -400.0;
  scene.array.dead_time_ns = 0.0;
  scene.window.policy = coinc::AmbiguityPolicy::keep_first;
  coinc::TimingModel model;
  scene.window.window_center_ns = coinc::optimal_window_center(model, 10.0);
  return scene;
}

// bright point object for resolution tests
pipeline::ImagingScene point_scene() {
  pipeline::ImagingScene scene;
  scene.map = sample::point_source_map(400.0, 200, 10.0, 4.0, 2000.0);
  scene.map.dye.quantum_yield = 1.0;
  scene.bucket.efficiency = 1.0;
  scene.bucket.collection_efficiency = 1.0;
  scene.array.efficiency = 1.0;
  scene.array.dead_time_ns = 0.0;
  scene.window.policy = coinc::AmbiguityPolicy::keep_first;
  coinc::TimingModel model;
  scene.window.window_center_ns = coinc::optimal_window_center(model, 10.0);
  return scene;
}

std::vector<double> pixel_axis(const detect::ArraySpec& array) {
  std::vector<double> x(static_cast<std::size_t>(array.pixel_count));
  for (int p = 0; p < array.pixel_count; ++p) {
    x[static_cast<std::size_t>(p)] = array.pixel_center_um(p);
  }
  return x;
}

std::vector<double> counts_as_double(const coinc::CoincidenceImage& img) {
  std::vector<double> y(img.counts.size());
  for (std::size_t i = 0; i < img.counts.size(); ++i) {
    y[i] = static_cast<double>(img.counts[i]);
  }
  return y;
}

}  // namespace

TEST_CASE("slab image rate matches the analytic budget within 3 sigma") {
  const auto scene = slab_scene();
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.5;
  opt.seed = 101;

  const auto res = pipeline::run_imaging(scene, opt);

  // 4e6 * 0.0392 * 0.25 * 0.5 * 0.7 * 0.7 / s, times the window capture
  coinc::TimingModel model;
  const double capture =
      coinc::window_capture_fraction(model, scene.window.window_ns).capture_fraction;
  const double expected = 9606.587407680821 * opt.exposure_s * capture;
  const double n = static_cast<double>(res.image.total());
  CHECK(std::fabs(n - expected) < 3.0 * std::sqrt(expected));

  // intermediate counters follow the same chain
  const double p_abs = 0.03921056084767682;
  const double pairs = static_cast<double>(res.pairs);
  CHECK(std::fabs(static_cast<double>(res.absorbed) - pairs * p_abs) <
        3.0 * std::sqrt(pairs * p_abs));
  const double fl = pairs * p_abs * 0.25;
  CHECK(std::fabs(static_cast<double>(res.fluorescence_photons) - fl) <
        3.0 * std::sqrt(fl));
  CHECK(res.bucket_dark_clicks == 0);
  CHECK(res.array_dark_clicks == 0);
}

TEST_CASE("point object images at the conjugate position with the diffraction width") {
  const auto scene = point_scene();
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.5;
  opt.seed = 103;

  const auto res = pipeline::run_imaging(scene, opt);
  REQUIRE(res.image.total() > 20000);
  CHECK(res.blur_fwhm_um > 10.0);
  CHECK(res.blur_fwhm_um < 15.0);

  // centroid on the reconstructed object axis sits on the dye
  std::vector<double> xr(static_cast<std::size_t>(scene.array.pixel_count));
  for (int p = 0; p < scene.array.pixel_count; ++p) {
    xr[static_cast<std::size_t>(p)] = res.image.reconstructed_x_um(p, scene.layout);
  }
  const auto y = counts_as_double(res.image);
  CHECK(stats::centroid(xr, y) == doctest::Approx(10.0).epsilon(0.1));

  // image width = blur kernel plus small object and pixel contributions
  const auto xp = pixel_axis(scene.array);
  const double width = stats::fwhm(xp, y);
  CHECK(width > 0.95 * res.blur_fwhm_um);
  CHECK(width < 1.15 * res.blur_fwhm_um);
}

TEST_CASE("same seed gives identical results, different seed does not") {
  const auto scene = point_scene();
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.05;
  opt.seed = 7;
  const auto a = pipeline::run_imaging(scene, opt);
  const auto b = pipeline::run_imaging(scene, opt);
  REQUIRE(a.image.counts.size() == b.image.counts.size());
  for (std::size_t i = 0; i < a.image.counts.size(); ++i) {
    CHECK(a.image.counts[i] == b.image.counts[i]);
  }
  CHECK(a.pairs == b.pairs);
  CHECK(a.bucket_clicks == b.bucket_clicks);
  CHECK(a.array_clicks == b.array_clicks);
  CHECK(a.pair_diag.ambiguous_windows == b.pair_diag.ambiguous_windows);

  opt.seed = 8;
  const auto c = pipeline::run_imaging(scene, opt);
  CHECK(c.pairs != a.pairs);
}

TEST_CASE("parallel run equals the serial run exactly when dead time is off") {
  auto scene = point_scene();  // dead_time 0 already
  pipeline::ImagingOptions serial;
  serial.exposure_s = 0.2;
  serial.seed = 31;
  serial.workers = 1;
  auto parallel = serial;
  parallel.workers = 5;

  const auto s = pipeline::run_imaging(scene, serial);
  const auto p = pipeline::run_imaging(scene, parallel);

  CHECK(s.pairs == p.pairs);
  CHECK(s.bucket_clicks == p.bucket_clicks);
  CHECK(s.array_clicks == p.array_clicks);
  CHECK(s.image.total() == p.image.total());
  CHECK(s.pair_diag.ambiguous_windows == p.pair_diag.ambiguous_windows);
  CHECK(s.pair_diag.unpaired_buckets == p.pair_diag.unpaired_buckets);
  REQUIRE(s.image.counts.size() == p.image.counts.size());
  for (std::size_t i = 0; i < s.image.counts.size(); ++i) {
    CHECK(s.image.counts[i] == p.image.counts[i]);
  }
}

TEST_CASE("parallel run with dead time stays within Poisson error of serial") {
  pipeline::ImagingScene scene = slab_scene();
  scene.array.dead_time_ns = 50.0;
  pipeline::ImagingOptions serial;
  serial.exposure_s = 0.3;
  serial.seed = 33;
  auto parallel = serial;
  parallel.workers = 4;

  const auto s = pipeline::run_imaging(scene, serial);
  const auto p = pipeline::run_imaging(scene, parallel);
  CHECK(s.pairs == p.pairs);
  const double n = static_cast<double>(s.image.total());
  CHECK(std::fabs(static_cast<double>(p.image.total()) - n) <=
        3.0 * std::sqrt(std::max(n, 1.0)));
}

TEST_CASE("event and click sinks observe the full stream in order") {
  auto scene = point_scene();
  scene.bucket.dark_rate_per_s = 5000.0;
  scene.array.dark_rate_per_s = 20.0;
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.05;
  opt.seed = 41;

  std::uint64_t events = 0;
  std::vector<double> click_times;
  std::uint64_t bucket_seen = 0;
  opt.event_sink = [&](const core::PhotonPairEvent&) { ++events; };
  opt.click_sink = [&](const detect::DetectionClick& c) {
    click_times.push_back(c.t_ns);
    if (c.pixel == detect::kBucketChannel) ++bucket_seen;
  };

  const auto res = pipeline::run_imaging(scene, opt);
  CHECK(events == res.pairs);
  CHECK(click_times.size() == res.bucket_clicks + res.array_clicks);
  CHECK(bucket_seen == res.bucket_clicks);
  CHECK(res.bucket_dark_clicks > 0);
  CHECK(res.array_dark_clicks > 0);
  for (std::size_t i = 1; i < click_times.size(); ++i) {
    CHECK(click_times[i] >= click_times[i - 1]);
  }
}

TEST_CASE("dark counts scale with rate and only darks pair when yield is zero") {
  pipeline::ImagingScene scene;
  scene.map = sample::uniform_slab_map(400.0, 200, 100.0);
  scene.map.dye.quantum_yield = 0.0;
  scene.bucket.dark_rate_per_s = 20000.0;
  scene.array.efficiency = 0.0;  // reference arm dark-only as well
  scene.array.dark_rate_per_s = 2000.0;
  scene.array.dead_time_ns = 0.0;
  scene.window.policy = coinc::AmbiguityPolicy::keep_first;
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.5;
  opt.seed = 51;

  const auto res = pipeline::run_imaging(scene, opt);
  const double eb = 20000.0 * 0.5;
  const double ea = 2000.0 * 100 * 0.5;
  CHECK(std::fabs(static_cast<double>(res.bucket_dark_clicks) - eb) < 3.0 * std::sqrt(eb));
  CHECK(std::fabs(static_cast<double>(res.array_dark_clicks) - ea) < 3.0 * std::sqrt(ea));
  CHECK(res.bucket_clicks == res.bucket_dark_clicks);
  CHECK(res.array_clicks == res.array_dark_clicks);

  // accidental pairing law: P(partner) = 1 - exp(-rate_array * T)
  const double mu = 2000.0 * 100 * 10.0e-9;
  const double expect = eb * (1.0 - std::exp(-mu));
  CHECK(std::fabs(static_cast<double>(res.image.total()) - expect) <
        3.0 * std::sqrt(expect) + 3.0);
}

TEST_CASE("zero quantum yield with darks disabled gives exactly zero coincidences") {
  pipeline::ImagingScene scene;
  scene.map = sample::uniform_slab_map(400.0, 200, 100.0);
  scene.map.dye.quantum_yield = 0.0;
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.4;
  opt.seed = 52;
  const auto res = pipeline::run_imaging(scene, opt);
  CHECK(res.image.total() == 0);
  CHECK(res.bucket_clicks == 0);
  CHECK(res.fluorescence_photons == 0);
  CHECK(res.absorbed > 0);
}

TEST_CASE("aperture clipping removes marginal rays when enabled") {
  auto scene = point_scene();
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.05;
  opt.seed = 61;
  opt.aperture_half_width_um = 30.0;
  opt.aperture_clip = false;
  const auto open = pipeline::run_imaging(scene, opt);
  CHECK(open.probe_clipped == 0);

  opt.aperture_clip = true;
  const auto clipped = pipeline::run_imaging(scene, opt);
  CHECK(clipped.probe_clipped > 0);
  CHECK(clipped.absorbed < open.absorbed);
}

TEST_CASE("diffraction blur can be disabled") {
  auto scene = point_scene();
  scene.map = sample::point_source_map(400.0, 200, 10.0, 2.0, 2000.0);
  scene.map.dye.quantum_yield = 1.0;
  // moment width is tail sensitive; drop ambiguous windows so stray
  // accidental partners cannot pollute the sharp image
  scene.window.policy = coinc::AmbiguityPolicy::discard_window;
  pipeline::ImagingOptions opt;
  opt.exposure_s = 0.3;
  opt.seed = 62;
  opt.diffraction_blur = false;
  const auto sharp = pipeline::run_imaging(scene, opt);
  CHECK(sharp.blur_fwhm_um == 0.0);

  opt.diffraction_blur = true;
  const auto blurred = pipeline::run_imaging(scene, opt);
  const auto xp = pixel_axis(scene.array);
  const double w_sharp =
      stats::moment_fwhm(xp, counts_as_double(sharp.image));
  const double w_blur = stats::moment_fwhm(xp, counts_as_double(blurred.image));
  CHECK(w_blur > 2.0 * w_sharp);
}

TEST_CASE("target mode runs until the requested coincidences") {
  auto scene = point_scene();
  pipeline::ImagingOptions opt;
  opt.target_coincidences = 2000;
  opt.exposure_s = 1000.0;  // upper bound, not the driver
  opt.seed = 63;
  const auto res = pipeline::run_imaging(scene, opt);
  CHECK(res.image.total() >= 2000);
  CHECK(res.exposure_s < 1000.0);
  CHECK(res.exposure_s > 0.0);
}

TEST_CASE("invalid run options are rejected") {
  const auto scene = point_scene();
  pipeline::ImagingOptions opt;
  opt.workers = 0;
  CHECK_THROWS(pipeline::run_imaging(scene, opt));
  opt = pipeline::ImagingOptions{};
  opt.exposure_s = -1.0;
  CHECK_THROWS(pipeline::run_imaging(scene, opt));
  opt = pipeline::ImagingOptions{};
  opt.aperture_half_width_um = 0.0;
  CHECK_THROWS(pipeline::run_imaging(scene, opt));
}

TEST_CASE("remote focus sweep finds the predicted reference distance") {
  source::SourceSpec src;

  SUBCASE("degenerate wavelengths") {
    core::OpticalLayout base;  // ratio 1, predicted b = 1000
    const auto scan = pipeline::scan_reference_distance(src, base, 500.0, 1500.0,
                                                        41, 100000, 71);
    REQUIRE(scan.prediction_feasible);
    CHECK(scan.predicted_b_um == doctest::Approx(1000.0).epsilon(1e-12));
    const double step = (1500.0 - 500.0) / 40.0;
    CHECK(std::fabs(scan.points[scan.best_index].b_um - scan.predicted_b_um) <=
          step + 1e-9);
  }

  SUBCASE("wavelength ratio two") {
    source::SourceSpec src2;
    src2.pump_wavelength_nm = 312.0;
    src2.spectral.lambda1_nm = 468.0;
    core::OpticalLayout base;
    base.pump_wavelength_nm = 312.0;
    base.lambda1_nm = 468.0;
    base.lambda2_nm = 936.0;
    base.a_um = 1000.0;
    base.f_obj_um = 1000.0;
    base.s1_um = 2000.0;  // predicted b = (1/2)(2000 - 1000) = 500
    const auto scan = pipeline::scan_reference_distance(src2, base, 300.0, 700.0,
                                                        41, 100000, 72);
    REQUIRE(scan.prediction_feasible);
    CHECK(scan.predicted_b_um == doctest::Approx(500.0).epsilon(1e-12));
    const double step = (700.0 - 300.0) / 40.0;
    CHECK(std::fabs(scan.points[scan.best_index].b_um - scan.predicted_b_um) <=
          step + 1e-9);
  }

  SUBCASE("spread grows away from the optimum") {
    core::OpticalLayout base;
    const auto scan = pipeline::scan_reference_distance(src, base, 600.0, 1400.0,
                                                        21, 50000, 73);
    const auto& pts = scan.points;
    const std::size_t best = scan.best_index;
    REQUIRE(best > 1);
    REQUIRE(best + 2 < pts.size());
    CHECK(pts[best - 2].spread_um > pts[best - 1].spread_um);
    CHECK(pts[best - 1].spread_um >= pts[best].spread_um);
    CHECK(pts[best + 1].spread_um >= pts[best].spread_um);
    CHECK(pts[best + 2].spread_um > pts[best + 1].spread_um);
  }
}
