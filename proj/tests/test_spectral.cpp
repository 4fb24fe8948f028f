#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ghostsim/core.hpp"
#include "ghostsim/sample.hpp"
#include "ghostsim/spectral.hpp"

using namespace ghostsim;

namespace {

source::SourceSpec broadband_source(double sigma_nm = 8.0) {
  source::SourceSpec src;
  src.spectral.kind = source::SpectralModel::Kind::gaussian_bandwidth;
  src.spectral.bandwidth_sigma_nm = sigma_nm;
  return src;
}

}  // namespace

TEST_CASE("dispersed position is linear in wavelength") {
  spectral::DispersionSpec disp;  // 10 um/nm around 702
  CHECK(spectral::disperse_position(702.0, disp) == 0.0);
  CHECK(spectral::disperse_position(703.0, disp) == doctest::Approx(10.0));
  CHECK(spectral::disperse_position(700.5, disp) == doctest::Approx(-15.0));
  CHECK(spectral::in_field(199.9, disp));
  CHECK(!spectral::in_field(200.1, disp));
}

TEST_CASE("inference round-trips through frequency conservation") {
  spectral::DispersionSpec disp;
  const double pump = 351.0;
  for (double l1 : {695.0, 700.0, 702.0, 707.5}) {
    const double l2 = core::signal_wavelength(pump, l1);  // partner by symmetry
    const double x_true = spectral::disperse_position(l1, disp);
    const double x_inferred = spectral::infer_position(l2, pump, disp);
    CHECK(x_inferred == doctest::Approx(x_true).epsilon(1e-12));
  }
}

TEST_CASE("inferred wavelength example") {
  // reference measured at 704 nm with a 351 nm pump: probe at 700.01 nm
  spectral::DispersionSpec disp;
  disp.center_wavelength_nm = 700.0113314447592;
  const double x = spectral::infer_position(704.0, 351.0, disp);
  CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("dispersion spec validation") {
  spectral::DispersionSpec disp;
  CHECK_NOTHROW(disp.validate());
  disp.dispersion_um_per_nm = 0.0;
  CHECK_THROWS(disp.validate());
  disp = spectral::DispersionSpec{};
  disp.field_extent_um = -10.0;
  CHECK_THROWS(disp.validate());
  disp = spectral::DispersionSpec{};
  disp.spectrometer_resolution_nm = -0.1;
  CHECK_THROWS(disp.validate());
}

TEST_CASE("point object concentrates the inferred-position histogram") {
  const auto src = broadband_source();
  spectral::DispersionSpec disp;
  disp.spectrometer_resolution_nm = 0.0;  // noiseless readout
  auto map = sample::point_source_map(400.0, 200, 30.0, 8.0, 5000.0);
  detect::BucketSpec bucket;
  bucket.efficiency = 1.0;
  bucket.collection_efficiency = 1.0;
  map.dye.quantum_yield = 1.0;
  spectral::SpectrometerSpec spectrometer;
  spectrometer.efficiency = 1.0;
  spectral::SpectralScanOptions opt;
  opt.exposure_s = 0.02;
  opt.bins = 100;  // 4 um bins over 400 um
  opt.seed = 5;
  // widen and centre the delay window so a true partner in the lifetime
  // tail cannot be replaced by an accidental from an unrelated pair
  opt.window.window_ns = 20.0;
  opt.window.window_center_ns = 5.0;

  const auto res = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                    spectrometer, opt);
  REQUIRE(res.coincidences > 500);
  CHECK(res.off_scale == 0);

  std::uint64_t inside = 0;
  for (std::size_t i = 0; i < res.counts.size(); ++i) {
    if (std::fabs(res.bin_center_um[i] - 30.0) <= 8.0) inside += res.counts[i];
  }
  // noiseless inference puts every count at the dye location
  CHECK(inside == res.coincidences);
}

TEST_CASE("readout noise smears the inferred position by the dispersion") {
  const auto src = broadband_source();
  spectral::DispersionSpec disp;
  disp.spectrometer_resolution_nm = 1.0;
  // slab well inside the dispersed field, so the noisy tail stays on scale
  auto map = sample::uniform_slab_map(200.0, 100, 2000.0);
  map.dye.quantum_yield = 1.0;
  detect::BucketSpec bucket;
  bucket.efficiency = 1.0;
  bucket.collection_efficiency = 1.0;
  spectral::SpectrometerSpec spectrometer;
  spectrometer.efficiency = 1.0;
  spectral::SpectralScanOptions opt;
  opt.exposure_s = 0.02;
  opt.seed = 6;

  // slab: true positions already spread; compare inferred vs true position
  // event by event is unavailable here, so check the histogram variance
  // grows by roughly (D dlambda1/dlambda2 sigma)^2
  const auto noisy = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                      spectrometer, opt);
  disp.spectrometer_resolution_nm = 0.0;
  const auto clean = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                      spectrometer, opt);
  auto variance = [](const spectral::SpectralScanResult& r) {
    double sw = 0.0, sx = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      const double w = static_cast<double>(r.counts[i]);
      sw += w;
      sx += w * r.bin_center_um[i];
      sxx += w * r.bin_center_um[i] * r.bin_center_um[i];
    }
    const double m = sx / sw;
    return sxx / sw - m * m;
  };
  const double dv = variance(noisy) - variance(clean);
  // lambda1 ~ 702, lambda2 ~ 702: dl1/dl2 = (l1/l2)^2 ~ 1, D = 10 um/nm
  const double predicted = 10.0 * 10.0 * 1.0 * 1.0;
  CHECK(dv == doctest::Approx(predicted).epsilon(0.25));
}

TEST_CASE("out-of-band probes are flagged and never absorbed") {
  const auto src = broadband_source(8.0);
  spectral::DispersionSpec disp;
  disp.field_extent_um = 40.0;  // +-20 um: 2 nm of bandwidth on a 8 nm line
  auto map = sample::uniform_slab_map(400.0, 200, 5000.0);
  map.dye.quantum_yield = 1.0;
  detect::BucketSpec bucket;
  bucket.efficiency = 1.0;
  bucket.collection_efficiency = 1.0;
  spectral::SpectrometerSpec spectrometer;
  spectral::SpectralScanOptions opt;
  opt.exposure_s = 0.005;
  opt.seed = 7;
  const auto res = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                    spectrometer, opt);
  CHECK(res.out_of_band > 0);
  // ~80% of the gaussian line misses a +-1 sigma acceptance
  const double frac = static_cast<double>(res.out_of_band) /
                      static_cast<double>(res.pairs);
  CHECK(frac > 0.6);
  CHECK(frac < 0.9);
}

TEST_CASE("target mode stops at the requested coincidence count") {
  const auto src = broadband_source();
  spectral::DispersionSpec disp;
  auto map = sample::uniform_slab_map(400.0, 200, 2000.0);
  map.dye.quantum_yield = 1.0;
  detect::BucketSpec bucket;
  bucket.efficiency = 1.0;
  bucket.collection_efficiency = 1.0;
  spectral::SpectrometerSpec spectrometer;
  spectral::SpectralScanOptions opt;
  opt.exposure_s = 100.0;  // irrelevant in target mode
  opt.target_coincidences = 300;
  opt.seed = 8;
  const auto res = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                    spectrometer, opt);
  CHECK(res.coincidences >= 300);
  CHECK(res.exposure_s < 100.0);
  const std::uint64_t binned =
      std::accumulate(res.counts.begin(), res.counts.end(), std::uint64_t{0});
  CHECK(binned + res.off_scale == res.coincidences);
}

TEST_CASE("monochromatic source probes a single position") {
  source::SourceSpec src;  // 702 exactly
  spectral::DispersionSpec disp;
  disp.spectrometer_resolution_nm = 0.0;
  auto map = sample::uniform_slab_map(400.0, 200, 2000.0);
  map.dye.quantum_yield = 1.0;
  detect::BucketSpec bucket;
  bucket.efficiency = 1.0;
  bucket.collection_efficiency = 1.0;
  spectral::SpectrometerSpec spectrometer;
  spectrometer.efficiency = 1.0;
  spectral::SpectralScanOptions opt;
  opt.exposure_s = 0.002;
  opt.seed = 9;
  const auto res = spectral::simulate_spectral_scan(src, disp, map, bucket,
                                                    spectrometer, opt);
  REQUIRE(res.coincidences > 100);
  // all counts in the bin containing x = 0
  std::uint64_t at_zero = 0;
  for (std::size_t i = 0; i < res.counts.size(); ++i) {
    if (std::fabs(res.bin_center_um[i]) < 400.0 / 64.0) at_zero += res.counts[i];
  }
  CHECK(at_zero == res.coincidences);
}
