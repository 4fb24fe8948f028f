#include <cmath>
#include <vector>

#include "doctest.h"
#include "ghostsim/detect.hpp"
#include "ghostsim/rng.hpp"
#include "ghostsim/units.hpp"

using namespace ghostsim;

TEST_CASE("bucket click fraction equals efficiency times collection") {
  detect::BucketSpec spec;  // 0.7 * 0.5
  rng::Stream rs(4);
  const int n = 200000;
  int clicks = 0;
  for (int i = 0; i < n; ++i) {
    if (detect::detect_bucket(100.0, spec, rs)) ++clicks;
  }
  const double p = 0.35;
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::fabs(clicks / static_cast<double>(n) - p) < 3.0 * se);
}

TEST_CASE("bucket click time is jittered around arrival plus the fixed delay") {
  detect::BucketSpec spec;
  spec.efficiency = 1.0;
  spec.collection_efficiency = 1.0;
  spec.jitter_fwhm_ns = 0.5;
  spec.const_delay_ns = 3.0;
  rng::Stream rs(15);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto c = detect::detect_bucket(10.0, spec, rs);
    REQUIRE(c);
    CHECK(c->pixel == detect::kBucketChannel);
    sum += c->t_ns;
    sumsq += c->t_ns * c->t_ns;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  const double sigma = units::fwhm_to_sigma(0.5);
  CHECK(std::fabs(mean - 13.0) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  CHECK(sd == doctest::Approx(sigma).epsilon(0.02));
}

TEST_CASE("jitter samples are clamped to 16 sigma") {
  rng::Stream rs(16);
  const double sigma = units::fwhm_to_sigma(0.5);
  for (int i = 0; i < 500000; ++i) {
    CHECK(std::fabs(detect::jitter_sample(0.5, rs)) <= 16.0 * sigma + 1e-12);
  }
}

TEST_CASE("zero jitter is exactly deterministic in time") {
  detect::BucketSpec spec;
  spec.efficiency = 1.0;
  spec.collection_efficiency = 1.0;
  spec.jitter_fwhm_ns = 0.0;
  spec.const_delay_ns = 2.0;
  rng::Stream rs(17);
  const auto c = detect::detect_bucket(5.0, spec, rs);
  REQUIRE(c);
  CHECK(c->t_ns == 7.0);
}

TEST_CASE("array pixel geometry") {
  detect::ArraySpec spec;  // pitch 2 um, 100 px, offset -100
  CHECK(spec.pixel_index(-100.0) == 0);
  CHECK(spec.pixel_index(-98.01) == 0);
  CHECK(spec.pixel_index(0.0) == 50);
  CHECK(spec.pixel_index(99.99) == 99);
  CHECK(spec.pixel_index(100.0) == -1);
  CHECK(spec.pixel_index(-100.01) == -1);
  CHECK(spec.pixel_center_um(0) == doctest::Approx(-99.0));
  CHECK(spec.pixel_center_um(99) == doctest::Approx(99.0));
}

TEST_CASE("array efficiency and off-array loss") {
  detect::ArraySpec spec;
  spec.dead_time_ns = 0.0;
  detect::ArrayState state(spec.pixel_count);
  rng::Stream rs(18);
  const int n = 200000;
  int clicks = 0;
  for (int i = 0; i < n; ++i) {
    if (detect::detect_array(3.7, i * 1000.0, spec, state, rs)) ++clicks;
  }
  const double se = std::sqrt(0.7 * 0.3 / n);
  CHECK(std::fabs(clicks / static_cast<double>(n) - 0.7) < 3.0 * se);
  // off the array nothing registers and no randomness is consumed
  rng::Stream probe(19);
  auto before = probe;
  CHECK(!detect::detect_array(500.0, 0.0, spec, state, probe));
  CHECK(probe.next_u64() == before.next_u64());
}

TEST_CASE("dead time blocks only the same pixel") {
  detect::ArraySpec spec;
  spec.efficiency = 1.0;
  spec.jitter_fwhm_ns = 0.0;
  spec.dead_time_ns = 50.0;
  detect::ArrayState state(spec.pixel_count);
  rng::Stream rs(20);

  const auto first = detect::detect_array(0.5, 100.0, spec, state, rs);
  REQUIRE(first);
  // same pixel, 10 ns later: blocked
  CHECK(!detect::detect_array(0.5, 110.0, spec, state, rs));
  // neighbouring pixel at the same instant: fine
  CHECK(detect::detect_array(2.5, 110.0, spec, state, rs));
  // same pixel after the dead time: fine
  CHECK(detect::detect_array(0.5, 150.0 + 1e-9, spec, state, rs));
}

TEST_CASE("blocked pixels do not refresh their dead time") {
  detect::ArraySpec spec;
  spec.efficiency = 1.0;
  spec.jitter_fwhm_ns = 0.0;
  spec.dead_time_ns = 50.0;
  detect::ArrayState state(spec.pixel_count);
  rng::Stream rs(21);
  REQUIRE(detect::detect_array(0.5, 0.0, spec, state, rs));
  CHECK(!detect::detect_array(0.5, 40.0, spec, state, rs));
  // 40 ns arrival was blocked and must not extend the window past 50
  CHECK(detect::detect_array(0.5, 55.0, spec, state, rs));
}

TEST_CASE("array dead time suppresses rate at high flux") {
  detect::ArraySpec spec;
  spec.efficiency = 1.0;
  spec.jitter_fwhm_ns = 0.0;
  spec.dead_time_ns = 100.0;
  detect::ArrayState state(spec.pixel_count);
  rng::Stream rs(22);
  // photons every 30 ns on one pixel: every click opens a 100 ns window,
  // blocking the next three arrivals; steady state is one click per 120 ns
  int clicks = 0;
  for (int i = 0; i < 4000; ++i) {
    if (detect::detect_array(0.5, 30.0 * i, spec, state, rs)) ++clicks;
  }
  CHECK(clicks == doctest::Approx(1000).epsilon(0.01));
}

TEST_CASE("spec validation rejects nonsense") {
  detect::BucketSpec bucket;
  CHECK_NOTHROW(bucket.validate());
  bucket.efficiency = 1.5;
  CHECK_THROWS(bucket.validate());
  bucket = detect::BucketSpec{};
  bucket.dark_rate_per_s = -1.0;
  CHECK_THROWS(bucket.validate());

  detect::ArraySpec array;
  CHECK_NOTHROW(array.validate());
  array.pixel_count = 0;
  CHECK_THROWS(array.validate());
  array = detect::ArraySpec{};
  array.pixel_pitch_um = 0.0;
  CHECK_THROWS(array.validate());
  array = detect::ArraySpec{};
  array.dead_time_ns = -2.0;
  CHECK_THROWS(array.validate());
}
