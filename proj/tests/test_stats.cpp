#include <cmath>
#include <vector>

#include "doctest.h"
#include "ghostsim/rng.hpp"
#include "ghostsim/stats.hpp"
#include "ghostsim/units.hpp"

using namespace ghostsim;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return v;
}

std::vector<double> gaussian(const std::vector<double>& x, double mu, double sigma) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mu) / sigma;
    y[i] = std::exp(-0.5 * z * z);
  }
  return y;
}

}  // namespace

TEST_CASE("centroid of an asymmetric profile") {
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y = {0.0, 1.0, 3.0, 0.0};
  CHECK(stats::centroid(x, y) == doctest::Approx((1.0 + 6.0) / 4.0));
  CHECK_THROWS(stats::centroid(x, {0.0, 0.0, 0.0, 0.0}));
}

TEST_CASE("peak location refines between samples") {
  const auto x = linspace(-10.0, 10.0, 81);
  // gaussian centered off-grid
  const auto y = gaussian(x, 1.37, 2.0);
  CHECK(stats::peak_location(x, y) == doctest::Approx(1.37).epsilon(1e-3));
  // peak at the grid edge falls back to the raw argmax
  const auto edge = gaussian(x, -10.0, 2.0);
  CHECK(stats::peak_location(x, edge) == doctest::Approx(-10.0));
}

TEST_CASE("fwhm of a sampled gaussian") {
  const auto x = linspace(-20.0, 20.0, 401);
  for (double sigma : {1.0, 2.5, 4.0}) {
    const auto y = gaussian(x, 0.3, sigma);
    CHECK(stats::fwhm(x, y) ==
          doctest::Approx(units::kFwhmPerSigma * sigma).epsilon(1e-3));
  }
  // never drops below half max: no width defined
  std::vector<double> flat(x.size(), 1.0);
  CHECK_THROWS(stats::fwhm(x, flat));
}

TEST_CASE("moment width matches fwhm on a gaussian and resists truncation") {
  const auto x = linspace(-30.0, 30.0, 1201);
  const auto y = gaussian(x, 0.0, 3.0);
  CHECK(stats::moment_fwhm(x, y) ==
        doctest::Approx(units::kFwhmPerSigma * 3.0).epsilon(1e-3));
}

TEST_CASE("pearson correlation") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> up = {2.0, 4.1, 5.9, 8.2, 9.9};
  const std::vector<double> down = {5.0, 4.0, 3.0, 2.0, 1.0};
  CHECK(stats::pearson(a, a) == doctest::Approx(1.0));
  CHECK(stats::pearson(a, down) == doctest::Approx(-1.0));
  CHECK(stats::pearson(a, up) > 0.999);
  CHECK_THROWS(stats::pearson(a, {1.0, 2.0}));
  CHECK_THROWS(stats::pearson(a, {7.0, 7.0, 7.0, 7.0, 7.0}));
}

TEST_CASE("profile sampler reproduces the tabulated density") {
  const auto x = linspace(-8.0, 8.0, 161);
  const auto y = gaussian(x, 0.5, 2.0);
  stats::ProfileSampler sampler(x, y);
  rng::Stream rs(55);
  const int n = 400000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sampler.sample(rs);
    CHECK(v >= -8.05);
    CHECK(v <= 8.05);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::fabs(mean - 0.5) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
  // mild truncation at +-8 shaves a little off the standard deviation
  CHECK(sd == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("profile sampler respects zero-density regions") {
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y = {1.0, 0.0, 0.0, 0.0, 1.0};
  stats::ProfileSampler sampler(x, y);
  rng::Stream rs(56);
  for (int i = 0; i < 20000; ++i) {
    const double v = sampler.sample(rs);
    // mass sits only in the first and last cells
    CHECK((v < 0.75 || v > 3.25));
  }
}

TEST_CASE("profile sampler rejects bad input") {
  CHECK_THROWS(stats::ProfileSampler({0.0, 1.0}, {1.0}));
  CHECK_THROWS(stats::ProfileSampler({0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}));
  CHECK_THROWS(stats::ProfileSampler({0.0, 1.0, 2.0}, {1.0, -0.5, 1.0}));
}
