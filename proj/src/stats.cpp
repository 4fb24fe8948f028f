#include "ghostsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghostsim/units.hpp"

namespace ghostsim::stats {

namespace {

void check_profile(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("profile arrays differ in length");
  if (x.size() < 3) throw std::invalid_argument("profile needs at least 3 samples");
}

std::size_t argmax(const std::vector<double>& y) {
  return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

}  // namespace

double centroid(const std::vector<double>& x, const std::vector<double>& y) {
  check_profile(x, y);
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += y[i];
    swx += y[i] * x[i];
  }
  if (sw <= 0.0) throw std::invalid_argument("profile has no mass");
  return swx / sw;
}

double peak_location(const std::vector<double>& x, const std::vector<double>& y) {
  check_profile(x, y);
  const std::size_t i = argmax(y);
  if (i == 0 || i + 1 == y.size()) return x[i];
  const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
  if (denom >= 0.0) return x[i];
  const double shift = 0.5 * (y[i - 1] - y[i + 1]) / denom;
  const double step = x[i + 1] - x[i];
  return x[i] + shift * step;
}

double fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  check_profile(x, y);
  const std::size_t ip = argmax(y);
  const double half = 0.5 * y[ip];
  if (!(half > 0.0)) throw std::invalid_argument("profile has no positive peak");

  double left = x.front();
  bool found_left = false;
  for (std::size_t i = ip; i-- > 0;) {
    if (y[i] <= half) {
      const double t = (half - y[i]) / (y[i + 1] - y[i]);
      left = x[i] + t * (x[i + 1] - x[i]);
      found_left = true;
      break;
    }
  }
  double right = x.back();
  bool found_right = false;
  for (std::size_t i = ip + 1; i < y.size(); ++i) {
    if (y[i] <= half) {
      const double t = (y[i - 1] - half) / (y[i - 1] - y[i]);
      right = x[i - 1] + t * (x[i] - x[i - 1]);
      found_right = true;
      break;
    }
  }
  if (!found_left || !found_right) {
    throw std::runtime_error("profile does not drop below half maximum inside the grid");
  }
  return right - left;
}

double moment_fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  const double c = centroid(x, y);
  double sw = 0.0;
  double swx2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += y[i];
    swx2 += y[i] * (x[i] - c) * (x[i] - c);
  }
  return units::kFwhmPerSigma * std::sqrt(swx2 / sw);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("correlation needs two equal-length series");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw std::invalid_argument("series has zero variance");
  return sab / std::sqrt(saa * sbb);
}

ProfileSampler::ProfileSampler(const std::vector<double>& x, const std::vector<double>& density) {
  check_profile(x, density);
  const std::size_t n = x.size();
  const double h = x[1] - x[0];
  if (!(h > 0.0)) throw std::invalid_argument("grid must be increasing");
  edges_.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) edges_[i] = x[i] - 0.5 * h;
  edges_[n] = x[n - 1] + 0.5 * h;
  cdf_.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (density[i] < 0.0) throw std::invalid_argument("density must be non-negative");
    cdf_[i + 1] = cdf_[i] + density[i];
  }
  const double total = cdf_.back();
  if (!(total > 0.0)) throw std::invalid_argument("density has no mass");
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

double ProfileSampler::sample(rng::Stream& rs) const {
  const double u = rs.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t cell = static_cast<std::size_t>(it - cdf_.begin());
  if (cell == 0) cell = 1;
  if (cell >= cdf_.size()) cell = cdf_.size() - 1;
  const double lo = cdf_[cell - 1];
  const double hi = cdf_[cell];
  const double t = hi > lo ? (u - lo) / (hi - lo) : 0.5;
  return edges_[cell - 1] + t * (edges_[cell] - edges_[cell - 1]);
}

}  // namespace ghostsim::stats
