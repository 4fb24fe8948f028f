#include "ghostsim/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ghostsim/optics.hpp"
#include "ghostsim/units.hpp"

namespace ghostsim::coinc {

namespace {

bool sorted_by_time(const std::vector<detect::DetectionClick>& clicks) {
  for (std::size_t i = 1; i < clicks.size(); ++i) {
    if (clicks[i].t_ns < clicks[i - 1].t_ns) return false;
  }
  return true;
}

void merge_sorted(std::vector<detect::DetectionClick>& acc,
                  std::vector<detect::DetectionClick>& batch) {
  const auto mid = static_cast<std::ptrdiff_t>(acc.size());
  acc.insert(acc.end(), batch.begin(), batch.end());
  std::inplace_merge(acc.begin(), acc.begin() + mid, acc.end(),
                     [](const detect::DetectionClick& a, const detect::DetectionClick& b) {
                       return a.t_ns < b.t_ns;
                     });
}

// Matches buckets[bucket_begin, bucket_end) against the sorted array list.
// `lo` is the caller-owned scan cursor; it only moves forward because
// bucket times are non-decreasing.
template <typename Emit>
void match_range(const std::vector<detect::DetectionClick>& buckets, std::size_t bucket_begin,
                 std::size_t bucket_end, const std::vector<detect::DetectionClick>& arrays,
                 std::size_t& lo, const CoincidenceConfig& cfg, PairDiagnostics& diag,
                 Emit&& emit) {
  const double half = 0.5 * cfg.window_ns;
  for (std::size_t bi = bucket_begin; bi < bucket_end; ++bi) {
    const double t1 = buckets[bi].t_ns;
    const double win_lo = t1 - cfg.window_center_ns - half;
    const double win_hi = t1 - cfg.window_center_ns + half;
    while (lo < arrays.size() && arrays[lo].t_ns < win_lo) ++lo;
    std::size_t hi = lo;
    while (hi < arrays.size() && arrays[hi].t_ns <= win_hi) ++hi;
    const std::size_t n = hi - lo;
    diag.buckets += 1;
    if (n == 0) {
      diag.unpaired_buckets += 1;
      continue;
    }
    if (n > 1) {
      diag.ambiguous_windows += 1;
      if (cfg.policy == AmbiguityPolicy::discard_window) continue;
    }
    diag.coincidences += 1;
    emit(CoincidenceRecord{arrays[lo].pixel, t1, arrays[lo].t_ns});
  }
}

}  // namespace

void CoincidenceConfig::validate() const {
  if (!(window_ns > 0.0)) throw std::invalid_argument("coincidence window must be positive");
  if (!std::isfinite(window_center_ns)) throw std::invalid_argument("window center must be finite");
}

PairResult pair_clicks(const std::vector<detect::DetectionClick>& bucket_clicks,
                       const std::vector<detect::DetectionClick>& array_clicks,
                       const CoincidenceConfig& cfg) {
  cfg.validate();
  if (!sorted_by_time(bucket_clicks) || !sorted_by_time(array_clicks)) {
    throw std::invalid_argument("click streams must be sorted by timestamp");
  }
  PairResult out;
  std::size_t lo = 0;
  match_range(bucket_clicks, 0, bucket_clicks.size(), array_clicks, lo, cfg, out.diag,
              [&out](const CoincidenceRecord& r) { out.records.push_back(r); });
  return out;
}

void StreamingPairer::feed(std::vector<detect::DetectionClick> bucket_clicks,
                           std::vector<detect::DetectionClick> array_clicks,
                           double complete_before_ns, const Emit& emit) {
  if (!sorted_by_time(bucket_clicks) || !sorted_by_time(array_clicks)) {
    throw std::invalid_argument("click batches must be sorted by timestamp");
  }
  if (click_sink_) {
    std::vector<detect::DetectionClick> copy = bucket_clicks;
    merge_sorted(log_, copy);
    copy = array_clicks;
    merge_sorted(log_, copy);
  }
  merge_sorted(buckets_, bucket_clicks);
  merge_sorted(arrays_, array_clicks);
  resolve(complete_before_ns, emit);
}

void StreamingPairer::resolve(double frontier_ns, const Emit& emit) {
  const double half = 0.5 * cfg_.window_ns;
  // A bucket is resolvable once the array stream is complete past its
  // window's upper edge.
  std::size_t nres = 0;
  while (nres < buckets_.size() &&
         buckets_[nres].t_ns - cfg_.window_center_ns + half < frontier_ns) {
    ++nres;
  }
  std::size_t lo = 0;
  match_range(buckets_, 0, nres, arrays_, lo, cfg_, diag_, emit);
  buckets_.erase(buckets_.begin(), buckets_.begin() + static_cast<std::ptrdiff_t>(nres));

  // Array clicks below every window a future bucket could open are dead.
  double keep_from = frontier_ns - cfg_.window_center_ns - half;
  if (!buckets_.empty()) {
    keep_from = std::min(keep_from, buckets_.front().t_ns - cfg_.window_center_ns - half);
  }
  std::size_t drop = 0;
  while (drop < arrays_.size() && arrays_[drop].t_ns < keep_from) ++drop;
  arrays_.erase(arrays_.begin(), arrays_.begin() + static_cast<std::ptrdiff_t>(drop));

  if (click_sink_) {
    std::size_t flush = 0;
    while (flush < log_.size() && log_[flush].t_ns < frontier_ns) ++flush;
    for (std::size_t i = 0; i < flush; ++i) click_sink_(log_[i]);
    log_.erase(log_.begin(), log_.begin() + static_cast<std::ptrdiff_t>(flush));
  }
}

void StreamingPairer::finish(const Emit& emit) {
  resolve(std::numeric_limits<double>::infinity(), emit);
}

double TimingModel::sigma_ns() const {
  const double sb = units::fwhm_to_sigma(bucket_jitter_fwhm_ns);
  const double sa = units::fwhm_to_sigma(array_jitter_fwhm_ns);
  return std::sqrt(sb * sb + sa * sa);
}

double erfcx(double x) {
  if (x >= 0.0) {
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic tail; relative error below 1e-13 from here on.
    const double z = 1.0 / (2.0 * x * x);
    static const double coef[] = {1.0, 3.0, 15.0, 105.0, 945.0};
    double term = 1.0;
    double sum = 1.0;
    double sign = -1.0;
    for (double c : coef) {
      term *= z;
      sum += sign * c * term;
      sign = -sign;
    }
    return sum / (x * std::sqrt(units::kPi));
  }
  return 2.0 * std::exp(x * x) - erfcx(-x);
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_timing(const TimingModel& model) {
  if (!(model.lifetime_ns > 0.0)) throw std::invalid_argument("lifetime must be positive");
  if (model.bucket_jitter_fwhm_ns < 0.0 || model.array_jitter_fwhm_ns < 0.0) {
    throw std::invalid_argument("jitter must be non-negative");
  }
}

}  // namespace

double broadened_g2(double t_ns, const TimingModel& model) {
  check_timing(model);
  const double kappa = 1.0 / model.lifetime_ns;
  const double sigma = model.sigma_ns();
  if (sigma == 0.0) {
    return t_ns >= 0.0 ? kappa * std::exp(-kappa * t_ns) : 0.0;
  }
  const double y = (kappa * sigma * sigma - t_ns) / (std::sqrt(2.0) * sigma);
  const double gauss = std::exp(-t_ns * t_ns / (2.0 * sigma * sigma));
  if (y >= 0.0) {
    // exp(kappa^2 sigma^2/2 - kappa t) erfc(y) written via erfcx to dodge
    // the overflow/underflow product.
    return 0.5 * kappa * erfcx(y) * gauss;
  }
  const double expo = std::exp(0.5 * kappa * kappa * sigma * sigma - kappa * t_ns);
  return kappa * expo - 0.5 * kappa * erfcx(-y) * gauss;
}

double broadened_g2_cdf(double t_ns, const TimingModel& model) {
  check_timing(model);
  const double kappa = 1.0 / model.lifetime_ns;
  const double sigma = model.sigma_ns();
  if (sigma == 0.0) {
    return t_ns >= 0.0 ? -std::expm1(-kappa * t_ns) : 0.0;
  }
  const double u = t_ns / sigma;
  const double y = (kappa * sigma * sigma - t_ns) / (std::sqrt(2.0) * sigma);
  const double gauss = std::exp(-0.5 * u * u);
  if (y >= 0.0) {
    return normal_cdf(u) - 0.5 * erfcx(y) * gauss;
  }
  const double expo = std::exp(0.5 * kappa * kappa * sigma * sigma - kappa * t_ns);
  return normal_cdf(u) - expo + 0.5 * erfcx(-y) * gauss;
}

WindowPlacement window_capture_fraction(const TimingModel& model, double window_ns) {
  check_timing(model);
  if (!(window_ns > 0.0)) throw std::invalid_argument("window must be positive");
  const double sigma = model.sigma_ns();
  auto capture = [&](double s) {
    return broadened_g2_cdf(s + window_ns, model) - broadened_g2_cdf(s, model);
  };
  // Golden-section search; bracket wide enough for any lifetime/jitter mix.
  double lo = -window_ns - 8.0 * sigma - model.lifetime_ns;
  double hi = 8.0 * sigma + 5.0 * model.lifetime_ns;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double fc = capture(c);
  double fd = capture(d);
  for (int i = 0; i < 300 && hi - lo > 1e-13 * (1.0 + std::abs(lo) + std::abs(hi)); ++i) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = capture(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = capture(d);
    }
  }
  const double start = 0.5 * (lo + hi);
  return WindowPlacement{start, capture(start)};
}

double optimal_window_center(const TimingModel& model, double window_ns) {
  return window_capture_fraction(model, window_ns).start_ns + 0.5 * window_ns;
}

std::uint64_t CoincidenceImage::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts) sum += c;
  return sum;
}

double CoincidenceImage::reconstructed_x_um(int pixel, const core::OpticalLayout& layout) const {
  return optics::conjugate_map(array.pixel_center_um(pixel), layout);
}

CoincidenceImage accumulate_image(const std::vector<CoincidenceRecord>& records,
                                  const detect::ArraySpec& array, const CoincidenceConfig& cfg,
                                  double exposure_s) {
  CoincidenceImage img;
  img.counts.assign(static_cast<std::size_t>(array.pixel_count), 0);
  img.array = array;
  img.config = cfg;
  img.exposure_s = exposure_s;
  for (const auto& r : records) {
    if (r.pixel < 0 || r.pixel >= array.pixel_count) {
      throw std::out_of_range("coincidence record pixel outside the array");
    }
    img.counts[static_cast<std::size_t>(r.pixel)] += 1;
  }
  return img;
}

}  // namespace ghostsim::coinc
