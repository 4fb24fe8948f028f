#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ghostsim/core.hpp"
#include "ghostsim/detect.hpp"

namespace ghostsim::coinc {

enum class AmbiguityPolicy { discard_window, keep_first };

/// @brief Coincidence gating relative to each bucket click.
///
/// A bucket click at t1 accepts an array click at t2 when the delay
/// t1 - t2 falls inside [window_center - T/2, window_center + T/2]:
/// one window of total length window_ns per bucket click, positioned by
/// window_center_ns (the fluorescence channel lags the reference
/// channel, so the best center is positive; see optimal_window_center).
struct CoincidenceConfig {
  double window_ns = 10.0;
  AmbiguityPolicy policy = AmbiguityPolicy::discard_window;
  double window_center_ns = 0.0;

  void validate() const;
};

struct CoincidenceRecord {
  std::int32_t pixel = 0;
  double t_bucket_ns = 0.0;
  double t_array_ns = 0.0;
};

struct PairDiagnostics {
  std::uint64_t buckets = 0;
  std::uint64_t coincidences = 0;
  std::uint64_t ambiguous_windows = 0;
  std::uint64_t unpaired_buckets = 0;

  void merge(const PairDiagnostics& o) {
    buckets += o.buckets;
    coincidences += o.coincidences;
    ambiguous_windows += o.ambiguous_windows;
    unpaired_buckets += o.unpaired_buckets;
  }
};

struct PairResult {
  std::vector<CoincidenceRecord> records;
  PairDiagnostics diag;
};

/// Batch pairing of two complete, time-sorted click streams. Windows
/// with several candidates count as ambiguous and are resolved by the
/// policy: discard_window drops them, keep_first takes the earliest
/// array click. Throws if either stream is out of order.
PairResult pair_clicks(const std::vector<detect::DetectionClick>& bucket_clicks,
                       const std::vector<detect::DetectionClick>& array_clicks,
                       const CoincidenceConfig& cfg);

/// @brief Incremental pairer for block-at-a-time processing.
///
/// Clicks arrive in batches; a batch boundary carries a promise that
/// every future click has t >= complete_before_ns. Bucket windows are
/// resolved once the array stream is complete past their upper edge, so
/// the emitted coincidences are identical to a batch run over the fully
/// sorted streams. Memory stays O(batch + window).
class StreamingPairer {
 public:
  using Emit = std::function<void(const CoincidenceRecord&)>;
  using ClickSink = std::function<void(const detect::DetectionClick&)>;

  explicit StreamingPairer(const CoincidenceConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
  }

  /// Merged-sorted click log callback, optional. Receives every click
  /// (both channels) in global time order.
  void set_click_sink(ClickSink sink) { click_sink_ = std::move(sink); }

  /// Feed one batch. Both vectors must be sorted by time; every later
  /// batch must only contain clicks at t >= complete_before_ns.
  void feed(std::vector<detect::DetectionClick> bucket_clicks,
            std::vector<detect::DetectionClick> array_clicks,
            double complete_before_ns, const Emit& emit);

  /// Flush everything; call once after the last batch.
  void finish(const Emit& emit);

  const PairDiagnostics& diagnostics() const { return diag_; }

 private:
  void resolve(double frontier_ns, const Emit& emit);

  CoincidenceConfig cfg_;
  std::vector<detect::DetectionClick> buckets_;
  std::vector<detect::DetectionClick> arrays_;
  std::vector<detect::DetectionClick> log_;
  ClickSink click_sink_;
  PairDiagnostics diag_;
};

/// @brief Timing channel model: exponential fluorescence decay of the
/// dye convolved with the Gaussian responses of both detectors.
struct TimingModel {
  double lifetime_ns = 1.0;
  double bucket_jitter_fwhm_ns = 0.5;
  double array_jitter_fwhm_ns = 0.5;

  /// Combined Gaussian sigma of both jitters.
  double sigma_ns() const;
};

/// Scaled complementary error function exp(x^2) erfc(x), stable for
/// large |x|.
double erfcx(double x);

/// Normalized coincidence-delay density (bucket minus array click
/// time): an exponentially modified Gaussian with rate 1/lifetime and
/// the combined jitter sigma. Closed form, stable at both tails.
double broadened_g2(double t_ns, const TimingModel& model);

/// CDF of broadened_g2.
double broadened_g2_cdf(double t_ns, const TimingModel& model);

struct WindowPlacement {
  double start_ns = 0.0;       // lower edge of the best window
  double capture_fraction = 0.0;
};

/// Best-capturing window of the given length under the delay density,
/// found on the closed-form CDF (the density is unimodal, so the
/// capture is unimodal in the window start).
WindowPlacement window_capture_fraction(const TimingModel& model,
                                        double window_ns);

/// Center of the best window; feed this into CoincidenceConfig.
double optimal_window_center(const TimingModel& model, double window_ns);

/// @brief Accumulated coincidence image over array pixels.
struct CoincidenceImage {
  std::vector<std::uint64_t> counts;
  detect::ArraySpec array;
  CoincidenceConfig config;
  double exposure_s = 0.0;

  std::uint64_t total() const;
  /// Reconstructed object coordinate of a pixel: the conjugate map
  /// applied to the pixel center, so at 1:1 a point at x0 lands at x0.
  double reconstructed_x_um(int pixel, const core::OpticalLayout& layout) const;
};

CoincidenceImage accumulate_image(const std::vector<CoincidenceRecord>& records,
                                  const detect::ArraySpec& array,
                                  const CoincidenceConfig& cfg,
                                  double exposure_s);

}  // namespace ghostsim::coinc
