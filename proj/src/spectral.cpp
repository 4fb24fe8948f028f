#include "ghostsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghostsim/units.hpp"

namespace ghostsim::spectral {

void DispersionSpec::validate() const {
  if (dispersion_um_per_nm == 0.0) throw std::invalid_argument("dispersion must be nonzero");
  if (!(field_extent_um > 0.0)) throw std::invalid_argument("field extent must be positive");
  if (!(spectrometer_resolution_nm >= 0.0)) {
    throw std::invalid_argument("spectrometer resolution must be >= 0");
  }
  if (!(center_wavelength_nm > 0.0)) {
    throw std::invalid_argument("center wavelength must be positive");
  }
}

double disperse_position(double lambda1_nm, const DispersionSpec& spec) {
  return spec.dispersion_um_per_nm * (lambda1_nm - spec.center_wavelength_nm);
}

bool in_field(double x_um, const DispersionSpec& spec) {
  return std::abs(x_um) <= 0.5 * spec.field_extent_um;
}

double infer_position(double lambda2_measured_nm, double pump_nm, const DispersionSpec& spec) {
  const double lambda1 = core::signal_wavelength(pump_nm, lambda2_measured_nm);
  return disperse_position(lambda1, spec);
}

namespace {

struct TaggedClick {
  double t_ns = 0.0;
  double lambda_nm = 0.0;  // measured reference wavelength
};

// Streaming window matcher with wavelength payload; same windowing rules
// as coinc::pair_clicks (length-T window centered at window_center).
class SpectralPairer {
 public:
  explicit SpectralPairer(const coinc::CoincidenceConfig& cfg) : cfg_(cfg) {}

  template <typename Emit>
  void feed(std::vector<detect::DetectionClick> buckets, std::vector<TaggedClick> refs,
            double frontier_ns, SpectralScanResult& res, Emit&& emit) {
    merge_buckets(std::move(buckets));
    merge_refs(std::move(refs));
    resolve(frontier_ns, res, emit);
  }

  template <typename Emit>
  void finish(SpectralScanResult& res, Emit&& emit) {
    resolve(1e308, res, emit);
  }

 private:
  void merge_buckets(std::vector<detect::DetectionClick> batch) {
    const std::size_t mid = buckets_.size();
    buckets_.insert(buckets_.end(), batch.begin(), batch.end());
    std::inplace_merge(buckets_.begin(), buckets_.begin() + static_cast<std::ptrdiff_t>(mid),
                       buckets_.end(), [](const detect::DetectionClick& a,
                                          const detect::DetectionClick& b) {
                         return a.t_ns < b.t_ns;
                       });
  }
  void merge_refs(std::vector<TaggedClick> batch) {
    const std::size_t mid = refs_.size();
    refs_.insert(refs_.end(), batch.begin(), batch.end());
    std::inplace_merge(refs_.begin(), refs_.begin() + static_cast<std::ptrdiff_t>(mid),
                       refs_.end(),
                       [](const TaggedClick& a, const TaggedClick& b) { return a.t_ns < b.t_ns; });
  }

  template <typename Emit>
  void resolve(double frontier_ns, SpectralScanResult& res, Emit&& emit) {
    const double half = 0.5 * cfg_.window_ns;
    std::size_t nres = 0;
    while (nres < buckets_.size() &&
           buckets_[nres].t_ns - cfg_.window_center_ns + half < frontier_ns) {
      ++nres;
    }
    std::size_t lo = 0;
    for (std::size_t bi = 0; bi < nres; ++bi) {
      const double t1 = buckets_[bi].t_ns;
      const double win_lo = t1 - cfg_.window_center_ns - half;
      const double win_hi = t1 - cfg_.window_center_ns + half;
      while (lo < refs_.size() && refs_[lo].t_ns < win_lo) ++lo;
      std::size_t hi = lo;
      while (hi < refs_.size() && refs_[hi].t_ns <= win_hi) ++hi;
      const std::size_t n = hi - lo;
      if (n == 0) continue;
      if (n > 1) {
        res.ambiguous_windows += 1;
        if (cfg_.policy == coinc::AmbiguityPolicy::discard_window) continue;
      }
      res.coincidences += 1;
      emit(refs_[lo].lambda_nm);
    }
    buckets_.erase(buckets_.begin(), buckets_.begin() + static_cast<std::ptrdiff_t>(nres));
    double keep_from = frontier_ns - cfg_.window_center_ns - half;
    if (!buckets_.empty()) {
      keep_from = std::min(keep_from, buckets_.front().t_ns - cfg_.window_center_ns - half);
    }
    std::size_t drop = 0;
    while (drop < refs_.size() && refs_[drop].t_ns < keep_from) ++drop;
    refs_.erase(refs_.begin(), refs_.begin() + static_cast<std::ptrdiff_t>(drop));
  }

  coinc::CoincidenceConfig cfg_;
  std::vector<detect::DetectionClick> buckets_;
  std::vector<TaggedClick> refs_;
};

}  // namespace

SpectralScanResult simulate_spectral_scan(const source::SourceSpec& src,
                                          const DispersionSpec& disp,
                                          const sample::FluorophoreMap& map,
                                          const detect::BucketSpec& bucket,
                                          const SpectrometerSpec& spectrometer,
                                          const SpectralScanOptions& opt) {
  src.validate();
  disp.validate();
  map.validate();
  bucket.validate();
  opt.window.validate();
  if (opt.bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  if (opt.target_coincidences == 0 && !(opt.exposure_s > 0.0)) {
    throw std::invalid_argument("exposure must be positive");
  }

  SpectralScanResult res;
  res.counts.assign(static_cast<std::size_t>(opt.bins), 0);
  res.bin_center_um.resize(static_cast<std::size_t>(opt.bins));
  const double bin_w = disp.field_extent_um / opt.bins;
  const double x_lo = -0.5 * disp.field_extent_um;
  for (int i = 0; i < opt.bins; ++i) {
    res.bin_center_um[static_cast<std::size_t>(i)] = x_lo + (i + 0.5) * bin_w;
  }

  auto bin_of = [&](double x) -> std::ptrdiff_t {
    const double rel = (x - x_lo) / bin_w;
    if (rel < 0.0 || rel >= static_cast<double>(opt.bins)) return -1;
    return static_cast<std::ptrdiff_t>(rel);
  };
  auto emit = [&](double lambda_meas) {
    const double x_hat = infer_position(lambda_meas, src.pump_wavelength_nm, disp);
    const std::ptrdiff_t b = bin_of(x_hat);
    if (b < 0) {
      res.off_scale += 1;
    } else {
      res.counts[static_cast<std::size_t>(b)] += 1;
    }
  };

  const rng::Stream master(opt.seed);
  SpectralPairer pairer(opt.window);

  // Lower bound on any click time produced at or after a given block start.
  const double sb = units::fwhm_to_sigma(bucket.jitter_fwhm_ns);
  const double sr = units::fwhm_to_sigma(spectrometer.jitter_fwhm_ns);
  const double min_off = std::min({bucket.const_delay_ns - 16.0 * sb,
                                   spectrometer.const_delay_ns - 16.0 * sr, 0.0}) -
                         1.0;

  const double exposure_ns = opt.exposure_s * units::kNsPerS;
  const std::uint64_t fixed_blocks = source::block_count(exposure_ns);
  constexpr std::uint64_t kMaxBlocks = 10'000'000;

  std::uint64_t block = 0;
  while (true) {
    if (opt.target_coincidences > 0) {
      if (res.coincidences >= opt.target_coincidences || block >= kMaxBlocks) break;
    } else if (block >= fixed_blocks) {
      break;
    }
    const double block_exposure =
        opt.target_coincidences > 0 ? (static_cast<double>(block) + 1.0) * source::kBlockNs
                                    : exposure_ns;
    const auto events = source::generate_block(src, opt.seed, block, block_exposure);
    std::vector<detect::DetectionClick> bclicks;
    std::vector<TaggedClick> rclicks;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& ev = events[i];
      res.pairs += 1;
      auto ev_rng = master.child(rng::kDomainEvent).child(block).child(i);
      auto probe_rng = ev_rng.child(1);
      auto ref_rng = ev_rng.child(2);

      const double x1 = disperse_position(ev.lambda1_nm, disp);
      if (!in_field(x1, disp)) {
        res.out_of_band += 1;
      } else if (auto abs = sample::try_absorb(x1, map, probe_rng)) {
        if (auto photon = sample::fluorescence_emission(map, probe_rng)) {
          const double arrival =
              ev.birth_time_ns + photon->emit_offset_ns + photon->extra_delay_ns;
          if (auto click = detect_bucket(arrival, bucket, probe_rng)) {
            bclicks.push_back(*click);
          }
        }
      }

      if (ref_rng.bernoulli(spectrometer.efficiency)) {
        TaggedClick rc;
        rc.t_ns = ev.birth_time_ns + spectrometer.const_delay_ns +
                  detect::jitter_sample(spectrometer.jitter_fwhm_ns, ref_rng);
        rc.lambda_nm =
            ev.lambda2_nm + ref_rng.normal(0.0, disp.spectrometer_resolution_nm);
        rclicks.push_back(rc);
      }
    }
    std::sort(bclicks.begin(), bclicks.end(),
              [](const detect::DetectionClick& a, const detect::DetectionClick& b) {
                return a.t_ns < b.t_ns;
              });
    std::sort(rclicks.begin(), rclicks.end(),
              [](const TaggedClick& a, const TaggedClick& b) { return a.t_ns < b.t_ns; });
    res.bucket_clicks += bclicks.size();
    res.reference_clicks += rclicks.size();
    const double frontier = (static_cast<double>(block) + 1.0) * source::kBlockNs + min_off;
    pairer.feed(std::move(bclicks), std::move(rclicks), frontier, res, emit);
    ++block;
  }
  pairer.finish(res, emit);
  res.exposure_s = opt.target_coincidences > 0
                       ? static_cast<double>(block) * source::kBlockNs / units::kNsPerS
                       : opt.exposure_s;
  return res;
}

}  // namespace ghostsim::spectral
