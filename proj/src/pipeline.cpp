#include "ghostsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

#include "ghostsim/optics.hpp"
#include "ghostsim/stats.hpp"
#include "ghostsim/units.hpp"

namespace ghostsim::pipeline {

namespace {

constexpr std::uint64_t kMaxBlocks = 10'000'000;  // hard stop for target mode

struct BlockOut {
  std::vector<detect::DetectionClick> buckets;
  std::vector<detect::DetectionClick> arrays;
  std::uint64_t pairs = 0;
  std::uint64_t clipped = 0;
  std::uint64_t absorbed = 0;
  std::uint64_t fluor = 0;
  std::uint64_t bucket_dark = 0;
  std::uint64_t array_dark = 0;
};

void sort_clicks(std::vector<detect::DetectionClick>& v) {
  std::sort(v.begin(), v.end(),
            [](const detect::DetectionClick& a, const detect::DetectionClick& b) {
              return a.t_ns < b.t_ns;
            });
}

// Lower bound of any click time generated at or after a block start;
// block k clicks all satisfy t >= k*kBlockNs + offset.
double click_floor_offset(const ImagingScene& scene) {
  const double jb = 16.0 * units::fwhm_to_sigma(scene.bucket.jitter_fwhm_ns);
  const double ja = 16.0 * units::fwhm_to_sigma(scene.array.jitter_fwhm_ns);
  return std::min({scene.bucket.const_delay_ns - jb, scene.array.const_delay_ns - ja, 0.0}) -
         1.0;
}

// Upper bound on how far past its block a click can land. Exponential
// draws are bounded by mean * 53 ln 2, jitter by the 16 sigma clamp.
double click_spill_ns(const ImagingScene& scene) {
  const double expo_max = 53.0 * std::log(2.0);
  const double emit = expo_max * scene.map.dye.lifetime_ns;
  const double extra =
      scene.map.fluo_scatter_prob > 0.0 ? expo_max * scene.map.fluo_scatter_delay_ns : 0.0;
  const double jb = 16.0 * units::fwhm_to_sigma(scene.bucket.jitter_fwhm_ns);
  const double ja = 16.0 * units::fwhm_to_sigma(scene.array.jitter_fwhm_ns);
  const double bucket = emit + extra + scene.bucket.const_delay_ns + jb;
  const double array = scene.array.const_delay_ns + ja;
  return std::max(bucket, array);
}

BlockOut simulate_block(const ImagingScene& scene, const stats::ProfileSampler* blur,
                        bool clip, double aperture_um, std::uint64_t seed, std::uint64_t block,
                        double exposure_limit_ns, detect::ArrayState& state,
                        const std::function<void(const core::PhotonPairEvent&)>& event_sink) {
  BlockOut out;
  const rng::Stream master(seed);
  const auto events = source::generate_block(scene.source, seed, block, exposure_limit_ns);
  out.pairs = events.size();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (event_sink) event_sink(ev);
    const auto ev_rng = master.child(rng::kDomainEvent).child(block).child(i);
    auto probe_rng = ev_rng.child(1);
    auto ref_rng = ev_rng.child(2);

    bool lost = false;
    if (clip && std::abs(optics::lens_plane_x(ev, scene.layout)) > aperture_um) {
      out.clipped += 1;
      lost = true;
    }
    if (!lost) {
      double x1 = optics::trace_probe(ev, scene.layout);
      if (blur != nullptr) {
        auto blur_rng = master.child(rng::kDomainBlur).child(block).child(i);
        x1 += blur->sample(blur_rng);
      }
      if (sample::try_absorb(x1, scene.map, probe_rng)) {
        out.absorbed += 1;
        if (const auto photon = sample::fluorescence_emission(scene.map, probe_rng)) {
          out.fluor += 1;
          const double arrival =
              ev.birth_time_ns + photon->emit_offset_ns + photon->extra_delay_ns;
          if (const auto click = detect::detect_bucket(arrival, scene.bucket, probe_rng)) {
            out.buckets.push_back(*click);
          }
        }
      }
    }

    const double x2 = optics::trace_reference(ev, scene.layout);
    if (const auto click =
            detect::detect_array(x2, ev.birth_time_ns, scene.array, state, ref_rng)) {
      out.arrays.push_back(*click);
    }
  }

  const double block_start = static_cast<double>(block) * source::kBlockNs;
  const double block_end =
      std::min(block_start + source::kBlockNs, exposure_limit_ns);
  if (scene.bucket.dark_rate_per_s > 0.0) {
    auto rs = master.child(rng::kDomainDarkBucket).child(block);
    const double mean_gap = units::kNsPerS / scene.bucket.dark_rate_per_s;
    double t = block_start;
    while (true) {
      t += rs.exponential(mean_gap);
      if (t >= block_end) break;
      out.buckets.push_back(detect::DetectionClick{detect::kBucketChannel, t});
      out.bucket_dark += 1;
    }
  }
  if (scene.array.dark_rate_per_s > 0.0) {
    // dark_rate_per_s is per pixel; the union over pixels is one Poisson
    // stream at N times the rate with a uniformly drawn pixel.
    auto rs = master.child(rng::kDomainDarkArray).child(block);
    const double total = scene.array.dark_rate_per_s * scene.array.pixel_count;
    const double mean_gap = units::kNsPerS / total;
    double t = block_start;
    while (true) {
      t += rs.exponential(mean_gap);
      if (t >= block_end) break;
      auto pixel = static_cast<int>(rs.uniform() * scene.array.pixel_count);
      pixel = std::min(pixel, scene.array.pixel_count - 1);
      if (!state.blocked(pixel, t, scene.array.dead_time_ns)) {
        state.record(pixel, t);
        out.arrays.push_back(detect::DetectionClick{pixel, t});
        out.array_dark += 1;
      }
    }
  }

  sort_clicks(out.buckets);
  sort_clicks(out.arrays);
  return out;
}

struct WorkerOut {
  std::vector<std::uint64_t> counts;
  coinc::PairDiagnostics diag;
  std::uint64_t pairs = 0;
  std::uint64_t clipped = 0;
  std::uint64_t absorbed = 0;
  std::uint64_t fluor = 0;
  std::uint64_t bucket_clicks = 0;
  std::uint64_t array_clicks = 0;
  std::uint64_t bucket_dark = 0;
  std::uint64_t array_dark = 0;
};

void add_owned(WorkerOut& w, const BlockOut& b) {
  w.pairs += b.pairs;
  w.clipped += b.clipped;
  w.absorbed += b.absorbed;
  w.fluor += b.fluor;
  w.bucket_clicks += b.buckets.size();
  w.array_clicks += b.arrays.size();
  w.bucket_dark += b.bucket_dark;
  w.array_dark += b.array_dark;
}

}  // namespace

ImagingResult run_imaging(const ImagingScene& scene, const ImagingOptions& opt) {
  scene.source.validate();
  scene.layout.validate();
  scene.map.validate();
  scene.bucket.validate();
  scene.array.validate();
  scene.window.validate();
  if (opt.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (opt.target_coincidences == 0 && !(opt.exposure_s >= 0.0)) {
    throw std::invalid_argument("exposure must be non-negative");
  }

  ImagingResult res;
  res.image.array = scene.array;
  res.image.config = scene.window;
  res.image.counts.assign(static_cast<std::size_t>(scene.array.pixel_count), 0);

  std::unique_ptr<stats::ProfileSampler> blur;
  if (opt.diffraction_blur) {
    optics::FresnelKernelSpec kspec;
    kspec.aperture_half_width_um = opt.aperture_half_width_um;
    kspec.lambda1_nm = scene.layout.lambda1_nm;
    kspec.lambda2_nm = scene.layout.lambda2_nm;
    // Grid: +-4 first zeros of the focused kernel, 16+ samples per zero.
    const double zero_um = 1e-3 * scene.layout.lambda1_nm * scene.layout.s1_um /
                           (2.0 * opt.aperture_half_width_um);
    kspec.grid_extent_um = 8.0 * zero_um;
    int pts = static_cast<int>(std::ceil(kspec.grid_extent_um / (zero_um / 16.0))) + 1;
    pts = std::max(pts, 129);
    if (pts % 2 == 0) pts += 1;
    kspec.grid_points = pts;
    const auto psf = optics::biphoton_psf_1d(scene.layout, kspec, 0.0);
    blur = std::make_unique<stats::ProfileSampler>(psf.x_um, psf.intensity);
    res.blur_fwhm_um = stats::fwhm(psf.x_um, psf.intensity);
  }

  const bool forced_serial =
      opt.target_coincidences > 0 || opt.event_sink != nullptr || opt.click_sink != nullptr;
  const double exposure_ns = opt.exposure_s * units::kNsPerS;
  const std::uint64_t fixed_blocks = source::block_count(exposure_ns);
  const double floor_off = click_floor_offset(scene);

  if (forced_serial || opt.workers == 1 || fixed_blocks <= 1) {
    detect::ArrayState state(scene.array.pixel_count);
    coinc::StreamingPairer pairer(scene.window);
    if (opt.click_sink) pairer.set_click_sink(opt.click_sink);
    auto emit = [&res](const coinc::CoincidenceRecord& r) {
      res.image.counts[static_cast<std::size_t>(r.pixel)] += 1;
    };
    std::uint64_t block = 0;
    while (true) {
      if (opt.target_coincidences > 0) {
        if (pairer.diagnostics().coincidences >= opt.target_coincidences ||
            block >= kMaxBlocks) {
          break;
        }
      } else if (block >= fixed_blocks) {
        break;
      }
      const double limit = opt.target_coincidences > 0
                               ? (static_cast<double>(block) + 1.0) * source::kBlockNs
                               : exposure_ns;
      auto bo = simulate_block(scene, blur.get(), opt.aperture_clip,
                               opt.aperture_half_width_um, opt.seed, block, limit, state,
                               opt.event_sink);
      WorkerOut tally;
      add_owned(tally, bo);
      res.pairs += tally.pairs;
      res.probe_clipped += tally.clipped;
      res.absorbed += tally.absorbed;
      res.fluorescence_photons += tally.fluor;
      res.bucket_clicks += tally.bucket_clicks;
      res.array_clicks += tally.array_clicks;
      res.bucket_dark_clicks += tally.bucket_dark;
      res.array_dark_clicks += tally.array_dark;
      const double frontier = (static_cast<double>(block) + 1.0) * source::kBlockNs + floor_off;
      pairer.feed(std::move(bo.buckets), std::move(bo.arrays), frontier, emit);
      ++block;
    }
    pairer.finish(emit);
    res.pair_diag = pairer.diagnostics();
    res.exposure_s = opt.target_coincidences > 0
                         ? static_cast<double>(block) * source::kBlockNs / units::kNsPerS
                         : opt.exposure_s;
    res.image.exposure_s = res.exposure_s;
    return res;
  }

  // Slice-parallel path: contiguous block ranges per worker. Ownership of
  // a coincidence follows the bucket-click time; every worker regenerates
  // enough neighbour blocks that all owned windows see complete streams.
  const std::uint64_t nblocks = fixed_blocks;
  const int nworkers = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(opt.workers), nblocks));
  const std::uint64_t guard_back =
      1 + static_cast<std::uint64_t>((click_spill_ns(scene) + std::abs(scene.window.window_center_ns) +
                                      0.5 * scene.window.window_ns + 16.0) /
                                     source::kBlockNs);

  std::vector<WorkerOut> outs(static_cast<std::size_t>(nworkers));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nworkers));
  for (int w = 0; w < nworkers; ++w) {
    threads.emplace_back([&, w]() {
      const std::uint64_t w0 = nblocks * static_cast<std::uint64_t>(w) /
                               static_cast<std::uint64_t>(nworkers);
      const std::uint64_t w1 = nblocks * (static_cast<std::uint64_t>(w) + 1) /
                               static_cast<std::uint64_t>(nworkers);
      const double t_lo = w == 0 ? -std::numeric_limits<double>::infinity()
                                 : static_cast<double>(w0) * source::kBlockNs;
      const double t_hi = w + 1 == nworkers ? std::numeric_limits<double>::infinity()
                                            : static_cast<double>(w1) * source::kBlockNs;
      WorkerOut& mine = outs[static_cast<std::size_t>(w)];
      mine.counts.assign(static_cast<std::size_t>(scene.array.pixel_count), 0);
      detect::ArrayState state(scene.array.pixel_count);
      coinc::StreamingPairer pairer(scene.window);
      auto emit = [&mine](const coinc::CoincidenceRecord& r) {
        mine.counts[static_cast<std::size_t>(r.pixel)] += 1;
      };
      const std::uint64_t g0 = w0 > guard_back ? w0 - guard_back : 0;
      const std::uint64_t g1 = std::min(nblocks, w1 + 1);
      for (std::uint64_t block = g0; block < g1; ++block) {
        auto bo = simulate_block(scene, blur.get(), opt.aperture_clip,
                                 opt.aperture_half_width_um, opt.seed, block, exposure_ns,
                                 state, nullptr);
        if (block >= w0 && block < w1) add_owned(mine, bo);
        // Only owned bucket clicks enter the pairer, so diagnostics
        // and records partition exactly across workers.
        std::vector<detect::DetectionClick> owned;
        owned.reserve(bo.buckets.size());
        for (const auto& c : bo.buckets) {
          if (c.t_ns >= t_lo && c.t_ns < t_hi) owned.push_back(c);
        }
        const double frontier =
            (static_cast<double>(block) + 1.0) * source::kBlockNs + floor_off;
        pairer.feed(std::move(owned), std::move(bo.arrays), frontier, emit);
      }
      pairer.finish(emit);
      mine.diag = pairer.diagnostics();
    });
  }
  for (auto& t : threads) t.join();

  for (const auto& w : outs) {
    for (std::size_t i = 0; i < res.image.counts.size(); ++i) {
      res.image.counts[i] += w.counts[i];
    }
    res.pair_diag.merge(w.diag);
    res.pairs += w.pairs;
    res.probe_clipped += w.clipped;
    res.absorbed += w.absorbed;
    res.fluorescence_photons += w.fluor;
    res.bucket_clicks += w.bucket_clicks;
    res.array_clicks += w.array_clicks;
    res.bucket_dark_clicks += w.bucket_dark;
    res.array_dark_clicks += w.array_dark;
  }
  res.exposure_s = opt.exposure_s;
  res.image.exposure_s = opt.exposure_s;
  return res;
}

ScanResult scan_reference_distance(const source::SourceSpec& src,
                                   const core::OpticalLayout& base, double b_min_um,
                                   double b_max_um, int steps, std::uint64_t n_events,
                                   std::uint64_t seed) {
  src.validate();
  base.validate();
  if (steps < 2) throw std::invalid_argument("sweep needs at least 2 steps");
  if (!(b_max_um > b_min_um) || b_min_um < 0.0) {
    throw std::invalid_argument("sweep bounds must satisfy 0 <= b_min < b_max");
  }
  if (n_events < 2) throw std::invalid_argument("sweep needs at least 2 events");

  std::vector<core::PhotonPairEvent> events;
  events.reserve(n_events);
  for (std::uint64_t block = 0; events.size() < n_events && block < kMaxBlocks; ++block) {
    const auto blk = source::generate_block(
        src, seed, block, (static_cast<double>(block) + 1.0) * source::kBlockNs);
    for (const auto& ev : blk) {
      if (events.size() == n_events) break;
      events.push_back(ev);
    }
  }

  std::vector<double> x1(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    x1[i] = optics::trace_probe(events[i], base);
  }

  ScanResult out;
  out.points.resize(static_cast<std::size_t>(steps));
  const double n = static_cast<double>(events.size());
  for (int s = 0; s < steps; ++s) {
    core::OpticalLayout layout = base;
    layout.b_um = b_min_um + (b_max_um - b_min_um) * s / (steps - 1);
    double su = 0.0;
    double sv = 0.0;
    double suu = 0.0;
    double svv = 0.0;
    double suv = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double u = x1[i];
      const double v = optics::trace_reference(events[i], layout);
      su += u;
      sv += v;
      suu += u * u;
      svv += v * v;
      suv += u * v;
    }
    const double v1 = suu / n - (su / n) * (su / n);
    const double v2 = svv / n - (sv / n) * (sv / n);
    const double cov = suv / n - (su / n) * (sv / n);
    const double resid = v2 > 0.0 ? v1 - cov * cov / v2 : v1;
    out.points[static_cast<std::size_t>(s)] =
        ScanPoint{layout.b_um, std::sqrt(std::max(0.0, resid))};
  }
  out.best_index = 0;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (out.points[i].spread_um < out.points[out.best_index].spread_um) out.best_index = i;
  }
  const auto pred = optics::solve_reference_distance(base.s1_um, base.a_um, base.f_obj_um,
                                                     base.lambda1_nm, base.lambda2_nm);
  out.predicted_b_um = pred.b_um;
  out.prediction_feasible = pred.feasible;
  return out;
}

}  // namespace ghostsim::pipeline
