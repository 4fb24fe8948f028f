#include "ghostsim/source.hpp"

#include <cmath>
#include <stdexcept>

#include "ghostsim/units.hpp"

namespace ghostsim::source {

void SourceSpec::validate() const {
  if (!(pair_rate_per_s > 0.0)) {
    throw std::invalid_argument("SourceSpec: pair rate must be positive");
  }
  if (!(pump_wavelength_nm > 0.0)) {
    throw std::invalid_argument("SourceSpec: pump wavelength must be positive");
  }
  if (pump_waist_um < 0.0) {
    throw std::invalid_argument("SourceSpec: pump waist must be >= 0");
  }
  if (!(angular_spread_rad > 0.0)) {
    throw std::invalid_argument("SourceSpec: angular spread must be > 0");
  }
  if (!(spectral.lambda1_nm > pump_wavelength_nm)) {
    throw std::invalid_argument(
        "SourceSpec: probe wavelength must exceed the pump wavelength");
  }
  if (spectral.kind == SpectralModel::Kind::gaussian_bandwidth &&
      spectral.bandwidth_sigma_nm < 0.0) {
    throw std::invalid_argument("SourceSpec: bandwidth sigma must be >= 0");
  }
  // The partner wavelength must exist for the center line.
  core::signal_wavelength(pump_wavelength_nm, spectral.lambda1_nm);
}

namespace {

// Draw order per event is fixed: birth_x, theta1, [lambda1]. Unphysical
// tails (no propagating partner, or lambda1 <= pump) are redrawn; with
// sane specs this fires never.
core::PhotonPairEvent draw_event(const SourceSpec& spec, double t_ns,
                                 rng::Stream& rs) {
  core::PhotonPairEvent ev;
  ev.birth_time_ns = t_ns;
  ev.birth_x_um = spec.pump_waist_um > 0.0
                      ? rs.normal(0.0, spec.pump_waist_um)
                      : 0.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double theta1 = rs.normal(0.0, spec.angular_spread_rad);
    double lambda1 = spec.spectral.lambda1_nm;
    if (spec.spectral.kind == SpectralModel::Kind::gaussian_bandwidth &&
        spec.spectral.bandwidth_sigma_nm > 0.0) {
      lambda1 = rs.normal(spec.spectral.lambda1_nm,
                          spec.spectral.bandwidth_sigma_nm);
      if (!(lambda1 > spec.pump_wavelength_nm)) continue;
    }
    const double lambda2 =
        core::signal_wavelength(spec.pump_wavelength_nm, lambda1);
    if (std::fabs(std::sin(theta1)) * lambda2 / lambda1 > 1.0) continue;
    ev.theta1_rad = theta1;
    ev.lambda1_nm = lambda1;
    ev.lambda2_nm = lambda2;
    ev.theta2_rad = core::reference_angle(theta1, lambda1, lambda2);
    return ev;
  }
  throw std::runtime_error("generate_block: spectral model keeps producing "
                           "unphysical pairs");
}

}  // namespace

std::vector<core::PhotonPairEvent> generate_block(const SourceSpec& spec,
                                                  std::uint64_t seed,
                                                  std::uint64_t block_index,
                                                  double exposure_ns) {
  spec.validate();
  std::vector<core::PhotonPairEvent> events;
  const double t0 = static_cast<double>(block_index) * kBlockNs;
  const double t1 = std::min(t0 + kBlockNs, exposure_ns);
  if (t1 <= t0) return events;

  rng::Stream rs =
      rng::Stream(seed).child(rng::kDomainSource).child(block_index);
  const double mean_gap_ns =
      units::kNsPerS / spec.pair_rate_per_s;  // exponential inter-arrival
  events.reserve(static_cast<std::size_t>(1.2 * (t1 - t0) / mean_gap_ns) + 4);

  double t = t0;
  for (;;) {
    t += rs.exponential(mean_gap_ns);
    if (t >= t1) break;
    events.push_back(draw_event(spec, t, rs));
  }
  return events;
}

std::vector<core::PhotonPairEvent> generate_pair_stream(
    const SourceSpec& spec, std::uint64_t seed, double exposure_ns) {
  std::vector<core::PhotonPairEvent> all;
  const std::uint64_t blocks = block_count(exposure_ns);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    auto ev = generate_block(spec, seed, b, exposure_ns);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  return all;
}

double multi_pair_probability(double rate_per_s, double window_ns) {
  if (rate_per_s < 0.0 || window_ns < 0.0) {
    throw std::invalid_argument(
        "multi_pair_probability: rate and window must be >= 0");
  }
  const double mu = rate_per_s * window_ns / units::kNsPerS;
  return -std::expm1(-mu) - mu * std::exp(-mu);
}

double multi_pair_window_fraction(const SourceSpec& spec, std::uint64_t seed,
                                  double exposure_ns, double window_ns) {
  if (!(window_ns > 0.0) || !(exposure_ns > 0.0)) {
    throw std::invalid_argument(
        "multi_pair_window_fraction: exposure and window must be > 0");
  }
  const std::uint64_t n_windows =
      static_cast<std::uint64_t>(exposure_ns / window_ns);
  if (n_windows == 0) return 0.0;
  const double end_ns = static_cast<double>(n_windows) * window_ns;

  std::uint64_t multi = 0;
  std::uint64_t current = 0;
  std::uint64_t in_current = 0;
  const std::uint64_t blocks = block_count(end_ns);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    for (const auto& ev : generate_block(spec, seed, b, end_ns)) {
      const auto w =
          static_cast<std::uint64_t>(ev.birth_time_ns / window_ns);
      if (w == current) {
        ++in_current;
      } else {
        if (in_current >= 2) ++multi;
        current = w;
        in_current = 1;
      }
    }
  }
  if (in_current >= 2) ++multi;
  return static_cast<double>(multi) / static_cast<double>(n_windows);
}

}  // namespace ghostsim::source
