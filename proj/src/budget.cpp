#include "ghostsim/budget.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ghostsim/sample.hpp"

namespace ghostsim::budget {

void BudgetParams::validate() const {
  if (!(pair_rate_per_s > 0.0)) throw std::invalid_argument("pair rate must be positive");
  if (concentration_uM < 0.0) throw std::invalid_argument("concentration must be non-negative");
  if (epsilon_per_M_um < 0.0) throw std::invalid_argument("extinction must be non-negative");
  if (!(thickness_um > 0.0)) throw std::invalid_argument("thickness must be positive");
  auto unit_interval = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit_interval(quantum_yield)) throw std::invalid_argument("quantum yield outside [0,1]");
  if (!unit_interval(collection_efficiency)) {
    throw std::invalid_argument("collection efficiency outside [0,1]");
  }
  if (!unit_interval(bucket_efficiency) || !unit_interval(array_efficiency)) {
    throw std::invalid_argument("detector efficiency outside [0,1]");
  }
}

BudgetBreakdown photon_budget(const BudgetParams& params) {
  params.validate();
  BudgetBreakdown out;
  out.absorption_probability = sample::absorption_probability(
      params.concentration_uM, params.epsilon_per_M_um, params.thickness_um);
  out.absorbed_rate_per_s = params.pair_rate_per_s * out.absorption_probability;
  out.fluorescence_rate_per_s = out.absorbed_rate_per_s * params.quantum_yield;
  out.collected_rate_per_s = out.fluorescence_rate_per_s * params.collection_efficiency;
  out.coincidence_rate_per_s =
      out.collected_rate_per_s * params.bucket_efficiency * params.array_efficiency;
  return out;
}

AcquisitionEstimate acquisition_time(double coincidence_rate_per_s, double counts_per_pixel,
                                     int pixels) {
  if (counts_per_pixel < 0.0) throw std::invalid_argument("counts per pixel must be non-negative");
  if (pixels <= 0) throw std::invalid_argument("pixel count must be positive");
  AcquisitionEstimate out;
  if (!(coincidence_rate_per_s > 0.0)) {
    out.per_pixel_s = std::numeric_limits<double>::infinity();
    out.total_s = std::numeric_limits<double>::infinity();
    out.bounded = false;
    return out;
  }
  out.per_pixel_s = counts_per_pixel / coincidence_rate_per_s;
  out.total_s = out.per_pixel_s * static_cast<double>(pixels);
  out.bounded = true;
  return out;
}

}  // namespace ghostsim::budget
