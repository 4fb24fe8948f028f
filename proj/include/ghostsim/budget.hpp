#pragma once

// Closed-form rate and acquisition-time estimates for a coincidence
// fluorescence scan.  Everything here is analytic; the Monte Carlo pipeline
// is expected to land on these numbers within counting statistics.

namespace ghostsim::budget {

struct BudgetParams {
  double pair_rate_per_s = 4.0e6;
  double concentration_uM = 100.0;
  double epsilon_per_M_um = 20.0;
  double thickness_um = 20.0;
  double quantum_yield = 0.25;
  double collection_efficiency = 0.5;
  double bucket_efficiency = 0.7;
  double array_efficiency = 0.7;

  void validate() const;
};

struct BudgetBreakdown {
  double absorption_probability = 0.0;
  double absorbed_rate_per_s = 0.0;      // pairs whose probe arm is absorbed
  double fluorescence_rate_per_s = 0.0;  // after quantum yield
  double collected_rate_per_s = 0.0;     // after collection optics
  double coincidence_rate_per_s = 0.0;   // after both detector efficiencies
};

BudgetBreakdown photon_budget(const BudgetParams& params);

struct AcquisitionEstimate {
  double per_pixel_s = 0.0;
  double total_s = 0.0;
  bool bounded = false;  // false when the coincidence rate is not positive
};

// Time to reach `counts_per_pixel` coincidences in each of `pixels` resolution
// cells when the image is acquired one cell at a time.
AcquisitionEstimate acquisition_time(double coincidence_rate_per_s, double counts_per_pixel,
                                     int pixels);

}  // namespace ghostsim::budget
