#pragma once

namespace ghostsim::core {

/// @brief One down-converted photon pair at the crystal plane.
///
/// Transverse geometry is 1-D. theta2 is measured on the opposite side
/// of the pump axis, so momentum conservation reads
///   sin(theta1)/lambda1 - sin(theta2)/lambda2 = 0
/// on the stored values and theta2 carries the same sign as theta1.
struct PhotonPairEvent {
  double birth_time_ns = 0.0;
  double birth_x_um = 0.0;
  double theta1_rad = 0.0;   // probe arm
  double theta2_rad = 0.0;   // reference arm, opposite-side convention
  double lambda1_nm = 0.0;   // probe wavelength
  double lambda2_nm = 0.0;   // reference wavelength
};

/// @brief Unfolded two-arm geometry, crystal at the origin plane.
///
/// The probe arm runs crystal -> (a) -> objective f_obj -> (s1) -> sample.
/// The reference arm runs crystal -> (b) -> position-resolving detector.
struct OpticalLayout {
  double pump_wavelength_nm = 351.0;
  double lambda1_nm = 702.0;
  double lambda2_nm = 702.0;
  double a_um = 1000.0;
  double b_um = 1000.0;
  double f_obj_um = 1000.0;
  double s1_um = 2000.0;

  double wavelength_ratio() const { return lambda2_nm / lambda1_nm; }

  /// Object-side distance of the unfolded system, a + (l2/l1) b.
  double unfolded_distance_um() const {
    return a_um + wavelength_ratio() * b_um;
  }

  /// Residual of 1/s1 + 1/d - 1/f_obj, zero when the sample plane is
  /// conjugate to the reference detector plane.
  double focus_residual_per_um() const;

  bool in_focus(double rel_tol = 1e-9) const;

  /// Throws std::invalid_argument on non-positive distances or
  /// wavelengths that violate frequency conservation.
  void validate() const;
};

/// Probe wavelength from pump and reference via 1/l1 = 1/lp - 1/l2.
/// Requires 0 < pump < reference; near-degenerate inputs give a large
/// finite result, which is the caller's problem to bound.
double signal_wavelength(double pump_nm, double reference_nm);

/// Reference-arm emission angle from the phase-matching relation
/// lambda2 sin(theta1) = lambda1 sin(theta2), opposite-side convention
/// (result has the same sign as theta1). Throws when the relation has
/// no real solution.
double reference_angle(double theta1_rad, double lambda1_nm,
                       double lambda2_nm);

}  // namespace ghostsim::core
