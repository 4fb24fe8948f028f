#pragma once

#include <vector>

#include "ghostsim/core.hpp"

namespace ghostsim::optics {

struct ImageSolution {
  double s1_um = 0.0;
  bool virtual_image = false;  // s1 < 0: image on the object side
};

/// Solve 1/s1 + 1/d = 1/f_obj for s1, with d = a + (l2/l1) b.
/// Throws when d == f_obj (image at infinity). A negative s1 is
/// returned as-is with virtual_image set.
ImageSolution solve_image_distance(double a_um, double b_um, double f_obj_um,
                                   double lambda1_nm, double lambda2_nm);

struct ReferenceSolution {
  double b_um = 0.0;
  bool feasible = false;  // false when the required b is negative
};

/// Invert the imaging condition for the reference-arm distance:
/// b = (l1/l2) (f s1/(s1 - f) - a). Throws when s1 == f_obj.
ReferenceSolution solve_reference_distance(double s1_um, double a_um,
                                           double f_obj_um, double lambda1_nm,
                                           double lambda2_nm);

/// Transverse position where the probe ray crosses the objective plane.
double lens_plane_x(const core::PhotonPairEvent& ev,
                    const core::OpticalLayout& layout);

/// Paraxial ABCD trace of the probe ray to the sample plane:
/// x_L = birth_x + a theta1, kink -x_L/f at the lens, then s1 of drift.
double trace_probe(const core::PhotonPairEvent& ev,
                   const core::OpticalLayout& layout);

/// Paraxial trace of the reference ray to the position detector. The
/// stored theta2 lives on the opposite side of the pump axis, so in lab
/// coordinates the slope enters negated: x2 = birth_x - b (l2/l1) theta1.
/// The linear slope map (not the asin form) is used so that the
/// conjugate-plane cancellation is exact.
double trace_reference(const core::PhotonPairEvent& ev,
                       const core::OpticalLayout& layout);

/// Object-plane point conjugate to a reference-detector position:
/// x1 = -(s1/d) x2. Requires the layout to satisfy the imaging
/// condition to 1e-9 relative.
double conjugate_map(double x2_um, const core::OpticalLayout& layout);

/// @brief Controls for the two-photon point-spread quadrature.
///
/// The output grid has grid_points samples spanning grid_extent_um,
/// centered on the conjugate point of the fixed reference position.
/// Wavelengths may differ from the layout's nominal ones to probe
/// chromatic behaviour.
struct FresnelKernelSpec {
  double aperture_half_width_um = 50.0;  // hard edge at the objective
  double grid_extent_um = 112.0;
  int grid_points = 129;
  double lambda1_nm = 702.0;
  double lambda2_nm = 702.0;

  /// Throws unless grid_points is odd and >= 64 and the grid step
  /// resolves the diffraction width l1 s1 / (2A) with >= 8 samples.
  void validate(const core::OpticalLayout& layout) const;
};

struct PsfProfile {
  std::vector<double> x_um;       // sample-plane coordinate
  std::vector<double> intensity;  // normalized to unit peak
};

/// Coincidence point-spread profile |integral dr_c h2(x2;r_c) h1(x1;r_c)|^2
/// by direct quadrature. h2 is a Fresnel propagator over b at lambda2;
/// h1 is Fresnel over a, a thin-lens phase with a hard aperture of
/// half-width A at f_obj, and Fresnel over s1, all at lambda1. The
/// crystal-plane integral is marched over the region geometrically fed
/// through the aperture plus a stationary-phase margin.
PsfProfile biphoton_psf_1d(const core::OpticalLayout& layout,
                           const FresnelKernelSpec& spec, double x2_um);

}  // namespace ghostsim::optics
