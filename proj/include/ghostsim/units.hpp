#pragma once

// Unit conventions used throughout the library:
//   length um, time ns, wavelength nm, angle rad,
//   concentration uM, extinction 1/(M um), rates 1/s.
// Conversions happen inside the operations that need them, never at
// call sites.

namespace ghostsim::units {

inline constexpr double kNsPerS = 1.0e9;

/// Micromolar to molar.
inline constexpr double kMolarPerMicromolar = 1.0e-6;

/// Gaussian FWHM = 2*sqrt(2 ln 2) * sigma.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

inline constexpr double fwhm_to_sigma(double fwhm) {
  return fwhm / kFwhmPerSigma;
}

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace ghostsim::units
