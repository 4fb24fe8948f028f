#include "ghostsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "ghostsim/units.hpp"

namespace ghostsim::optics {

ImageSolution solve_image_distance(double a_um, double b_um, double f_obj_um,
                                   double lambda1_nm, double lambda2_nm) {
  if (!(a_um > 0.0) || !(b_um > 0.0) || !(f_obj_um > 0.0) ||
      !(lambda1_nm > 0.0) || !(lambda2_nm > 0.0)) {
    throw std::invalid_argument(
        "solve_image_distance: distances and wavelengths must be positive");
  }
  const double d = a_um + (lambda2_nm / lambda1_nm) * b_um;
  if (std::fabs(d - f_obj_um) <= 1e-12 * f_obj_um) {
    throw std::invalid_argument(
        "solve_image_distance: unfolded distance equals f_obj, image at "
        "infinity");
  }
  ImageSolution out;
  out.s1_um = f_obj_um * d / (d - f_obj_um);
  out.virtual_image = out.s1_um < 0.0;
  return out;
}

ReferenceSolution solve_reference_distance(double s1_um, double a_um,
                                           double f_obj_um, double lambda1_nm,
                                           double lambda2_nm) {
  if (!(s1_um > 0.0) || !(a_um > 0.0) || !(f_obj_um > 0.0) ||
      !(lambda1_nm > 0.0) || !(lambda2_nm > 0.0)) {
    throw std::invalid_argument(
        "solve_reference_distance: inputs must be positive");
  }
  if (std::fabs(s1_um - f_obj_um) <= 1e-12 * f_obj_um) {
    throw std::invalid_argument(
        "solve_reference_distance: s1 equals f_obj, object side at infinity");
  }
  const double d = f_obj_um * s1_um / (s1_um - f_obj_um);
  ReferenceSolution out;
  out.b_um = (lambda1_nm / lambda2_nm) * (d - a_um);
  out.feasible = out.b_um >= 0.0;
  return out;
}

double lens_plane_x(const core::PhotonPairEvent& ev,
                    const core::OpticalLayout& layout) {
  return ev.birth_x_um + layout.a_um * ev.theta1_rad;
}

double trace_probe(const core::PhotonPairEvent& ev,
                   const core::OpticalLayout& layout) {
  const double x_l = lens_plane_x(ev, layout);
  const double theta_after = ev.theta1_rad - x_l / layout.f_obj_um;
  return x_l + layout.s1_um * theta_after;
}

double trace_reference(const core::PhotonPairEvent& ev,
                       const core::OpticalLayout& layout) {
  const double ratio = ev.lambda2_nm / ev.lambda1_nm;
  return ev.birth_x_um - layout.b_um * ratio * ev.theta1_rad;
}

double conjugate_map(double x2_um, const core::OpticalLayout& layout) {
  if (!layout.in_focus()) {
    throw std::invalid_argument(
        "conjugate_map: layout does not satisfy the imaging condition");
  }
  return -(layout.s1_um / layout.unfolded_distance_um()) * x2_um;
}

void FresnelKernelSpec::validate(const core::OpticalLayout& layout) const {
  if (!(aperture_half_width_um > 0.0)) {
    throw std::invalid_argument("FresnelKernelSpec: aperture must be positive");
  }
  if (!(grid_extent_um > 0.0)) {
    throw std::invalid_argument("FresnelKernelSpec: grid extent must be positive");
  }
  if (!(lambda1_nm > 0.0) || !(lambda2_nm > 0.0)) {
    throw std::invalid_argument("FresnelKernelSpec: wavelengths must be positive");
  }
  if (grid_points < 64 || grid_points % 2 == 0) {
    throw std::invalid_argument(
        "FresnelKernelSpec: grid_points must be odd and >= 64 (got " +
        std::to_string(grid_points) + ")");
  }
  const double diffraction_um = 1e-3 * lambda1_nm * layout.s1_um /
                                (2.0 * aperture_half_width_um);
  const double step = grid_extent_um / (grid_points - 1);
  if (step > diffraction_um / 8.0) {
    throw std::invalid_argument(
        "FresnelKernelSpec: grid step " + std::to_string(step) +
        " um does not resolve the diffraction width " +
        std::to_string(diffraction_um) + " um with >= 8 samples");
  }
}

namespace {

inline std::complex<double> cis(double t) {
  return {std::cos(t), std::sin(t)};
}

// Aperture-plane integral B(u) = sum over x_L in [-A, A] of
// exp(i (alpha x_L^2 - u x_L)), trapezoid weights. Tabulated on a
// uniform u grid and read back with Catmull-Rom interpolation; the
// integrand is band-limited to |x_L| <= A so a grid well below pi/A
// keeps the interpolation error negligible.
struct ApertureTable {
  double u0 = 0.0;
  double du = 1.0;
  std::vector<std::complex<double>> val;

  std::complex<double> eval(double u) const {
    const double s = (u - u0) / du;
    const auto i = static_cast<std::ptrdiff_t>(s);
    const double t = s - static_cast<double>(i);
    const auto n = static_cast<std::ptrdiff_t>(val.size());
    if (i < 1 || i + 2 >= n) {
      throw std::logic_error("ApertureTable: u outside tabulated range");
    }
    const auto p0 = val[i - 1], p1 = val[i], p2 = val[i + 1], p3 = val[i + 2];
    return 0.5 * (2.0 * p1 + (-p0 + p2) * t +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (t * t * t));
  }
};

ApertureTable build_aperture_table(double alpha, double A, double u_min,
                                   double u_max) {
  ApertureTable tab;
  const double pad = 8.0;
  tab.du = units::kPi / (48.0 * A);
  tab.u0 = u_min - pad * tab.du;
  const auto n_u = static_cast<std::size_t>(
                       std::ceil((u_max - tab.u0) / tab.du + pad)) +
                   4;

  // x_L sampling: resolve the fastest local phase 2 alpha A + |u|.
  const double slope =
      2.0 * std::fabs(alpha) * A + std::max(std::fabs(u_min), std::fabs(u_max));
  const double target = units::kPi / 10.0;
  auto n_l = static_cast<std::size_t>(std::ceil(2.0 * A * slope / target));
  n_l = std::max<std::size_t>(n_l | 1u, 257);
  const double dxl = 2.0 * A / static_cast<double>(n_l - 1);

  std::vector<std::complex<double>> quad_phase(n_l);
  std::vector<double> xl(n_l);
  for (std::size_t j = 0; j < n_l; ++j) {
    xl[j] = -A + static_cast<double>(j) * dxl;
    quad_phase[j] = cis(alpha * xl[j] * xl[j]);
  }

  tab.val.resize(n_u);
  for (std::size_t m = 0; m < n_u; ++m) {
    const double u = tab.u0 + static_cast<double>(m) * tab.du;
    // exp(-i u x_L) marched by a constant complex rotation.
    std::complex<double> rot = cis(-u * xl[0]);
    const std::complex<double> step = cis(-u * dxl);
    std::complex<double> acc = 0.5 * quad_phase[0] * rot;
    for (std::size_t j = 1; j + 1 < n_l; ++j) {
      rot *= step;
      acc += quad_phase[j] * rot;
    }
    rot *= step;
    acc += 0.5 * quad_phase[n_l - 1] * rot;
    tab.val[m] = acc * dxl;
  }
  return tab;
}

}  // namespace

PsfProfile biphoton_psf_1d(const core::OpticalLayout& layout,
                           const FresnelKernelSpec& spec, double x2_um) {
  layout.validate();
  spec.validate(layout);

  const double a = layout.a_um;
  const double b = layout.b_um;
  const double f = layout.f_obj_um;
  const double s1 = layout.s1_um;
  const double A = spec.aperture_half_width_um;
  const double k1 = 2.0 * units::kPi / (1e-3 * spec.lambda1_nm);
  const double k2 = 2.0 * units::kPi / (1e-3 * spec.lambda2_nm);
  const double d = a + (spec.lambda2_nm / spec.lambda1_nm) * b;

  // Output grid centered on the geometric conjugate point.
  const double x1_center = -(s1 / d) * x2_um;
  const int n = spec.grid_points;
  const double x1_step = spec.grid_extent_um / (n - 1);
  const double x1_lo = x1_center - 0.5 * spec.grid_extent_um;

  // Crystal-plane window: geometric shadow of the aperture as seen from
  // x2, widened by a stationary-phase margin measured in Fresnel zones
  // of the combined curvature beta.
  const double beta = 0.5 * (k2 / b + k1 / a);
  const double zone = std::sqrt(units::kPi / beta);
  const double c_center = a * x2_um / d;
  const double c_half = 1.25 * std::fabs(d - a) * A / d + 16.0 * zone;
  const double xc_lo = c_center - c_half;
  const double xc_hi = c_center + c_half;

  // March step: bound the largest local phase slope of the integrand.
  const double xc_abs = std::max(std::fabs(xc_lo), std::fabs(xc_hi));
  const double slope_max = k2 * (xc_abs + std::fabs(x2_um)) / b +
                           k1 * xc_abs / a + k1 * A / a;
  const double dxc = (units::kPi / 10.0) / slope_max;
  const auto n_c =
      static_cast<std::size_t>(std::ceil((xc_hi - xc_lo) / dxc)) + 1;

  // Inner aperture integral as a function of u = k1 (x_c/a + x1/s1).
  const double alpha = 0.5 * k1 * (1.0 / a - 1.0 / f + 1.0 / s1);
  const double x1_abs =
      std::max(std::fabs(x1_lo), std::fabs(x1_lo + spec.grid_extent_um));
  const double u_half = k1 * (xc_abs / a + x1_abs / s1);
  const ApertureTable tab = build_aperture_table(alpha, A, -u_half, u_half);

  // Per-crystal-point factor, independent of x1.
  std::vector<std::complex<double>> outer(n_c);
  std::vector<double> xc(n_c);
  const double step_c = (xc_hi - xc_lo) / static_cast<double>(n_c - 1);
  for (std::size_t j = 0; j < n_c; ++j) {
    xc[j] = xc_lo + static_cast<double>(j) * step_c;
    const double dx2 = xc[j] - x2_um;
    double w = (j == 0 || j + 1 == n_c) ? 0.5 : 1.0;
    outer[j] = w * step_c *
               cis(k2 * dx2 * dx2 / (2.0 * b) + k1 * xc[j] * xc[j] / (2.0 * a));
  }

  PsfProfile out;
  out.x_um.resize(n);
  out.intensity.resize(n);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x1 = x1_lo + i * x1_step;
    out.x_um[i] = x1;
    const double u_base = k1 * x1 / s1;
    std::complex<double> amp = 0.0;
    for (std::size_t j = 0; j < n_c; ++j) {
      amp += outer[j] * tab.eval(u_base + k1 * xc[j] / a);
    }
    const double inten = std::norm(amp);
    out.intensity[i] = inten;
    peak = std::max(peak, inten);
  }
  if (peak > 0.0) {
    for (double& v : out.intensity) v /= peak;
  }
  return out;
}

}  // namespace ghostsim::optics
