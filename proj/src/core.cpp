#include "ghostsim/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ghostsim::core {

double signal_wavelength(double pump_nm, double reference_nm) {
  if (!(pump_nm > 0.0)) {
    throw std::invalid_argument("signal_wavelength: pump must be positive");
  }
  if (!(reference_nm > pump_nm)) {
    throw std::invalid_argument(
        "signal_wavelength: reference wavelength must exceed the pump "
        "(got pump=" + std::to_string(pump_nm) +
        " nm, reference=" + std::to_string(reference_nm) + " nm)");
  }
  return 1.0 / (1.0 / pump_nm - 1.0 / reference_nm);
}

double reference_angle(double theta1_rad, double lambda1_nm,
                       double lambda2_nm) {
  if (!(lambda1_nm > 0.0) || !(lambda2_nm > 0.0)) {
    throw std::invalid_argument("reference_angle: wavelengths must be positive");
  }
  const double s = std::sin(theta1_rad) * lambda2_nm / lambda1_nm;
  if (std::fabs(s) > 1.0) {
    throw std::domain_error(
        "reference_angle: no propagating partner for sin(theta1)*l2/l1 = " +
        std::to_string(s));
  }
  return std::asin(s);
}

double OpticalLayout::focus_residual_per_um() const {
  return 1.0 / s1_um + 1.0 / unfolded_distance_um() - 1.0 / f_obj_um;
}

bool OpticalLayout::in_focus(double rel_tol) const {
  return std::fabs(focus_residual_per_um()) <= rel_tol / f_obj_um;
}

void OpticalLayout::validate() const {
  if (!(pump_wavelength_nm > 0.0) || !(lambda1_nm > 0.0) ||
      !(lambda2_nm > 0.0)) {
    throw std::invalid_argument("OpticalLayout: wavelengths must be positive");
  }
  if (!(pump_wavelength_nm < lambda1_nm) ||
      !(pump_wavelength_nm < lambda2_nm)) {
    throw std::invalid_argument(
        "OpticalLayout: pump wavelength must be shorter than both arms");
  }
  const double lhs = 1.0 / lambda1_nm + 1.0 / lambda2_nm;
  const double rhs = 1.0 / pump_wavelength_nm;
  if (std::fabs(lhs - rhs) > 1e-9 * rhs) {
    throw std::invalid_argument(
        "OpticalLayout: 1/l1 + 1/l2 must equal 1/l_pump");
  }
  if (!(a_um > 0.0) || !(b_um > 0.0) || !(f_obj_um > 0.0) ||
      !(s1_um > 0.0)) {
    throw std::invalid_argument("OpticalLayout: distances must be positive");
  }
}

}  // namespace ghostsim::core
