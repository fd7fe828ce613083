#pragma once

#include <array>

namespace coplan {

/// Power draw profiles. UAV power is a cubic in airspeed, UGV power is affine
/// in ground speed; both in watts with speeds in m/s.
struct EnergyModelParams {
  /// Coefficients of q^3, q^2, q, 1.
  std::array<double, 4> uav_poly{0.0461, -0.5834, -1.8761, 229.6};
  /// Coefficients of q, 1.
  std::array<double, 2> ugv_affine{464.8, 356.3};

  friend bool operator==(const EnergyModelParams&, const EnergyModelParams&) = default;
};

double uav_power(const EnergyModelParams& params, double speed);
double ugv_power(const EnergyModelParams& params, double speed);

inline double uav_power(double speed) { return uav_power(EnergyModelParams{}, speed); }
inline double ugv_power(double speed) { return ugv_power(EnergyModelParams{}, speed); }

}  // namespace coplan
