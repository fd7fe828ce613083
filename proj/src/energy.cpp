#include "coplan/energy.hpp"

#include "coplan/error.hpp"

namespace coplan {

double uav_power(const EnergyModelParams& params, double speed) {
  if (!(speed >= 0.0)) throw Error("uav_power: speed must be nonnegative");
  const auto& c = params.uav_poly;
  return ((c[0] * speed + c[1]) * speed + c[2]) * speed + c[3];
}

double ugv_power(const EnergyModelParams& params, double speed) {
  if (!(speed >= 0.0)) throw Error("ugv_power: speed must be nonnegative");
  return params.ugv_affine[0] * speed + params.ugv_affine[1];
}

}  // namespace coplan
