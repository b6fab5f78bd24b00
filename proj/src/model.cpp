#include "hopsim/model.hpp"

namespace hopsim {

HopPolar hop_polar(double v_hx_mms, double v_hy_mms) {
  HopPolar p;
  p.speed_mms = std::hypot(v_hx_mms, v_hy_mms);
  if (v_hx_mms == 0.0 && v_hy_mms == 0.0) {
    p.direction_deg = 0.0;
  } else {
    p.direction_deg = rad_to_deg(std::atan2(v_hx_mms, v_hy_mms));
  }
  return p;
}

HopResult HopResult::from_velocity(const Vec2& v, double t_h) {
  HopResult r;
  r.v_hx_mms = v.x();
  r.v_hy_mms = v.y();
  const HopPolar p = hop_polar(v.x(), v.y());
  r.v_h_mms = p.speed_mms;
  r.theta_h_deg = p.direction_deg;
  r.t_h_s = t_h;
  return r;
}

}  // namespace hopsim
