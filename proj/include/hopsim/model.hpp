#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>

#include "hopsim/errors.hpp"

// Shared domain types. Internal unit system: millimeters, seconds,
// kilograms, radians. Forces cross into newtons (1 N = 1000 kg*mm/s^2)
// only at explicit conversion points; angles are degrees at external
// interfaces and radians inside.

namespace hopsim {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMmPerM = 1000.0;  // N = kg*m/s^2 = 1000 kg*mm/s^2

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Rigid planar body with a single surface-contact point given in polar
// form in the body frame.
struct RoverBody {
  double mass_kg = 0.591;
  double half_width_mm = 60.0;
  double half_height_mm = 50.0;
  double contact_offset_mm = 156.2;        // distance center -> contact point
  double contact_offset_angle_deg = 219.8; // from body x-axis, in [0, 360)
  // 0 selects the uniform-density rectangle default m*(a^2+b^2)/3.
  double moment_of_inertia_kgmm2 = 0.0;

  void validate() const {
    if (!(mass_kg > 0.0)) throw Error("RoverBody: mass must be > 0");
    if (!(half_width_mm > 0.0) || !(half_height_mm > 0.0))
      throw Error("RoverBody: half extents must be > 0");
    if (!(contact_offset_mm > 0.0))
      throw Error("RoverBody: contact_offset_mm must be > 0");
    if (contact_offset_angle_deg < 0.0 || contact_offset_angle_deg >= 360.0)
      throw Error("RoverBody: contact_offset_angle_deg must be in [0, 360)");
    if (moment_of_inertia_kgmm2 < 0.0)
      throw Error("RoverBody: moment_of_inertia_kgmm2 must be >= 0");
    if (moment_of_inertia_kgmm2 == 0.0 && !(inertia_kgmm2() > 0.0))
      throw Error("RoverBody: moment of inertia must be > 0");
  }

  // Moment of inertia about the center of mass.
  double inertia_kgmm2() const {
    if (moment_of_inertia_kgmm2 > 0.0) return moment_of_inertia_kgmm2;
    return mass_kg *
           (half_width_mm * half_width_mm + half_height_mm * half_height_mm) /
           3.0;
  }

  // Contact-point offset from the center of mass, body frame [mm].
  Vec2 contact_offset_body() const {
    const double a = deg_to_rad(contact_offset_angle_deg);
    return contact_offset_mm * Vec2(std::cos(a), std::sin(a));
  }
};

// One PWM drive command for the torquer motor.
struct MotorCommand {
  double duty_ratio = 1.0;      // fraction in [0, 1]
  double duration_s = std::numeric_limits<double>::infinity();
  double supply_voltage_v = 0.0;

  bool unbounded() const { return std::isinf(duration_s); }

  void validate() const {
    if (!(duty_ratio >= 0.0 && duty_ratio <= 1.0))
      throw Error("MotorCommand: duty_ratio must be in [0, 1]");
    if (!(supply_voltage_v >= 0.0))
      throw Error("MotorCommand: supply_voltage_v must be >= 0");
    if (!(duration_s > 0.0))
      throw Error("MotorCommand: duration_s must be > 0 or unbounded");
  }
};

// Surface environment: a flat half-plane at y = 0 with uniform gravity.
struct Environment {
  Vec2 gravity_mms2 = Vec2::Zero();
  double friction_coefficient = 1.0;
  double escape_velocity_mms = 200.0;

  void validate() const {
    if (!(friction_coefficient >= 0.0))
      throw Error("Environment: friction_coefficient must be >= 0");
    if (!(escape_velocity_mms >= 0.0))
      throw Error("Environment: escape_velocity_mms must be >= 0");
  }
};

enum class ContactPhase { Resting, Thrusting, Ballistic, Escaped };

inline const char* to_string(ContactPhase p) {
  switch (p) {
    case ContactPhase::Resting: return "Resting";
    case ContactPhase::Thrusting: return "Thrusting";
    case ContactPhase::Ballistic: return "Ballistic";
    case ContactPhase::Escaped: return "Escaped";
  }
  return "?";
}

// Full planar rigid-body state.
struct RoverState {
  Vec2 position_mm = Vec2::Zero();   // center of mass
  Vec2 velocity_mms = Vec2::Zero();
  double attitude_rad = 0.0;
  double angular_velocity_rads = 0.0;
  ContactPhase phase = ContactPhase::Resting;
};

// Contact offset rotated into the world frame [mm].
inline Vec2 contact_offset_world(const RoverState& s, const RoverBody& b) {
  const Vec2 p = b.contact_offset_body();
  const double c = std::cos(s.attitude_rad), sn = std::sin(s.attitude_rad);
  return Vec2(c * p.x() - sn * p.y(), sn * p.x() + c * p.y());
}

inline Vec2 contact_point(const RoverState& s, const RoverBody& b) {
  return s.position_mm + contact_offset_world(s, b);
}

// Velocity of the material point at the contact location [mm/s].
inline Vec2 contact_velocity(const RoverState& s, const RoverBody& b) {
  const Vec2 d = contact_offset_world(s, b);
  return s.velocity_mms + s.angular_velocity_rads * Vec2(-d.y(), d.x());
}

// Hop launch summary in the conventions of the published tables:
// theta_h is measured from the vertical (surface normal), so a purely
// vertical hop is 0 deg and atan2 takes (horizontal, vertical).
struct HopResult {
  double v_hx_mms = 0.0;
  double v_hy_mms = 0.0;
  double v_h_mms = 0.0;
  double theta_h_deg = 0.0;
  double t_h_s = 0.0;

  static HopResult from_velocity(const Vec2& v, double t_h);
};

struct HopPolar {
  double speed_mms = 0.0;
  double direction_deg = 0.0;  // from vertical
};

// (v_hx, v_hy) -> (v_h, theta_h). (0, 0) maps to speed 0, direction 0.
HopPolar hop_polar(double v_hx_mms, double v_hy_mms);

}  // namespace hopsim
