#pragma once

#include "hopsim/model.hpp"

// Contact-phase physics: the Coulomb friction law, the quasi-static PWM
// torquer model, and the single-contact-point rigid-body solve that
// produces a hop.
//
// Sign conventions: the surface is y = 0 with the body above; torques and
// angular rates are counterclockwise-positive. The commanded motor torque
// is the flywheel drive; the body feels the reaction, so run_hop passes
// -motor_torque here. With the contact corner to the right of the center
// of mass, that clockwise reaction pivots the body up and toward +x.

namespace hopsim {

// Forces at the contact point plus the torque applied about the center
// of mass during the step. Forces in newtons, torque in N*mm.
struct ContactForces {
  double normal_n = 0.0;    // >= 0, surface cannot pull
  double friction_n = 0.0;  // tangential, |f| <= mu*N
  double applied_torque_nmm = 0.0;
};

// Quasi-static torquer law: torque = gain * duty * voltage. The single
// gain constant is calibrated against a reference hop (see sim module).
struct MotorModel {
  double torque_gain_nmm_per_v = 1.0;

  void validate() const {
    if (!(torque_gain_nmm_per_v > 0.0))
      throw Error("MotorModel: torque_gain_nmm_per_v must be > 0");
  }
};

// Coulomb traction bound f = mu*(m*g + F). `gravity_mms2` is the
// magnitude of the downward gravity component in mm/s^2 (converted to
// m/s^2 internally so the result is in newtons); `push_n` is the
// artificial pushing force in newtons. With F = 0 this is the wheeled
// bound mu*m*g; for m*g << F it approaches mu*F.
double friction_limit(double mu, double mass_kg, double gravity_mms2,
                      double push_n);

// Commanded torque magnitude at elapsed time t: gain*duty*voltage while
// t < duration (always, if unbounded), 0 afterwards.
double motor_torque(const MotorCommand& cmd, const MotorModel& motor,
                    double t_s);

enum class ContactMode {
  Static,  // resting support; no motion
  Stick,   // pivoting about the contact point, no slide
  Slip     // pivoting while the contact point slides, f = +-mu*N
};

// Result of one contact solve. When `separated` is set the constraint
// would require a negative normal force and the body leaves the surface;
// the remaining fields are not meaningful.
struct ContactStep {
  bool separated = false;
  Vec2 acceleration_mms2 = Vec2::Zero();
  double angular_acceleration_rads2 = 0.0;
  ContactForces forces;
  ContactMode mode = ContactMode::Static;
};

// Solves the planar rigid-body equations with the contact point
// constrained to the surface, for a body in Resting or Thrusting phase
// with the contact point on the surface.
//
// Pivot (stick) branch: both contact-point acceleration components are
// zero, giving
//   omega_dot = (T - m*(d x g)) / (I + m*|d|^2)
//   N = m*(-omega_dot*d_x + omega^2*d_y - g_y)
//   f = m*( omega_dot*d_y + omega^2*d_x - g_x)
// with d the world-frame center->contact offset and T the body torque in
// kg*mm^2/s^2. Stick holds while |f| <= mu*N; otherwise the slip branch
// constrains only the normal direction and sets f = s*mu*N with s
// opposing the slide (or the saturated stick demand when starting from
// rest).
//
// A body at rest whose pivot solve would rotate it backward (away from
// the hop direction, i.e. omega_dot >= 0) is held by its resting face:
// static support with N = -m*g_y and f = -m*g_x, clamped to the cone.
//
// `torque_nmm` is the signed torque on the body about its center of mass.
ContactStep contact_step(const RoverState& state, const RoverBody& body,
                         const Environment& env, double torque_nmm);

}  // namespace hopsim
