#include "hopsim/dynamics.hpp"

namespace hopsim {

namespace {

// Tolerances for branch selection. Velocities in mm/s, forces in
// kg*mm/s^2 (millinewtons).
constexpr double kSlideEps = 1e-9;
constexpr double kOmegaEps = 1e-12;
constexpr double kConeTolMn = 1e-6;  // 1e-9 N
constexpr double kAccelTol = 1e-9;

struct Branch {
  double omega_dot = 0.0;
  double ax = 0.0, ay = 0.0;
  double normal_mn = 0.0;    // kg*mm/s^2
  double friction_mn = 0.0;  // kg*mm/s^2
  bool valid = false;
};

}  // namespace

double friction_limit(double mu, double mass_kg, double gravity_mms2,
                      double push_n) {
  if (mu < 0.0) throw Error("friction_limit: mu must be >= 0");
  if (!(mass_kg > 0.0)) throw Error("friction_limit: mass must be > 0");
  if (gravity_mms2 < 0.0) throw Error("friction_limit: gravity must be >= 0");
  if (push_n < 0.0) throw Error("friction_limit: push force must be >= 0");
  const double weight_n = mass_kg * gravity_mms2 / kMmPerM;
  return mu * (weight_n + push_n);
}

double motor_torque(const MotorCommand& cmd, const MotorModel& motor,
                    double t_s) {
  if (t_s < 0.0) throw Error("motor_torque: t must be >= 0");
  if (!cmd.unbounded() && t_s >= cmd.duration_s) return 0.0;
  return motor.torque_gain_nmm_per_v * cmd.duty_ratio * cmd.supply_voltage_v;
}

ContactStep contact_step(const RoverState& state, const RoverBody& body,
                         const Environment& env, double torque_nmm) {
  const double m = body.mass_kg;
  const double inertia = body.inertia_kgmm2();
  const double mu = env.friction_coefficient;
  const Vec2 d = contact_offset_world(state, body);
  const Vec2 g = env.gravity_mms2;
  const double omega = state.angular_velocity_rads;
  const double w2 = omega * omega;
  const double torque = kMmPerM * torque_nmm;  // kg*mm^2/s^2

  const auto solve_stick = [&] {
    Branch b;
    b.omega_dot = (torque - m * (d.x() * g.y() - d.y() * g.x())) /
                  (inertia + m * d.squaredNorm());
    b.friction_mn = m * (b.omega_dot * d.y() + w2 * d.x() - g.x());
    b.normal_mn = m * (-b.omega_dot * d.x() + w2 * d.y() - g.y());
    b.ax = b.omega_dot * d.y() + w2 * d.x();
    b.ay = -b.omega_dot * d.x() + w2 * d.y();
    b.valid = b.normal_mn >= 0.0;
    return b;
  };

  // Normal constraint only; friction saturated at s*mu*N. Invalid when
  // the wedge coupling degenerates or the surface would have to pull.
  const auto solve_slip = [&](double s) {
    Branch b;
    const double lever = d.x() - s * mu * d.y();
    const double denom = inertia + m * d.x() * lever;
    if (denom <= 1e-9) return b;
    b.omega_dot = (torque + m * lever * (w2 * d.y() - g.y())) / denom;
    b.normal_mn = m * (-b.omega_dot * d.x() + w2 * d.y() - g.y());
    if (b.normal_mn < 0.0) return b;
    b.friction_mn = s * mu * b.normal_mn;
    b.ax = g.x() + b.friction_mn / m;
    b.ay = g.y() + b.normal_mn / m;
    b.valid = true;
    return b;
  };

  // Tangential contact-point acceleration; an incipient slide toward -s
  // must have s * a_cx <= 0 to be consistent with its friction sign.
  const auto tangential_accel = [&](const Branch& b) {
    return b.ax - b.omega_dot * d.y() - w2 * d.x();
  };

  const auto finish = [&](const Branch& b, ContactMode mode) {
    ContactStep out;
    out.acceleration_mms2 = Vec2(b.ax, b.ay);
    out.angular_acceleration_rads2 = b.omega_dot;
    out.forces.normal_n = b.normal_mn / kMmPerM;
    out.forces.friction_n = b.friction_mn / kMmPerM;
    out.forces.applied_torque_nmm = torque_nmm;
    out.mode = mode;
    return out;
  };

  const auto separated = [] {
    ContactStep out;
    out.separated = true;
    return out;
  };

  // A sustained slide keeps its kinetic branch as long as it is
  // consistent; otherwise fall through to the at-rest enumeration (the
  // slide is stopping or reversing within integrator resolution).
  const double slide = contact_velocity(state, body).x();
  if (std::abs(slide) > kSlideEps) {
    const Branch b = solve_slip(slide > 0.0 ? -1.0 : 1.0);
    if (b.valid) return finish(b, ContactMode::Slip);
  }

  const Branch stick = solve_stick();

  // At rest with no forward tipping: the resting face carries the load.
  if (std::abs(slide) <= kSlideEps && std::abs(omega) <= kOmegaEps &&
      stick.omega_dot >= 0.0) {
    Branch st;
    st.normal_mn = -m * g.y();
    st.friction_mn = -m * g.x();
    st.valid = true;
    if (st.normal_mn < 0.0) return separated();
    if (std::abs(st.friction_mn) <= mu * st.normal_mn + kConeTolMn)
      return finish(st, ContactMode::Static);
    const Branch b = solve_slip(st.friction_mn > 0.0 ? 1.0 : -1.0);
    return b.valid ? finish(b, ContactMode::Slip) : separated();
  }

  if (stick.valid &&
      std::abs(stick.friction_mn) <= mu * stick.normal_mn + kConeTolMn)
    return finish(stick, ContactMode::Stick);

  // Stick cannot hold: enumerate incipient slides, preferring the
  // direction the saturated demand points to.
  const double s_pref = stick.friction_mn > 0.0 ? 1.0 : -1.0;
  for (const double s : {s_pref, -s_pref}) {
    const Branch b = solve_slip(s);
    if (b.valid && s * tangential_accel(b) <= kAccelTol)
      return finish(b, ContactMode::Slip);
  }
  return separated();
}

}  // namespace hopsim
