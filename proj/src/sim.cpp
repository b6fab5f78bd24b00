#include "hopsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hopsim {

namespace {

constexpr int kRefineIters = 24;  // bisection depth for event instants

bool in_contact(ContactPhase p) {
  return p == ContactPhase::Resting || p == ContactPhase::Thrusting;
}

// One semi-implicit Euler step under the given accelerations.
RoverState advance(const RoverState& s, const Vec2& acc, double omega_dot,
                   double h) {
  RoverState n = s;
  n.velocity_mms += h * acc;
  n.angular_velocity_rads += h * omega_dot;
  n.position_mm += h * n.velocity_mms;
  n.attitude_rad += h * n.angular_velocity_rads;
  return n;
}

// Re-impose the contact constraints after a discrete step: the contact
// point stays on the surface with zero normal velocity; stick also pins
// the tangential velocity, static pins everything.
void project_contact(RoverState& s, const RoverBody& body, ContactMode mode) {
  if (mode == ContactMode::Static) {
    s.velocity_mms = Vec2::Zero();
    s.angular_velocity_rads = 0.0;
    return;
  }
  const Vec2 d = contact_offset_world(s, body);
  s.position_mm.y() = -d.y();
  s.velocity_mms.y() = -s.angular_velocity_rads * d.x();
  if (mode == ContactMode::Stick)
    s.velocity_mms.x() = s.angular_velocity_rads * d.y();
}

struct Sampler {
  Trajectory traj;
  double interval;
  double next_t = 0.0;
  TrajectorySample prev;

  explicit Sampler(double interval_s) : interval(interval_s) {}

  static RoverState lerp(const TrajectorySample& a, const TrajectorySample& b,
                         double t) {
    if (b.t_s <= a.t_s) return b.state;
    const double u = (t - a.t_s) / (b.t_s - a.t_s);
    RoverState s;
    s.position_mm = (1.0 - u) * a.state.position_mm + u * b.state.position_mm;
    s.velocity_mms = (1.0 - u) * a.state.velocity_mms + u * b.state.velocity_mms;
    s.attitude_rad = (1.0 - u) * a.state.attitude_rad + u * b.state.attitude_rad;
    s.angular_velocity_rads = (1.0 - u) * a.state.angular_velocity_rads +
                              u * b.state.angular_velocity_rads;
    s.phase = a.state.phase;
    return s;
  }

  void start(double t, const RoverState& s,
             const std::optional<ContactForces>& f) {
    prev = TrajectorySample{t, s, f};
    traj.samples.push_back(prev);
    next_t = t + interval;
  }

  void push(double t, const RoverState& s,
            const std::optional<ContactForces>& f) {
    TrajectorySample node{t, s, f};
    while (next_t <= t + 1e-15) {
      TrajectorySample out;
      out.t_s = next_t;
      out.state = lerp(prev, node, next_t);
      out.forces = prev.forces;
      traj.samples.push_back(out);
      next_t += interval;
    }
    prev = node;
  }
};

}  // namespace

RoverState make_resting_state(const RoverBody& body, double attitude_rad) {
  RoverState s;
  s.attitude_rad = attitude_rad;
  const Vec2 d = contact_offset_world(s, body);
  s.position_mm = -d;  // contact point at the origin
  s.phase = ContactPhase::Resting;
  return s;
}

bool detect_escape(const HopResult& result, const Environment& env) {
  return result.v_h_mms > env.escape_velocity_mms;
}

RoverState bounce(const RoverState& state, const RoverBody& body,
                  const Environment& env, double restitution) {
  const double m = body.mass_kg;
  const double inertia = body.inertia_kgmm2();
  const double mu = env.friction_coefficient;
  const Vec2 d = contact_offset_world(state, body);
  const Vec2 vc = contact_velocity(state, body);

  // 2x2 collision matrix K mapping a contact impulse (kg*mm/s) to the
  // contact-point velocity change: K = (1/m)I + (1/J) perp(d) perp(d)^T.
  const Vec2 perp(-d.y(), d.x());
  Eigen::Matrix2d K;
  K(0, 0) = 1.0 / m + perp.x() * perp.x() / inertia;
  K(0, 1) = perp.x() * perp.y() / inertia;
  K(1, 0) = K(0, 1);
  K(1, 1) = 1.0 / m + perp.y() * perp.y() / inertia;

  const Vec2 vc_target(0.0, -restitution * vc.y());
  const Vec2 rhs = vc_target - vc;
  const double det = K(0, 0) * K(1, 1) - K(0, 1) * K(1, 0);
  Vec2 impulse((K(1, 1) * rhs.x() - K(0, 1) * rhs.y()) / det,
               (K(0, 0) * rhs.y() - K(1, 0) * rhs.x()) / det);

  // Outside the friction cone: slide with |Px| = mu*Py, normal
  // restitution still enforced.
  if (std::abs(impulse.x()) > mu * impulse.y()) {
    const double s = impulse.x() > 0.0 ? 1.0 : -1.0;
    const double denom = K(1, 0) * s * mu + K(1, 1);
    const double py = (vc_target.y() - vc.y()) / denom;
    impulse = Vec2(s * mu * py, py);
  }

  RoverState out = state;
  out.velocity_mms += impulse / m;
  out.angular_velocity_rads += (d.x() * impulse.y() - d.y() * impulse.x()) /
                               inertia;
  return out;
}

HopRun run_hop(const RoverBody& body, const Environment& env,
               const MotorCommand& cmd, const MotorModel& motor,
               const SimConfig& config) {
  body.validate();
  env.validate();
  cmd.validate();
  motor.validate();
  config.validate();

  const double h = config.step_size_s;
  const double mu = env.friction_coefficient;

  RoverState state =
      make_resting_state(body, deg_to_rad(config.initial_attitude_deg));
  double t = 0.0;

  Sampler sampler(config.sample_interval_s);
  std::optional<HopResult> hop;

  const auto body_torque = [&](double at) {
    return -motor_torque(cmd, motor, at);  // reaction of the flywheel drive
  };
  const auto motor_on = [&](double at) {
    return motor_torque(cmd, motor, at) > 0.0;
  };

  ContactStep cs = contact_step(state, body, env, body_torque(0.0));
  state.phase = motor_on(0.0) ? ContactPhase::Thrusting : ContactPhase::Resting;
  sampler.start(0.0, state, cs.separated ? std::nullopt
                                         : std::optional(cs.forces));

  bool done = false;
  while (!done && t < config.max_time_s - 1e-15) {
    if (in_contact(state.phase)) {
      cs = contact_step(state, body, env, body_torque(t));
      if (cs.separated) {
        // Entering contact was already rejected; treat as ballistic.
        state.phase = ContactPhase::Ballistic;
        continue;
      }

      // Settle: in contact, motor off, essentially at rest.
      if (!motor_on(t) && state.velocity_mms.norm() < config.settle_speed_mms &&
          std::abs(state.angular_velocity_rads * body.contact_offset_mm) <
              config.settle_speed_mms) {
        state.phase = ContactPhase::Resting;
        break;
      }
      state.phase = motor_on(t) ? ContactPhase::Thrusting
                                : ContactPhase::Resting;

      RoverState next = advance(state, cs.acceleration_mms2,
                                cs.angular_acceleration_rads2, h);
      project_contact(next, body, cs.mode);
      const ContactStep peek = contact_step(next, body, env, body_torque(t + h));

      if (peek.separated) {
        // Refine the separation instant within (t, t+h] by bisecting the
        // substep length.
        double lo = 0.0, hi = h;
        RoverState sep_state = state;
        for (int i = 0; i < kRefineIters; ++i) {
          const double mid = 0.5 * (lo + hi);
          RoverState probe = advance(state, cs.acceleration_mms2,
                                     cs.angular_acceleration_rads2, mid);
          project_contact(probe, body, cs.mode);
          if (contact_step(probe, body, env, body_torque(t + mid)).separated) {
            hi = mid;
          } else {
            lo = mid;
            sep_state = probe;
          }
        }
        t += lo;
        state = sep_state;
        state.phase = ContactPhase::Ballistic;
        if (!hop) {
          hop = HopResult::from_velocity(state.velocity_mms, t);
          if (detect_escape(*hop, env)) {
            state.phase = ContactPhase::Escaped;
            sampler.push(t, state, std::nullopt);
            done = true;
            continue;
          }
        }
        sampler.push(t, state, std::nullopt);
        continue;
      }

      t += h;
      state = next;
      sampler.push(t, state, cs.forces);
    } else {
      // Ballistic: gravity on the center of mass; the torquer reaction
      // still spins the body (attitude control is not modeled).
      const double omega_dot =
          kMmPerM * body_torque(t) / body.inertia_kgmm2();
      RoverState next = advance(state, env.gravity_mms2, omega_dot, h);

      if (contact_point(state, body).y() >= 0.0 &&
          contact_point(next, body).y() < 0.0) {
        // Refine the crossing instant.
        double lo = 0.0, hi = h;
        for (int i = 0; i < kRefineIters; ++i) {
          const double mid = 0.5 * (lo + hi);
          const RoverState probe = advance(state, env.gravity_mms2, omega_dot, mid);
          (contact_point(probe, body).y() < 0.0 ? hi : lo) = mid;
        }
        RoverState impact = advance(state, env.gravity_mms2, omega_dot, lo);
        impact.position_mm.y() -= contact_point(impact, body).y();
        const double approach = contact_velocity(impact, body).y();

        if (approach < -1e-6) {
          t += lo;
          state = bounce(impact, body, env, config.restitution);
          const ContactStep touch =
              contact_step(state, body, env, body_torque(t));
          if (std::abs(contact_velocity(state, body).y()) < 1e-6 &&
              !touch.separated) {
            // Rebound spent and the contact solve holds: sustained
            // contact resumes.
            state.phase =
                motor_on(t) ? ContactPhase::Thrusting : ContactPhase::Resting;
            sampler.push(t, state, touch.forces);
          } else {
            sampler.push(t, state, std::nullopt);
          }
          continue;
        }
        // Grazing crossing (the whirling contact point skims the surface
        // within integrator resolution): re-enter contact when the solve
        // holds, otherwise fly through without an impulse.
        const ContactStep touch =
            contact_step(impact, body, env, body_torque(t + lo));
        if (!touch.separated) {
          t += lo;
          state = impact;
          state.phase =
              motor_on(t) ? ContactPhase::Thrusting : ContactPhase::Resting;
          sampler.push(t, state, touch.forces);
          continue;
        }
      }

      t += h;
      state = next;
      sampler.push(t, state, std::nullopt);
    }
  }

  if (!hop)
    throw NoSeparationError("body never separated from the surface (v_h "
                            "would be undefined); check duty/torque");

  HopRun out;
  out.hop = *hop;
  out.trajectory = std::move(sampler.traj);
  out.trajectory.sample_interval_s = config.sample_interval_s;
  return out;
}

MotorModel calibrate_motor_gain(const HopResult& reference,
                                const RoverBody& body, const Environment& env,
                                const MotorCommand& cmd,
                                const SimConfig& config) {
  if (!(reference.v_h_mms > 0.0))
    throw Error("calibrate_motor_gain: reference v_h must be > 0");

  const auto speed_for = [&](double gain) {
    MotorModel m{gain};
    try {
      return run_hop(body, env, cmd, m, config).hop.v_h_mms;
    } catch (const NoSeparationError&) {
      return 0.0;
    }
  };

  double lo = 0.0;
  double hi = 1e-6;
  bool bracketed = false;
  for (int i = 0; i < 60; ++i) {
    if (speed_for(hi) >= reference.v_h_mms) {
      bracketed = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!bracketed)
    throw NoConvergenceError(
        "calibrate_motor_gain: failed to bracket the reference speed");

  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = speed_for(mid);
    if (std::abs(v - reference.v_h_mms) < 1e-4) {
      lo = hi = mid;
      break;
    }
    (v < reference.v_h_mms ? lo : hi) = mid;
  }
  MotorModel out{0.5 * (lo + hi)};
  out.validate();
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "t,x,y,attitude,vx,vy,omega,phase,N,f\n";
  char buf[320];
  for (const TrajectorySample& s : trajectory.samples) {
    const double n = s.forces ? s.forces->normal_n : 0.0;
    const double f = s.forces ? s.forces->friction_n : 0.0;
    std::snprintf(buf, sizeof buf,
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%s,%.12g,%.12g\n",
                  s.t_s,
                  s.state.position_mm.x(), s.state.position_mm.y(),
                  s.state.attitude_rad, s.state.velocity_mms.x(),
                  s.state.velocity_mms.y(), s.state.angular_velocity_rads,
                  to_string(s.state.phase), n, f);
    os << buf;
  }
}

}  // namespace hopsim
