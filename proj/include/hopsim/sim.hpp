#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "hopsim/dynamics.hpp"
#include "hopsim/model.hpp"

// Time integration of the full hop lifecycle: thrust, separation,
// ballistic flight, bounce, settle or escape, with uniform trajectory
// sampling. Fixed-step semi-implicit (velocity-then-position) Euler;
// separation and impact instants are refined by bisection.

namespace hopsim {

struct SimConfig {
  double step_size_s = 1e-4;
  double max_time_s = 10.0;
  double restitution = 0.1;
  double settle_speed_mms = 1.0;
  double sample_interval_s = 1.0 / 30.0;  // video frame rate of the rig
  double initial_attitude_deg = 83.2;     // resting attitude; see README

  void validate() const {
    if (!(step_size_s > 0.0) || step_size_s > sample_interval_s)
      throw Error("SimConfig: need 0 < step_size_s <= sample_interval_s");
    if (!(restitution >= 0.0 && restitution <= 1.0))
      throw Error("SimConfig: restitution must be in [0, 1]");
    if (!(max_time_s > 0.0)) throw Error("SimConfig: max_time_s must be > 0");
    if (!(settle_speed_mms >= 0.0))
      throw Error("SimConfig: settle_speed_mms must be >= 0");
  }
};

struct TrajectorySample {
  double t_s = 0.0;
  RoverState state;
  std::optional<ContactForces> forces;  // absent while airborne
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double sample_interval_s = 1.0 / 30.0;
};

struct HopRun {
  HopResult hop;
  Trajectory trajectory;
};

// Resting initial state with the contact point at the world origin.
RoverState make_resting_state(const RoverBody& body, double attitude_rad);

// Integrates from rest under `cmd` until max_time, settle, or escape.
// The HopResult is taken at the first separation (center-of-mass
// velocity, with t_h the torquer-start -> separation interval refined to
// within step_size/16). Throws NoSeparationError if the body never
// leaves the surface.
HopRun run_hop(const RoverBody& body, const Environment& env,
               const MotorCommand& cmd, const MotorModel& motor,
               const SimConfig& config);

// True iff the launch speed exceeds the environment's escape velocity.
bool detect_escape(const HopResult& result, const Environment& env);

// Impulsive impact at a penetrating contact point: the normal velocity
// component reverses scaled by `restitution`, the tangential component is
// reduced by impulsive Coulomb friction consistent with env's mu. Total
// kinetic energy never increases.
RoverState bounce(const RoverState& state, const RoverBody& body,
                  const Environment& env, double restitution);

// Finds the torque gain reproducing reference.v_h within 0.1 mm/s by
// monotone bisection (v_h is nondecreasing in the gain). Throws
// NoConvergenceError if 60 doublings fail to bracket the target.
MotorModel calibrate_motor_gain(const HopResult& reference,
                                const RoverBody& body, const Environment& env,
                                const MotorCommand& cmd,
                                const SimConfig& config);

// CSV export: header `t,x,y,attitude,vx,vy,omega,phase,N,f`, one row per
// sample (units s, mm, rad, mm/s, rad/s, phase name, newtons).
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace hopsim
