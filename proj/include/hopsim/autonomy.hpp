#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "hopsim/errors.hpp"

// Onboard autonomy subsystems as deterministic state machines: thermal
// gating of the CPU, capacitor-backed power budgeting, image downlink
// prioritization, sun-sensor direction finding, and day/night
// localization on a spherical asteroid model.

namespace hopsim {

using Vec3 = Eigen::Vector3d;

enum class CpuState { Running, Shutdown };

inline const char* to_string(CpuState s) {
  return s == CpuState::Running ? "Running" : "Shutdown";
}

// Thermal automaton parameters. The device relaxes toward ambient with a
// first-order lag (the MLI blanket slows heat transfer); the CPU wakes
// and sleeps with hysteresis around the working range; capacitors degrade
// permanently after sustained episodes above the overheat threshold.
struct ThermalConfig {
  double time_constant_s = 1800.0;
  double min_working_c = -50.0;
  double max_working_c = 80.0;
  double hysteresis_c = 5.0;
  double degrade_threshold_c = 130.0;
  double episode_duration_s = 3600.0;  // time above threshold that counts
  int episodes_to_unusable = 2;
};

struct RoverHealth {
  double device_temperature_c = 25.0;
  CpuState cpu_state = CpuState::Running;
  double capacitor_voltage_v = 4.6;
  double capacitor_capacitance_f = 20.0;
  double capacitor_degradation = 0.0;  // fraction of lost capacity
  int overheat_exposure = 0;           // completed overheat episodes

  // Progress of the current above-threshold episode.
  double episode_above_s = 0.0;
  bool episode_counted = false;

  double effective_capacitance_f() const {
    return capacitor_capacitance_f * (1.0 - capacitor_degradation);
  }
};

// Advances temperature toward `ambient_c` over dt with the exact
// first-order solution, updates CPU state (hysteresis), and accrues
// capacitor degradation while above the overheat threshold. Threshold
// crossings inside dt are resolved analytically.
RoverHealth thermal_step(const RoverHealth& health, const ThermalConfig& cfg,
                         double ambient_c, double dt_s);

// True when the temperature has entered the hysteresis margin next to a
// working-range bound: the wake/sleep boundary is near, so RAM contents
// should be persisted.
bool near_shutdown(const RoverHealth& health, const ThermalConfig& cfg);

struct ImageRecord {
  int id = 0;
  long long compressed_size_bytes = 0;
  double information_score = 0.0;
  double priority = 0.0;
  bool stored = false;
};

// Applies the invariants: priority proportional to the score with one
// global constant, zero-score records never stored.
ImageRecord make_image_record(int id, long long compressed_size_bytes,
                              double information_score,
                              double priority_scale = 1.0);

// Persists records in descending priority (ties by smaller id) until the
// flash capacity is exhausted; the result is a priority-prefix. Returns
// the persisted ids in plan order.
std::vector<int> pre_shutdown_save(const std::vector<ImageRecord>& ram_records,
                                   long long flash_capacity_bytes);

struct PowerBudget {
  double solar_power_w = 2.2;  // attitude/distance dependent, max at 1 AU
  std::map<std::string, double> load_table_w = {
      {"actuators", 2.6},
      {"communication", 1.8},
      {"camera", 8.0},
      {"computer", 0.8},
  };
  double floor_voltage_v = 0.0;  // capacitor may not discharge below this
};

struct PowerDecision {
  bool permitted = false;
  double capacitor_draw_j = 0.0;
};

// Permits the activity iff solar power plus available capacitor energy
// (1/2*C_eff*(V^2 - V_floor^2), C_eff = C*(1 - degradation)) covers
// load*duration. Throws UnknownActivityError for ids missing from the
// load table.
PowerDecision power_gate(const PowerBudget& budget, const RoverHealth& health,
                         const std::string& activity, double duration_s);

// Removes the drawn energy from the capacitor.
RoverHealth discharge_capacitor(const RoverHealth& health, double joules);

struct PlanEntry {
  int id = 0;
  double planned_bits = 0.0;  // may be partial for the last record
  double total_bits = 0.0;
};

struct TransmissionPlan {
  std::vector<PlanEntry> entries;
  double budget_bits = 0.0;
};

// Zero-score records are excluded outright; the rest are ordered by
// descending priority (ties by smaller id) and truncated to
// bandwidth*window bits, partial transmission of the last record allowed.
TransmissionPlan select_images(const std::vector<ImageRecord>& stored,
                               double bandwidth_bps, double window_s);

// Six intensity-only photo detectors; face normals default to the
// +-x/+-y/+-z layout.
struct SunSensorLayout {
  std::array<Vec3, 6> normals = {
      Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
      Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1),
  };
};

struct SunObservation {
  double time_s = 0.0;
  std::array<double, 6> detector_outputs = {};
};

// Direction maximizing agreement with the cosine model
// output_i = I*max(0, n_i . s), solved by least squares over the
// illuminated detectors (least-norm when rank deficient, so two equal
// adjacent outputs give their bisector). A single lit detector returns
// that detector's normal; none lit throws InsufficientIlluminationError.
Vec3 sun_direction(const std::array<double, 6>& outputs,
                   const SunSensorLayout& layout,
                   double illumination_threshold = 0.0);

// Spherical asteroid with uniform rotation about a fixed axis and the sun
// at infinity. The asteroid-fixed frame coincides with the inertial frame
// at t = 0 and rotates with the body.
struct AsteroidModel {
  double rotation_period_s = 43200.0;
  Vec3 spin_axis = Vec3(0, 0, 1);
  Vec3 sun_direction_inertial = Vec3(1, 0, 0);

  // Sun direction expressed in the rotating asteroid frame at time t.
  Vec3 sun_in_asteroid_frame(double t_s) const;
  // Solar declination relative to the asteroid's equator [rad].
  double solar_declination_rad() const;
};

struct LocalizationResult {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  Eigen::Matrix3d body_to_surface = Eigen::Matrix3d::Identity();  // ENU
};

// Recovers absolute position and attitude on the spherical model:
//  - attitude w.r.t. the asteroid frame by least squares over the four
//    sun observations (ParallelObservationsError when they do not span
//    two directions),
//  - latitude from the daylight fraction (sunset - sunrise)/period given
//    the solar declination (PolarDegenerateError at fraction 0 or 1),
//  - longitude from the local-noon offset,
//  - the measured gravity direction pins the local vertical.
// The rover must not have moved between the paired observations.
LocalizationResult localize(const std::array<SunObservation, 2>& evening,
                            const std::array<SunObservation, 2>& morning,
                            const SunSensorLayout& layout,
                            const Vec3& gravity_dir_body, double sunrise_s,
                            double sunset_s, const AsteroidModel& asteroid);

}  // namespace hopsim
