#include "hopsim/autonomy.hpp"

#include <algorithm>
#include <cmath>

#include "hopsim/model.hpp"

namespace hopsim {

namespace {

// Exact first-order relaxation toward ambient.
double relax(double from_c, double ambient_c, double tau_s, double dt_s) {
  return ambient_c + (from_c - ambient_c) * std::exp(-dt_s / tau_s);
}

// Time within [0, dt] spent strictly above `level`, split at the single
// monotone crossing when there is one. Returns (above_first, t_split):
// the interval [0, t_split) is on the `above_first` side.
struct ThresholdSplit {
  bool above_first = false;
  double split_s = 0.0;  // 0 or dt when no crossing
};

ThresholdSplit split_at(double from_c, double ambient_c, double level_c,
                        double tau_s, double dt_s) {
  ThresholdSplit r;
  r.above_first = from_c > level_c;
  const bool above_end = relax(from_c, ambient_c, tau_s, dt_s) > level_c;
  if (r.above_first == above_end) {
    r.split_s = dt_s;
    return r;
  }
  // T(t) = amb + (T0 - amb) e^{-t/tau} crosses `level` once.
  r.split_s = tau_s * std::log((from_c - ambient_c) / (level_c - ambient_c));
  r.split_s = std::clamp(r.split_s, 0.0, dt_s);
  return r;
}

void accrue_overheat(RoverHealth& h, const ThermalConfig& cfg, double dt_above,
                     double dt_below) {
  if (dt_above > 0.0) {
    h.episode_above_s += dt_above;
    if (!h.episode_counted && h.episode_above_s >= cfg.episode_duration_s) {
      h.episode_counted = true;
      h.overheat_exposure += 1;
      const double step = 1.0 / std::max(1, cfg.episodes_to_unusable);
      h.capacitor_degradation =
          std::min(1.0, h.capacitor_degradation + step);
    }
  }
  if (dt_below > 0.0) {
    h.episode_above_s = 0.0;
    h.episode_counted = false;
  }
}

}  // namespace

RoverHealth thermal_step(const RoverHealth& health, const ThermalConfig& cfg,
                         double ambient_c, double dt_s) {
  if (!(dt_s > 0.0)) throw Error("thermal_step: dt must be > 0");

  RoverHealth h = health;
  const ThresholdSplit s = split_at(h.device_temperature_c, ambient_c,
                                    cfg.degrade_threshold_c,
                                    cfg.time_constant_s, dt_s);
  if (s.above_first) {
    accrue_overheat(h, cfg, s.split_s, dt_s - s.split_s);
  } else {
    accrue_overheat(h, cfg, 0.0, s.split_s);
    accrue_overheat(h, cfg, dt_s - s.split_s, 0.0);
  }

  h.device_temperature_c =
      relax(h.device_temperature_c, ambient_c, cfg.time_constant_s, dt_s);

  const double t = h.device_temperature_c;
  if (t > cfg.max_working_c || t < cfg.min_working_c) {
    h.cpu_state = CpuState::Shutdown;
  } else if (t <= cfg.max_working_c - cfg.hysteresis_c &&
             t >= cfg.min_working_c + cfg.hysteresis_c) {
    h.cpu_state = CpuState::Running;
  }
  return h;
}

bool near_shutdown(const RoverHealth& health, const ThermalConfig& cfg) {
  const double t = health.device_temperature_c;
  return (t > cfg.max_working_c - cfg.hysteresis_c &&
          t <= cfg.max_working_c) ||
         (t < cfg.min_working_c + cfg.hysteresis_c &&
          t >= cfg.min_working_c);
}

ImageRecord make_image_record(int id, long long compressed_size_bytes,
                              double information_score,
                              double priority_scale) {
  if (information_score < 0.0 || compressed_size_bytes < 0)
    throw Error("ImageRecord: size and score must be nonnegative");
  ImageRecord r;
  r.id = id;
  r.compressed_size_bytes = compressed_size_bytes;
  r.information_score = information_score;
  r.priority = priority_scale * information_score;
  r.stored = information_score > 0.0;
  return r;
}

namespace {

bool priority_order(const ImageRecord& a, const ImageRecord& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  return a.id < b.id;
}

}  // namespace

std::vector<int> pre_shutdown_save(const std::vector<ImageRecord>& ram_records,
                                   long long flash_capacity_bytes) {
  std::vector<ImageRecord> sorted = ram_records;
  std::sort(sorted.begin(), sorted.end(), priority_order);

  std::vector<int> persisted;
  long long used = 0;
  for (const ImageRecord& r : sorted) {
    if (used + r.compressed_size_bytes > flash_capacity_bytes) break;
    used += r.compressed_size_bytes;
    persisted.push_back(r.id);
  }
  return persisted;
}

PowerDecision power_gate(const PowerBudget& budget, const RoverHealth& health,
                         const std::string& activity, double duration_s) {
  if (!(duration_s > 0.0)) throw Error("power_gate: duration must be > 0");
  const auto it = budget.load_table_w.find(activity);
  if (it == budget.load_table_w.end())
    throw UnknownActivityError("power_gate: unknown activity '" + activity +
                               "'");
  const double load_w = it->second;

  PowerDecision d;
  if (load_w <= budget.solar_power_w) {
    d.permitted = true;
    return d;
  }

  const double need_j = (load_w - budget.solar_power_w) * duration_s;
  const double c_eff = health.effective_capacitance_f();
  const double v = health.capacitor_voltage_v;
  const double vf = budget.floor_voltage_v;
  const double available_j =
      std::max(0.0, 0.5 * c_eff * (v * v - vf * vf));
  if (need_j <= available_j + 1e-12) {
    d.permitted = true;
    d.capacitor_draw_j = need_j;
  }
  return d;
}

RoverHealth discharge_capacitor(const RoverHealth& health, double joules) {
  if (joules < 0.0) throw Error("discharge_capacitor: joules must be >= 0");
  RoverHealth h = health;
  if (joules == 0.0) return h;
  const double c_eff = h.effective_capacitance_f();
  if (!(c_eff > 0.0))
    throw Error("discharge_capacitor: capacitor fully degraded");
  const double vv =
      h.capacitor_voltage_v * h.capacitor_voltage_v - 2.0 * joules / c_eff;
  h.capacitor_voltage_v = std::sqrt(std::max(0.0, vv));
  return h;
}

TransmissionPlan select_images(const std::vector<ImageRecord>& stored,
                               double bandwidth_bps, double window_s) {
  if (!(bandwidth_bps > 0.0)) throw Error("select_images: bandwidth must be > 0");
  if (window_s < 0.0) throw Error("select_images: window must be >= 0");

  std::vector<ImageRecord> ranked;
  ranked.reserve(stored.size());
  for (const ImageRecord& r : stored)
    if (r.information_score > 0.0) ranked.push_back(r);
  std::sort(ranked.begin(), ranked.end(), priority_order);

  TransmissionPlan plan;
  plan.budget_bits = bandwidth_bps * window_s;
  double remaining = plan.budget_bits;
  for (const ImageRecord& r : ranked) {
    if (remaining <= 0.0) break;
    const double bits = 8.0 * double(r.compressed_size_bytes);
    if (bits <= 0.0) continue;
    const double planned = std::min(bits, remaining);
    plan.entries.push_back(PlanEntry{r.id, planned, bits});
    remaining -= planned;
  }
  return plan;
}

Vec3 sun_direction(const std::array<double, 6>& outputs,
                   const SunSensorLayout& layout,
                   double illumination_threshold) {
  std::vector<int> lit;
  for (int i = 0; i < 6; ++i) {
    if (outputs[size_t(i)] < 0.0)
      throw Error("sun_direction: detector outputs must be nonnegative");
    if (outputs[size_t(i)] > illumination_threshold) lit.push_back(i);
  }
  if (lit.empty())
    throw InsufficientIlluminationError(
        "sun_direction: no detector above the illumination threshold");
  if (lit.size() == 1) return layout.normals[size_t(lit[0])].normalized();

  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Vec3 b = Vec3::Zero();
  for (int i : lit) {
    const Vec3 n = layout.normals[size_t(i)].normalized();
    a += n * n.transpose();
    b += outputs[size_t(i)] * n;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(1e-10);
  const Vec3 v = svd.solve(b);  // least-norm on the rank-deficient case
  if (!(v.norm() > 0.0))
    throw InsufficientIlluminationError(
        "sun_direction: outputs inconsistent with any direction");
  return v.normalized();
}

Vec3 AsteroidModel::sun_in_asteroid_frame(double t_s) const {
  const double omega = 2.0 * kPi / rotation_period_s;
  const Eigen::AngleAxisd unspin(-omega * t_s, spin_axis.normalized());
  return unspin * sun_direction_inertial.normalized();
}

double AsteroidModel::solar_declination_rad() const {
  const double c = spin_axis.normalized().dot(sun_direction_inertial.normalized());
  return std::asin(std::clamp(c, -1.0, 1.0));
}

namespace {

// Orthonormal equatorial basis (e1, e2) completing the spin axis; e1 is
// the projection of inertial x (or y when x is nearly polar).
void equatorial_basis(const Vec3& spin_axis, Vec3& e1, Vec3& e2) {
  const Vec3 z = spin_axis.normalized();
  Vec3 seed(1, 0, 0);
  if (std::abs(seed.dot(z)) > 0.9) seed = Vec3(0, 1, 0);
  e1 = (seed - seed.dot(z) * z).normalized();
  e2 = z.cross(e1);
}

Eigen::Matrix3d wahba_attitude(const std::vector<Vec3>& body_dirs,
                               const std::vector<Vec3>& ref_dirs) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < body_dirs.size(); ++i)
    m += body_dirs[i] * ref_dirs[i].transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 1e-8 * sv(0)))
    throw ParallelObservationsError(
        "localize: sun observations too parallel to resolve attitude");
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();  // maps reference frame into body frame
}

}  // namespace

LocalizationResult localize(const std::array<SunObservation, 2>& evening,
                            const std::array<SunObservation, 2>& morning,
                            const SunSensorLayout& layout,
                            const Vec3& gravity_dir_body, double sunrise_s,
                            double sunset_s, const AsteroidModel& asteroid) {
  // Attitude w.r.t. the asteroid frame from all four observations.
  std::vector<Vec3> body_dirs, ref_dirs;
  for (const SunObservation* obs :
       {&evening[0], &evening[1], &morning[0], &morning[1]}) {
    body_dirs.push_back(sun_direction(obs->detector_outputs, layout));
    ref_dirs.push_back(asteroid.sun_in_asteroid_frame(obs->time_s));
  }
  const Eigen::Matrix3d r_ab = wahba_attitude(body_dirs, ref_dirs);

  // Latitude from the daylight fraction.
  const double period = asteroid.rotation_period_s;
  const double daylight = (sunset_s - sunrise_s) / period;
  if (daylight < 1e-9 || daylight > 1.0 - 1e-9)
    throw PolarDegenerateError(
        "localize: daylight fraction 0 or 1 leaves the site undetermined");
  const double half_day_rad = kPi * daylight;  // sunrise hour angle
  const double decl = asteroid.solar_declination_rad();
  const double tan_decl = std::tan(decl);
  double lat_rad = 0.0;
  if (std::abs(tan_decl) < 1e-12) {
    if (std::abs(std::cos(half_day_rad)) > 1e-9)
      throw PolarDegenerateError(
          "localize: daylight fraction inconsistent with zero declination");
    lat_rad = 0.0;  // equinox: every latitude sees a half day; by symmetry
  } else {
    lat_rad = std::atan(-std::cos(half_day_rad) / tan_decl);
  }

  // Longitude from the local-noon meridian crossing.
  Vec3 e1, e2;
  equatorial_basis(asteroid.spin_axis, e1, e2);
  const Vec3 sun_noon = asteroid.sun_in_asteroid_frame(0.5 * (sunrise_s + sunset_s));
  const double lon_rad = std::atan2(sun_noon.dot(e2), sun_noon.dot(e1));

  // Surface (ENU) frame at the site, rows east/north/up in asteroid coords.
  const Vec3 z = asteroid.spin_axis.normalized();
  const Vec3 up = std::cos(lat_rad) * (std::cos(lon_rad) * e1 +
                                       std::sin(lon_rad) * e2) +
                  std::sin(lat_rad) * z;
  const Vec3 east = (-std::sin(lon_rad) * e1 + std::cos(lon_rad) * e2);
  const Vec3 north = up.cross(east).normalized();
  Eigen::Matrix3d r_sa;
  r_sa.row(0) = east;
  r_sa.row(1) = north;
  r_sa.row(2) = up;

  Eigen::Matrix3d r_sb = r_sa * r_ab.transpose();

  // Pin the local vertical to the measured gravity direction.
  const Vec3 up_body = -gravity_dir_body.normalized();
  const Vec3 up_pred = r_sb * up_body;
  const Vec3 axis = up_pred.cross(Vec3(0, 0, 1));
  const double sin_a = axis.norm();
  const double cos_a = std::clamp(up_pred.z(), -1.0, 1.0);
  if (sin_a > 1e-12) {
    const Eigen::AngleAxisd fix(std::atan2(sin_a, cos_a), axis / sin_a);
    r_sb = fix.toRotationMatrix() * r_sb;
  } else if (cos_a < 0.0) {
    r_sb = Eigen::AngleAxisd(kPi, Vec3(1, 0, 0)).toRotationMatrix() * r_sb;
  }

  LocalizationResult out;
  out.latitude_deg = rad_to_deg(lat_rad);
  out.longitude_deg = rad_to_deg(lon_rad);
  out.body_to_surface = r_sb;
  return out;
}

}  // namespace hopsim
