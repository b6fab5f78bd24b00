// Command-line front end: experiment reproduction, motor-gain
// calibration, track estimation, and autonomy scenario replay.
//
// Exit codes: 0 success, 1 unexpected failure, 2 config/input parse or
// validation error, 3 no separation in a run case, 4 calibration failed
// to converge.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "hopsim/config.hpp"
#include "hopsim/estimation.hpp"
#include "hopsim/scenario.hpp"
#include "hopsim/sim.hpp"

namespace fs = std::filesystem;
using namespace hopsim;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNoSeparation = 3;
constexpr int kExitNoConvergence = 4;

std::string round1(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

fs::path sidecar_path(const fs::path& config) {
  fs::path p = config;
  p += ".gain";
  return p;
}

ExperimentSuite load_with_sidecar(const fs::path& config_path,
                                  double step_override) {
  ExperimentSuite suite = load_suite_file(config_path);
  if (const auto gain = read_gain_sidecar(sidecar_path(config_path)))
    suite.motor.torque_gain_nmm_per_v = *gain;
  if (step_override > 0.0) suite.sim.step_size_s = step_override;
  suite.validate();
  return suite;
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir,
            double step_override, int jobs) {
  const ExperimentSuite suite = load_with_sidecar(config_path, step_override);
  fs::create_directories(out_dir);

  struct CaseOutcome {
    HopRun run;
    bool no_separation = false;
  };
  std::vector<std::future<CaseOutcome>> futures;
  futures.reserve(suite.cases.size());
  const auto run_case = [&suite](const CaseSpec& c) {
    CaseOutcome o;
    try {
      o.run = run_hop(suite.body, suite.env, c.command, suite.motor, suite.sim);
    } catch (const NoSeparationError&) {
      o.no_separation = true;
    }
    return o;
  };
  // Cases are independent; a bounded pool preserves byte-identical output
  // because the collector below writes strictly in label order.
  const int pool = std::max(1, jobs);
  std::vector<CaseOutcome> outcomes(suite.cases.size());
  for (size_t base = 0; base < suite.cases.size(); base += size_t(pool)) {
    const size_t end = std::min(suite.cases.size(), base + size_t(pool));
    for (size_t i = base; i < end; ++i)
      futures.push_back(std::async(std::launch::async, run_case,
                                   std::cref(suite.cases[i])));
    for (size_t i = base; i < end; ++i)
      outcomes[i] = futures[i - base].get();
    futures.clear();
  }

  std::ostringstream summary;
  bool have_refs = false;
  for (const CaseSpec& c : suite.cases) have_refs |= c.reference.has_value();
  summary << "case,v_hx,v_hy,v_h,theta_h,t_h";
  if (have_refs) summary << ",err_vh_pct,err_theta_deg,err_th_pct";
  summary << '\n';

  bool any_failed = false;
  for (size_t i = 0; i < suite.cases.size(); ++i) {
    const CaseSpec& c = suite.cases[i];
    if (outcomes[i].no_separation) {
      any_failed = true;
      std::cerr << "case " << c.label << ": no separation\n";
      continue;
    }
    const HopResult& h = outcomes[i].run.hop;
    summary << c.label << ',' << round1(h.v_hx_mms) << ','
            << round1(h.v_hy_mms) << ',' << round1(h.v_h_mms) << ','
            << round1(h.theta_h_deg) << ','
            << [&] {
                 char buf[32];
                 std::snprintf(buf, sizeof buf, "%.2f", h.t_h_s);
                 return std::string(buf);
               }();
    if (have_refs) {
      if (c.reference && c.reference->v_h_mms > 0) {
        const HopResult& r = *c.reference;
        summary << ','
                << round1(100.0 * (h.v_h_mms - r.v_h_mms) / r.v_h_mms) << ','
                << round1(h.theta_h_deg - r.theta_h_deg) << ','
                << round1(100.0 * (h.t_h_s - r.t_h_s) / r.t_h_s);
      } else {
        summary << ",,,";
      }
    }
    summary << '\n';

    std::ofstream traj(out_dir / ("trajectory_" + c.label + ".csv"));
    write_trajectory_csv(traj, outcomes[i].run.trajectory);
  }

  std::ofstream(out_dir / "summary.csv") << summary.str();
  std::cout << summary.str();
  return any_failed ? kExitNoSeparation : 0;
}

int cmd_calibrate(const fs::path& config_path, const std::string& label,
                  double step_override) {
  const ExperimentSuite suite = load_suite_file(config_path);
  ExperimentSuite working = suite;
  if (step_override > 0.0) working.sim.step_size_s = step_override;

  const CaseSpec* c = working.find_case(label);
  if (!c) throw ConfigError("case", "no such case label '" + label + "'");
  if (!c->reference || !(c->reference->v_h_mms > 0))
    throw ConfigError("reference_vh_mms",
                      "case '" + label + "' carries no reference v_h");

  const MotorModel calibrated = calibrate_motor_gain(
      *c->reference, working.body, working.env, c->command, working.sim);
  const HopRun check =
      run_hop(working.body, working.env, c->command, calibrated, working.sim);

  write_gain_sidecar(sidecar_path(config_path),
                     calibrated.torque_gain_nmm_per_v);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "gain=%.9g N*mm/V achieved_vh=%.3f mm/s residual=%.4f mm/s\n",
                calibrated.torque_gain_nmm_per_v, check.hop.v_h_mms,
                std::abs(check.hop.v_h_mms - c->reference->v_h_mms));
  std::cout << buf;
  return 0;
}

int cmd_estimate(const fs::path& track_path, const fs::path& markers_path,
                 double separation_hint) {
  std::vector<TrackSample> track;
  if (!markers_path.empty()) {
    std::ifstream ms(markers_path);
    if (!ms)
      throw ConfigError(markers_path.string(),
                        "cannot open " + markers_path.string());
    const MarkerSet markers = read_marker_csv(ms);
    markers.validate();
    std::ifstream ds(track_path);
    if (!ds)
      throw ConfigError(track_path.string(),
                        "cannot open " + track_path.string());
    for (const PoseObservation& obs : read_detection_csv(ds)) {
      const PoseEstimate pose = estimate_pose(markers, obs);
      track.push_back(TrackSample{obs.time_s, pose.position_mm});
    }
  } else {
    std::ifstream ts(track_path);
    if (!ts)
      throw ConfigError(track_path.string(),
                        "cannot open " + track_path.string());
    track = read_track_csv(ts);
  }

  std::optional<double> hint;
  if (separation_hint >= 0.0) hint = separation_hint;
  const HopResult h = fit_hop_velocity(track, hint);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "v_hx=%.1f mm/s v_hy=%.1f mm/s v_h=%.1f mm/s theta_h=%.1f "
                "deg t_h=%.2f s\n",
                h.v_hx_mms, h.v_hy_mms, h.v_h_mms, h.theta_h_deg, h.t_h_s);
  std::cout << buf;
  return 0;
}

int cmd_scenario(const fs::path& scenario_path, const fs::path& out_dir) {
  std::ifstream is(scenario_path);
  if (!is)
    throw ConfigError(scenario_path.string(),
                      "cannot open " + scenario_path.string());
  const std::vector<ScenarioEvent> events = parse_scenario(is);
  ScenarioDriver driver;
  const std::vector<DecisionLogRow> rows = driver.run(events);

  fs::create_directories(out_dir);
  std::ofstream os(out_dir / "decisions.csv");
  write_decision_log_csv(os, rows);
  write_decision_log_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgravity hopping-rover simulator and analysis tools"};
  app.require_subcommand(1);

  std::string config, out = "out", track, markers, case_label, scenario;
  double step = -1.0;
  double separation = -1.0;
  int jobs = int(std::max(1u, std::thread::hardware_concurrency()));
  long long seed = 0;  // reserved for randomized extensions
  app.add_option("--seed", seed, "Seed for randomized components");

  CLI::App* run = app.add_subcommand("run", "Run every configured case");
  run->add_option("--config", config, "Suite config path")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--step", step, "Override integration step [s]");
  run->add_option("--jobs", jobs, "Concurrent case evaluations");

  CLI::App* cal = app.add_subcommand("calibrate", "Fit the motor gain");
  cal->add_option("--config", config, "Suite config path")->required();
  cal->add_option("case", case_label, "Reference case label")->required();
  cal->add_option("--step", step, "Override integration step [s]");

  CLI::App* est = app.add_subcommand("estimate", "Fit hop speed from a track");
  est->add_option("track", track, "Track CSV (t,x,y), or detections CSV "
                                  "(t,id,x,y) with --markers")
      ->required();
  est->add_option("--markers", markers, "Marker set CSV (id,bx,by)");
  est->add_option("--separation", separation, "Separation hint [s]");

  CLI::App* scn = app.add_subcommand("scenario", "Replay autonomy events");
  scn->add_option("scenario", scenario, "Scenario file")->required();
  scn->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, out, step, jobs);
    if (cal->parsed()) return cmd_calibrate(config, case_label, step);
    if (est->parsed()) return cmd_estimate(track, markers, separation);
    if (scn->parsed()) return cmd_scenario(scenario, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const InsufficientSamplesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const NonmonotonicTimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DegenerateConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const NoSeparationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoSeparation;
  } catch (const NoConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
