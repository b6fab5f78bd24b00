#include "hopsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hopsim {

namespace {

double to_number(const std::string& v, int line) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError(line, "scenario line " + std::to_string(line) +
                               ": not a number: '" + v + "'");
  }
}

double arg_number(const ScenarioEvent& e, const std::string& key) {
  const auto it = e.args.find(key);
  if (it == e.args.end())
    throw ParseError(0, "scenario event '" + e.name + "' at t=" +
                            std::to_string(e.t_s) + " missing arg '" + key +
                            "'");
  return to_number(it->second, 0);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<ScenarioEvent> parse_scenario(std::istream& is) {
  std::vector<ScenarioEvent> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    ScenarioEvent ev;
    bool have_t = false, have_name = false;
    while (ss >> token) {
      if (token[0] == '#') break;
      const auto eq = token.find('=');
      if (eq == std::string::npos)
        throw ParseError(lineno, "scenario line " + std::to_string(lineno) +
                                     ": expected key=value, got '" + token +
                                     "'");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "t") {
        ev.t_s = to_number(value, lineno);
        have_t = true;
      } else if (key == "event") {
        ev.name = value;
        have_name = true;
      } else {
        ev.args[key] = value;
      }
    }
    if (!have_t && !have_name && ev.args.empty()) continue;  // blank/comment
    if (!have_t || !have_name)
      throw ParseError(lineno, "scenario line " + std::to_string(lineno) +
                                   ": needs t=<s> and event=<name>");
    if (!out.empty() && ev.t_s < out.back().t_s)
      throw ParseError(lineno, "scenario line " + std::to_string(lineno) +
                                   ": time goes backwards");
    out.push_back(std::move(ev));
  }
  return out;
}

ScenarioDriver::ScenarioDriver(const ScenarioConfig& config)
    : cfg_(config),
      health_(config.initial_health),
      ambient_c_(config.initial_ambient_c) {}

void ScenarioDriver::log(double t, const std::string& subsystem,
                         const std::string& event, const std::string& decision,
                         const std::string& detail) {
  log_.push_back(DecisionLogRow{t, subsystem, event, decision, detail});
}

void ScenarioDriver::advance_to(double t_s) {
  if (t_s <= clock_s_) return;
  // Step in bounded chunks so threshold crossings land in the log near
  // when they happen; the exponential update itself is exact at any dt.
  const double chunk = 60.0;
  while (clock_s_ < t_s) {
    const double dt = std::min(chunk, t_s - clock_s_);
    const RoverHealth before = health_;
    health_ = thermal_step(health_, cfg_.thermal, ambient_c_, dt);
    clock_s_ += dt;

    if (before.cpu_state != health_.cpu_state)
      log(clock_s_, "thermal", "cpu",
          health_.cpu_state == CpuState::Shutdown ? "Shutdown" : "Running",
          "temp_c=" + fmt(health_.device_temperature_c));
    if (health_.overheat_exposure != before.overheat_exposure)
      log(clock_s_, "thermal", "overheat_episode", "counted",
          "exposure=" + std::to_string(health_.overheat_exposure) +
              " degradation=" + fmt(health_.capacitor_degradation));

    const bool near = near_shutdown(health_, cfg_.thermal);
    if (near && !save_done_) {
      const std::vector<int> ids =
          pre_shutdown_save(ram_, cfg_.flash_capacity_bytes);
      std::string joined;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (i) joined += ' ';
        joined += std::to_string(ids[i]);
        for (const ImageRecord& r : ram_)
          if (r.id == ids[i]) flash_.push_back(r);
      }
      log(clock_s_, "thermal", "pre_shutdown_save",
          std::to_string(ids.size()) + " persisted", joined);
      save_done_ = true;
    } else if (!near && health_.cpu_state == CpuState::Running) {
      save_done_ = false;
    }

    if (before.cpu_state == CpuState::Running &&
        health_.cpu_state == CpuState::Shutdown && !ram_.empty()) {
      log(clock_s_, "thermal", "ram_lost",
          std::to_string(ram_.size()) + " records", "");
      ram_.clear();
    }
  }
}

std::vector<DecisionLogRow> ScenarioDriver::run(
    const std::vector<ScenarioEvent>& events) {
  log_.clear();
  for (const ScenarioEvent& ev : events) {
    advance_to(ev.t_s);
    if (ev.name == "ambient") {
      ambient_c_ = arg_number(ev, "temp_c");
      log(ev.t_s, "thermal", "ambient", "set", "temp_c=" + fmt(ambient_c_));
    } else if (ev.name == "solar") {
      cfg_.budget.solar_power_w = arg_number(ev, "power_w");
      log(ev.t_s, "power", "solar", "set",
          "power_w=" + fmt(cfg_.budget.solar_power_w));
    } else if (ev.name == "request") {
      const auto it = ev.args.find("activity");
      if (it == ev.args.end())
        throw ParseError(0, "scenario: request needs activity=<id>");
      const double duration = arg_number(ev, "duration_s");
      const PowerDecision d =
          power_gate(cfg_.budget, health_, it->second, duration);
      if (d.permitted) health_ = discharge_capacitor(health_, d.capacitor_draw_j);
      log(ev.t_s, "power", "request " + it->second,
          d.permitted ? "Permitted" : "Denied",
          "draw_j=" + fmt(d.capacitor_draw_j) +
              " cap_v=" + fmt(health_.capacitor_voltage_v));
    } else if (ev.name == "image") {
      const ImageRecord r = make_image_record(
          int(arg_number(ev, "id")), (long long)(arg_number(ev, "bytes")),
          arg_number(ev, "score"), cfg_.priority_scale);
      if (!r.stored) {
        log(ev.t_s, "imaging", "image", "abandoned",
            "id=" + std::to_string(r.id) + " score=0");
      } else {
        ram_.push_back(r);
        log(ev.t_s, "imaging", "image", "stored",
            "id=" + std::to_string(r.id) + " priority=" + fmt(r.priority));
      }
    } else if (ev.name == "downlink") {
      std::vector<ImageRecord> stored = flash_;
      stored.insert(stored.end(), ram_.begin(), ram_.end());
      const TransmissionPlan plan = select_images(
          stored, arg_number(ev, "bandwidth_bps"), arg_number(ev, "window_s"));
      std::string order;
      for (size_t i = 0; i < plan.entries.size(); ++i) {
        if (i) order += ' ';
        order += std::to_string(plan.entries[i].id);
      }
      log(ev.t_s, "imaging", "downlink",
          std::to_string(plan.entries.size()) + " planned", order);
    } else if (ev.name == "sun") {
      std::array<double, 6> outputs{};
      for (int i = 0; i < 6; ++i)
        outputs[size_t(i)] = arg_number(ev, "o" + std::to_string(i + 1));
      try {
        const Vec3 s = sun_direction(outputs, SunSensorLayout{});
        log(ev.t_s, "sun", "direction", "ok",
            fmt(s.x()) + " " + fmt(s.y()) + " " + fmt(s.z()));
      } catch (const InsufficientIlluminationError&) {
        log(ev.t_s, "sun", "direction", "InsufficientIllumination", "");
      }
    } else if (ev.name == "flash") {
      cfg_.flash_capacity_bytes = (long long)(arg_number(ev, "capacity_bytes"));
      log(ev.t_s, "imaging", "flash", "set",
          "capacity_bytes=" + std::to_string(cfg_.flash_capacity_bytes));
    } else {
      throw ParseError(0, "scenario: unknown event '" + ev.name + "'");
    }
  }
  return log_;
}

void write_decision_log_csv(std::ostream& os,
                            const std::vector<DecisionLogRow>& rows) {
  os << "t,subsystem,event,decision,detail\n";
  for (const DecisionLogRow& r : rows)
    os << fmt(r.t_s) << ',' << r.subsystem << ',' << r.event << ','
       << r.decision << ',' << r.detail << '\n';
}

}  // namespace hopsim
