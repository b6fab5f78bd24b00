#include "hopsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hopsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double number(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "unbounded")
    return std::numeric_limits<double>::infinity();
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "config key '" + key + "': not a number: '" +
                               value + "'");
  }
}

struct SuiteBuilder {
  ExperimentSuite suite;
  CaseSpec* current_case = nullptr;
  // Reference components arrive as separate keys; assembled at the end.
  struct Ref {
    double vhx = std::nan(""), vhy = std::nan("");
    double vh = std::nan(""), theta = std::nan(""), th = std::nan("");
    bool any = false;
  };
  std::vector<Ref> refs;

  void open_section(const std::string& name, int line) {
    current_case = nullptr;
    if (name == "body" || name == "environment" || name == "motor" ||
        name == "sim")
      return;
    if (name.rfind("case ", 0) == 0) {
      const std::string label = trim(name.substr(5));
      if (label.empty())
        throw ConfigError("case", "config: empty case label (line " +
                                      std::to_string(line) + ")");
      suite.cases.push_back(CaseSpec{label, MotorCommand{}, std::nullopt});
      refs.push_back(Ref{});
      current_case = &suite.cases.back();
      return;
    }
    throw ConfigError(name, "config: unknown section [" + name + "] (line " +
                                std::to_string(line) + ")");
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    const double v = number(key, value);
    if (section == "body") {
      if (key == "mass_kg") suite.body.mass_kg = v;
      else if (key == "half_width_mm") suite.body.half_width_mm = v;
      else if (key == "half_height_mm") suite.body.half_height_mm = v;
      else if (key == "contact_offset_mm") suite.body.contact_offset_mm = v;
      else if (key == "contact_offset_angle_deg")
        suite.body.contact_offset_angle_deg = v;
      else if (key == "moment_of_inertia_kgmm2")
        suite.body.moment_of_inertia_kgmm2 = v;
      else throw ConfigError(key, "config: unknown key '" + key + "' in [body]");
    } else if (section == "environment") {
      if (key == "gravity_x_mms2") suite.env.gravity_mms2.x() = v;
      else if (key == "gravity_y_mms2") suite.env.gravity_mms2.y() = v;
      else if (key == "friction_coefficient") suite.env.friction_coefficient = v;
      else if (key == "escape_velocity_mms") suite.env.escape_velocity_mms = v;
      else
        throw ConfigError(key,
                          "config: unknown key '" + key + "' in [environment]");
    } else if (section == "motor") {
      if (key == "torque_gain_nmm_per_v") suite.motor.torque_gain_nmm_per_v = v;
      else
        throw ConfigError(key, "config: unknown key '" + key + "' in [motor]");
    } else if (section == "sim") {
      if (key == "step_size_s") suite.sim.step_size_s = v;
      else if (key == "max_time_s") suite.sim.max_time_s = v;
      else if (key == "restitution") suite.sim.restitution = v;
      else if (key == "settle_speed_mms") suite.sim.settle_speed_mms = v;
      else if (key == "sample_interval_s") suite.sim.sample_interval_s = v;
      else if (key == "initial_attitude_deg") suite.sim.initial_attitude_deg = v;
      else throw ConfigError(key, "config: unknown key '" + key + "' in [sim]");
    } else if (current_case) {
      Ref& ref = refs.back();
      if (key == "duty_ratio") current_case->command.duty_ratio = v;
      else if (key == "duration_s") current_case->command.duration_s = v;
      else if (key == "voltage_v") current_case->command.supply_voltage_v = v;
      else if (key == "reference_vhx_mms") { ref.vhx = v; ref.any = true; }
      else if (key == "reference_vhy_mms") { ref.vhy = v; ref.any = true; }
      else if (key == "reference_vh_mms") { ref.vh = v; ref.any = true; }
      else if (key == "reference_theta_h_deg") { ref.theta = v; ref.any = true; }
      else if (key == "reference_th_s") { ref.th = v; ref.any = true; }
      else
        throw ConfigError(key, "config: unknown key '" + key + "' in [case " +
                                   current_case->label + "]");
    } else {
      throw ConfigError(key, "config: key '" + key + "' outside any section");
    }
  }

  ExperimentSuite finish() {
    for (size_t i = 0; i < suite.cases.size(); ++i) {
      if (!refs[i].any) continue;
      HopResult r;
      r.v_hx_mms = refs[i].vhx;
      r.v_hy_mms = refs[i].vhy;
      r.v_h_mms = refs[i].vh;
      r.theta_h_deg = refs[i].theta;
      r.t_h_s = refs[i].th;
      suite.cases[i].reference = r;
    }
    suite.validate();
    return std::move(suite);
  }
};

// Maps invariant violations onto the config key that carries the value.
void validate_with_keys(const ExperimentSuite& s) {
  const auto check = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, "config key '" + std::string(key) +
                                        "': " + what);
  };
  check(s.body.mass_kg > 0, "mass_kg", "must be > 0");
  check(s.body.half_width_mm > 0, "half_width_mm", "must be > 0");
  check(s.body.half_height_mm > 0, "half_height_mm", "must be > 0");
  check(s.body.contact_offset_mm > 0, "contact_offset_mm", "must be > 0");
  check(s.body.contact_offset_angle_deg >= 0 &&
            s.body.contact_offset_angle_deg < 360,
        "contact_offset_angle_deg", "must be in [0, 360)");
  check(s.body.moment_of_inertia_kgmm2 >= 0, "moment_of_inertia_kgmm2",
        "must be >= 0");
  check(s.env.friction_coefficient >= 0, "friction_coefficient",
        "must be >= 0");
  check(s.env.escape_velocity_mms >= 0, "escape_velocity_mms", "must be >= 0");
  check(s.motor.torque_gain_nmm_per_v > 0, "torque_gain_nmm_per_v",
        "must be > 0");
  check(s.sim.step_size_s > 0 && s.sim.step_size_s <= s.sim.sample_interval_s,
        "step_size_s", "need 0 < step <= sample_interval");
  check(s.sim.restitution >= 0 && s.sim.restitution <= 1, "restitution",
        "must be in [0, 1]");
  check(s.sim.max_time_s > 0, "max_time_s", "must be > 0");
  check(s.sim.settle_speed_mms >= 0, "settle_speed_mms", "must be >= 0");
  for (const CaseSpec& c : s.cases) {
    check(c.command.duty_ratio >= 0 && c.command.duty_ratio <= 1, "duty_ratio",
          "must be in [0, 1] (case " + c.label + ")");
    check(c.command.supply_voltage_v >= 0, "voltage_v",
          "must be >= 0 (case " + c.label + ")");
    check(c.command.duration_s > 0, "duration_s",
          "must be > 0 or inf (case " + c.label + ")");
  }
}

}  // namespace

const CaseSpec* ExperimentSuite::find_case(const std::string& label) const {
  for (const CaseSpec& c : cases)
    if (c.label == label) return &c;
  return nullptr;
}

void ExperimentSuite::validate() const {
  validate_with_keys(*this);
  std::set<std::string> labels;
  for (const CaseSpec& c : cases)
    if (!labels.insert(c.label).second)
      throw ConfigError("case", "config: duplicate case label '" + c.label +
                                    "'");
}

ExperimentSuite load_suite(std::istream& is) {
  SuiteBuilder b;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("section", "config: unterminated section (line " +
                                         std::to_string(lineno) + ")");
      section = trim(t.substr(1, t.size() - 2));
      b.open_section(section, lineno);
      if (section.rfind("case ", 0) == 0) section = "case";
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(t, "config: expected key = value (line " +
                               std::to_string(lineno) + ")");
    b.set(section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return b.finish();
}

ExperimentSuite load_suite_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError(path.string(), "config: cannot open " + path.string());
  return load_suite(is);
}

std::optional<double> read_gain_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) return std::nullopt;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)) != "torque_gain_nmm_per_v")
      throw ConfigError("torque_gain_nmm_per_v",
                        "gain sidecar: expected torque_gain_nmm_per_v = "
                        "<value>");
    return number("torque_gain_nmm_per_v", trim(t.substr(eq + 1)));
  }
  return std::nullopt;
}

void write_gain_sidecar(const std::filesystem::path& path, double gain) {
  std::ofstream os(path);
  if (!os)
    throw ConfigError(path.string(), "cannot write sidecar " + path.string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", gain);
  os << "torque_gain_nmm_per_v = " << buf << "\n";
}

}  // namespace hopsim
