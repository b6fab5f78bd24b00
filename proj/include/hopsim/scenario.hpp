#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hopsim/autonomy.hpp"

// Scenario replay for the autonomy automata. Input is line-oriented:
//   t=<s> event=<name> <key>=<value>...
// Events: ambient (temp_c), solar (power_w), request (activity,
// duration_s), image (id, bytes, score), downlink (bandwidth_bps,
// window_s), sun (o1..o6), flash (capacity_bytes). The driver advances
// the thermal automaton between events and emits a decision log.

namespace hopsim {

struct ScenarioEvent {
  double t_s = 0.0;
  std::string name;
  std::map<std::string, std::string> args;
};

// Throws ParseError with the 1-based line number on malformed lines.
std::vector<ScenarioEvent> parse_scenario(std::istream& is);

struct DecisionLogRow {
  double t_s = 0.0;
  std::string subsystem;
  std::string event;
  std::string decision;
  std::string detail;
};

struct ScenarioConfig {
  ThermalConfig thermal;
  PowerBudget budget;
  RoverHealth initial_health;
  double initial_ambient_c = 25.0;
  long long flash_capacity_bytes = 2 * 1024 * 1024;
  double priority_scale = 1.0;
};

class ScenarioDriver {
 public:
  explicit ScenarioDriver(const ScenarioConfig& config = {});

  // Replays the events (nondecreasing in t) and returns the decision log.
  std::vector<DecisionLogRow> run(const std::vector<ScenarioEvent>& events);

  const RoverHealth& health() const { return health_; }

 private:
  void advance_to(double t_s);
  void log(double t, const std::string& subsystem, const std::string& event,
           const std::string& decision, const std::string& detail);

  ScenarioConfig cfg_;
  RoverHealth health_;
  double ambient_c_;
  double clock_s_ = 0.0;
  bool save_done_ = false;  // per margin entry
  std::vector<ImageRecord> ram_;
  std::vector<ImageRecord> flash_;
  std::vector<DecisionLogRow> log_;
};

// CSV with header `t,subsystem,event,decision,detail`.
void write_decision_log_csv(std::ostream& os,
                            const std::vector<DecisionLogRow>& rows);

}  // namespace hopsim
