#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hopsim/model.hpp"
#include "hopsim/sim.hpp"

// Experiment-suite configuration: flat key-value text with section
// headers, one key per line. Sections: [body], [environment], [motor],
// [sim], and one [case <label>] per motor command; case sections may
// carry published reference results for error reporting and calibration.

namespace hopsim {

struct CaseSpec {
  std::string label;
  MotorCommand command;
  std::optional<HopResult> reference;
};

struct ExperimentSuite {
  RoverBody body;
  Environment env;
  MotorModel motor;
  SimConfig sim;
  std::vector<CaseSpec> cases;

  const CaseSpec* find_case(const std::string& label) const;
  void validate() const;
};

// Parses a suite; throws ConfigError naming the offending key on unknown
// keys, bad numbers, or invariant violations.
ExperimentSuite load_suite(std::istream& is);
ExperimentSuite load_suite_file(const std::filesystem::path& path);

// Calibrated-gain sidecar (one `torque_gain_nmm_per_v = <value>` line).
std::optional<double> read_gain_sidecar(const std::filesystem::path& path);
void write_gain_sidecar(const std::filesystem::path& path, double gain);

}  // namespace hopsim
