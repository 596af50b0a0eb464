#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fblin/control.hpp"
#include "fblin/linearise.hpp"
#include "fblin/model.hpp"

namespace fblin {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : std::runtime_error("config error at '" + key_path + "': " + what) {}
};

struct OpenLoopStepsExperiment {
  std::vector<VelocitySegment> schedule;
};

struct CircleTrackingExperiment {
  double radius = 1.0;
  double angular_velocity = 0.5;  // [rad/s]
  Vec2 center{};
  double phase = 0.0;
  double start_offset = 0.3;  // initial radial offset of point P [m]
  TrackingGains gains{1.0, 1.0};
  bool feedforward = false;
};

struct StabilitySweepExperiment {
  std::vector<double> v_bar;        // [m/s]
  double dl_min = -0.70;            // [m]
  double dl_max = 0.20;
  double dl_step = 1e-3;
};

struct HopfThresholdExperiment {
  std::vector<double> v_bar;
  // Explicit (stable, unstable) bracket, or an automatic coarse scan.
  std::optional<std::pair<double, double>> bracket;
  double scan_min = -0.5;
  double scan_max = 0.2;
  double scan_step = 1e-3;
};

struct CustomExperiment {
  VehicleState initial_state{};
  ModelInput input{1.0, 0.0};
};

using Experiment = std::variant<OpenLoopStepsExperiment, CircleTrackingExperiment,
                                StabilitySweepExperiment, HopfThresholdExperiment,
                                CustomExperiment>;

const char* experiment_kind_name(const Experiment& e);

struct ScenarioConfig {
  VehicleParams vehicle{};
  LinearisationConfig linearisation{};
  double dt = 0.01;      // [s]
  double horizon = 20.0; // [s]
  Experiment experiment = OpenLoopStepsExperiment{};
  DropoutModel dropout{};
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  void validate() const;
};

/// Parses and validates a JSON scenario config; unknown keys are rejected
/// with their full key path.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

/// FNV-1a hash of the canonically re-serialized config; stable under key
/// reordering in the input file.
std::string config_hash(const ScenarioConfig& cfg);

/// Canonical JSON serialization (sorted keys) of a config.
std::string dump_config(const ScenarioConfig& cfg);

inline constexpr const char* kToolVersion = "0.1.0";

struct CommandOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
};

void apply_overrides(ScenarioConfig& cfg, const CommandOverrides& o);

int cmd_simulate(const ScenarioConfig& cfg);
int cmd_sweep(const ScenarioConfig& cfg);
int cmd_hopf(const ScenarioConfig& cfg);
int cmd_track(const ScenarioConfig& cfg);

}  // namespace fblin
