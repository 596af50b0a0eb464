#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "fblin/linearise.hpp"
#include "fblin/model.hpp"

namespace fblin {

struct TrackingGains {
  double K_Px = 1.0;  // [1/s]
  double K_Py = 1.0;  // [1/s]

  void validate() const;
};

struct CircleReference {
  double radius = 1.0;            // [m]
  double angular_velocity = 0.5;  // [rad/s]
  Vec2 center{};
  double phase = 0.0;             // [rad]
};

struct VelocitySegment {
  double duration = 0.0;  // [s], > 0
  double v_Px = 0.0;
  double v_Py = 0.0;
};

/// Position reference obtained by integrating piecewise constant point-P
/// velocity commands from `origin`; holds the last position past the end of
/// the schedule.
struct PiecewiseConstantVelocityReference {
  Vec2 origin{};
  std::vector<VelocitySegment> segments;
};

struct TimedPoint {
  double t = 0.0;
  Vec2 point{};
};

/// Time-stamped samples, linearly interpolated; held beyond either end.
struct SampledReference {
  std::vector<TimedPoint> samples;
};

using ReferenceTrajectory =
    std::variant<CircleReference, PiecewiseConstantVelocityReference, SampledReference>;

struct ReferenceSample {
  Vec2 point{};
  Vec2 feedforward{};  // time derivative of the reference
};

ReferenceSample reference_point(const ReferenceTrajectory& ref, double t);

struct DropoutEpisode {
  double start = 0.0;     // [s]
  double duration = 0.0;  // [s]
};

/// Measurement-dropout disturbance: during an episode the pose and heading
/// measurements freeze at their last pre-episode values (zero-order hold);
/// rate-gyro style channels are unaffected.
struct DropoutModel {
  bool enabled = false;
  std::vector<DropoutEpisode> episodes;

  // Stochastic mode: exponential inter-arrival gaps at `rate`, episode
  // durations uniform in [min_duration, max_duration].
  bool stochastic = false;
  double rate = 0.0;  // [1/s]
  double min_duration = 0.1;
  double max_duration = 0.5;
  std::uint64_t seed = 0;

  /// Concrete non-overlapping, time-sorted episode list over [0, T].
  std::vector<DropoutEpisode> realize(double T) const;
};

PointVelocityCommand tracking_law(const Vec2& ref_point, const Vec2& meas_point,
                                  const TrackingGains& gains);

struct Measurement {
  double t = 0.0;
  double x_G = 0.0;
  double y_G = 0.0;
  double psi = 0.0;
  double r = 0.0;
  double beta = 0.0;
  double delta = 0.0;
};

/// Applies the zero-order-hold dropout semantics to a time-ordered stream:
/// x_G, y_G and psi are held during episodes, r, beta, delta pass through.
std::vector<Measurement> apply_dropout(const std::vector<Measurement>& stream,
                                       const std::vector<DropoutEpisode>& episodes);

struct RunRow {
  double t = 0.0;
  VehicleState state;
  double v_cmd = 0.0;
  double steer_cmd = 0.0;  // u_delta or delta, per the configured law
  Vec2 point_p{};
  Vec2 point_p_ref{};
  PointVelocityCommand cmd{};
  bool dropout_active = false;
};

struct RunLog {
  Law law = Law::FrontAxleOffset;
  std::vector<RunRow> rows;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(double t, const std::string& what);
  double time() const { return t_; }

 private:
  double t_;
};

struct TrackingOptions {
  double dt = 0.01;   // [s]
  double T = 60.0;    // [s]
  bool use_feedforward = false;  // adds the reference velocity to the P term
  // Floor on the commanded speed magnitude; the model is undefined at v = 0
  // and the proportional start transient can command a near-zero speed.
  double min_speed = 0.05;  // [m/s]
};

/// Closed-loop run: proportional tracking law -> linearising law -> vehicle,
/// at a fixed controller/integration step. With zero gains and feedforward
/// enabled this degenerates to the open-loop law test. The controller sees
/// measurements filtered through the dropout model; the log records the true
/// state.
RunLog run_tracking(const ReferenceTrajectory& ref, const TrackingGains& gains,
                    const DropoutModel& dropout, const VehicleState& state0,
                    const VehicleParams& params, const LinearisationConfig& cfg,
                    const TrackingOptions& opt);

class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& what);
};

/// Normalised mean prediction error: mean over channels of
/// RMS(sim - ref) / std(ref). 0 for identical series; errors on length
/// mismatch or a zero-variance reference channel.
double compute_nmpe(const std::vector<std::vector<double>>& simulated,
                    const std::vector<std::vector<double>>& reference);

}  // namespace fblin
