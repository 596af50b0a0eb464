#pragma once

#include <optional>
#include <stdexcept>

#include "fblin/model.hpp"

namespace fblin {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class Law {
  FrontAxleOffset,   // point P offset from the front axle along the steering direction
  VelocityDirection  // point P offset from the CoM along the velocity direction
};

const char* law_name(Law law);

struct LinearisationConfig {
  double p = 0.35;                              // point-P offset [m], p > 0
  double l_f_est = 0.1368;                      // estimated CoM-to-front-axle distance [m]
  Law law = Law::FrontAxleOffset;
  double singularity_margin = 5.0 * M_PI / 180.0;  // [rad]

  void validate() const;
};

/// Velocity command for point P, the output of the outer tracking loop.
struct PointVelocityCommand {
  double v_Px = 0.0;
  double v_Py = 0.0;
};

/// Output of a linearising law. The front-axle-offset law commands a steering
/// rate, the velocity-direction law a steering angle; the tag prevents wiring
/// a (v, delta) law into the steering-rate integrator channel.
struct ControlCommand {
  double v = 0.0;
  Law law_tag = Law::FrontAxleOffset;
  std::optional<double> u_delta;  // set iff law_tag == FrontAxleOffset
  std::optional<double> delta;    // set iff law_tag == VelocityDirection

  static ControlCommand front_axle(double v, double u_delta);
  static ControlCommand velocity_dir(double v, double delta);
};

/// Thrown when beta - delta comes within the configured margin of
/// pi/2 + k*pi, where the front-axle-offset law loses rank.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(double beta_minus_delta);
};

/// Thrown by the velocity-direction law when the resulting speed is below the
/// floor; that law divides by v.
class ZeroVelocityError : public std::runtime_error {
 public:
  explicit ZeroVelocityError(double v);
};

/// Position of point P in the inertial frame, per the configured law.
Vec2 point_p_position(const VehicleState& state, const LinearisationConfig& cfg);

/// Velocity of point P. The front-axle-offset expression is closed-form in
/// (state, input); the velocity-direction one needs psi_dot and beta_dot from
/// the model, hence the params argument.
Vec2 point_p_velocity(const VehicleState& state, const ModelInput& input,
                      const LinearisationConfig& cfg, const VehicleParams& params,
                      double v_min = kDefaultSpeedFloor);

/// Nominal front-axle-offset law (cfg.l_f_est plays the role of l_f).
ControlCommand linearising_law_nominal(const VehicleState& state,
                                       const PointVelocityCommand& cmd,
                                       const LinearisationConfig& cfg);

/// Front-axle-offset law with the CoM estimate; with dl = l_f_est - l_f the
/// closed composition leaves the residual (dl sin(psi) r, -dl cos(psi) r).
ControlCommand linearising_law_uncertain(const VehicleState& state,
                                         const PointVelocityCommand& cmd,
                                         const LinearisationConfig& cfg);

/// Velocity-direction law; assigns the heading rate psi_dot + beta_dot and
/// returns (v, delta).
ControlCommand linearising_law_alternative(const VehicleState& state,
                                           const PointVelocityCommand& cmd,
                                           const LinearisationConfig& cfg,
                                           const VehicleParams& params,
                                           double v_min = kDefaultSpeedFloor);

}  // namespace fblin
