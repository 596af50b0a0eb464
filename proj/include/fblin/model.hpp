#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fblin {

/// Parameters of the single-track model. Defaults match the 1:10 scale
/// experimental platform. mu is carried as metadata only; the linear tyre
/// model folds friction into the cornering stiffnesses.
struct VehicleParams {
  double m = 1.9;        // mass [kg]
  double I_z = 0.0251;   // yaw inertia [kg m^2]
  double l_f = 0.1368;   // CoM to front axle [m]
  double l_r = 0.1232;   // CoM to rear axle [m]
  double C_f = 58.085;   // front cornering stiffness [N/rad]
  double C_r = 130.805;  // rear cornering stiffness [N/rad]
  double mu = 0.25;      // tyre-ground friction coefficient [-]

  void validate() const;
};

/// Full closed-loop state: yaw, yaw rate, sideslip, steering angle and the
/// CoM position. Angles are kept unwrapped so finite-difference Jacobians
/// stay smooth across +-pi.
struct VehicleState {
  double psi = 0.0;    // yaw angle [rad]
  double r = 0.0;      // yaw rate [rad/s]
  double beta = 0.0;   // sideslip angle [rad]
  double delta = 0.0;  // steering angle [rad]
  double x_G = 0.0;    // CoM x [m]
  double y_G = 0.0;    // CoM y [m]

  std::array<double, 6> to_array() const { return {psi, r, beta, delta, x_G, y_G}; }
  static VehicleState from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool all_finite() const;
};

/// Inputs to the model: speed command and steering-rate command.
struct ModelInput {
  double v = 0.0;        // vehicle speed [m/s]
  double u_delta = 0.0;  // steering rate [rad/s]
};

inline constexpr double kDefaultSpeedFloor = 1e-6;  // [m/s]

/// Thrown when |v| falls below the floor; v divides the yaw-rate and
/// sideslip derivatives, so the vector field is undefined there.
class SpeedBelowFloorError : public std::runtime_error {
 public:
  explicit SpeedBelowFloorError(double v, double floor);
};

class DivergedTrajectoryError : public std::runtime_error {
 public:
  explicit DivergedTrajectoryError(double t);
  double time() const { return t_; }

 private:
  double t_;
};

/// Continuous-time vector field of the single-track model augmented with the
/// steering integrator channel (delta_dot = u_delta). Returns the derivative
/// packed as a VehicleState.
VehicleState dynamics(const VehicleState& state, const ModelInput& input,
                      const VehicleParams& params,
                      double v_min = kDefaultSpeedFloor);

struct TrajectoryPoint {
  double t;
  VehicleState state;
  ModelInput input;  // input held over [t, t+dt)
};

using Controller = std::function<ModelInput(double t, const VehicleState&)>;

/// One classical RK4 step with the input held constant (zero-order hold).
VehicleState rk4_step(const VehicleState& state, const ModelInput& input,
                      const VehicleParams& params, double dt,
                      double v_min = kDefaultSpeedFloor);

/// Fixed-step RK4 integration over [0, T]. The controller is sampled once per
/// step boundary and held, emulating the discrete 100 Hz controller; the
/// default dt of 0.01 s matches that rate. The returned series contains the
/// initial sample and one sample per step.
std::vector<TrajectoryPoint> integrate(const VehicleState& state0,
                                       const Controller& controller,
                                       const VehicleParams& params, double dt,
                                       double T,
                                       double v_min = kDefaultSpeedFloor);

}  // namespace fblin
