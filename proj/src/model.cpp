#include "fblin/model.hpp"

#include <cmath>

#include "fblin/detail/field_impl.hpp"

namespace fblin {

namespace {

std::string invalid_param(const char* name, double value) {
  return std::string("vehicle parameter ") + name + " must be positive, got " +
         std::to_string(value);
}

}  // namespace

void VehicleParams::validate() const {
  if (!(m > 0)) throw std::invalid_argument(invalid_param("m", m));
  if (!(I_z > 0)) throw std::invalid_argument(invalid_param("I_z", I_z));
  if (!(l_f > 0)) throw std::invalid_argument(invalid_param("l_f", l_f));
  if (!(l_r > 0)) throw std::invalid_argument(invalid_param("l_r", l_r));
  if (!(C_f > 0)) throw std::invalid_argument(invalid_param("C_f", C_f));
  if (!(C_r > 0)) throw std::invalid_argument(invalid_param("C_r", C_r));
}

bool VehicleState::all_finite() const {
  for (double x : to_array())
    if (!std::isfinite(x)) return false;
  return true;
}

SpeedBelowFloorError::SpeedBelowFloorError(double v, double floor)
    : std::runtime_error("speed |v| = " + std::to_string(std::abs(v)) +
                         " below floor " + std::to_string(floor) +
                         "; v divides the yaw-rate and sideslip derivative terms") {}

DivergedTrajectoryError::DivergedTrajectoryError(double t)
    : std::runtime_error("trajectory diverged (non-finite state) at t = " +
                         std::to_string(t)),
      t_(t) {}

VehicleState dynamics(const VehicleState& state, const ModelInput& input,
                      const VehicleParams& params, double v_min) {
  if (!(std::abs(input.v) > v_min)) throw SpeedBelowFloorError(input.v, v_min);
  const auto f = detail::dynamics_impl(state.psi, state.r, state.beta,
                                       state.delta, input.v, input.u_delta,
                                       params);
  return {f.psi_dot, f.r_dot, f.beta_dot, f.delta_dot, f.x_dot, f.y_dot};
}

VehicleState rk4_step(const VehicleState& state, const ModelInput& input,
                      const VehicleParams& params, double dt, double v_min) {
  const auto axpy = [](const VehicleState& s, double h, const VehicleState& d) {
    auto a = s.to_array();
    const auto b = d.to_array();
    for (int i = 0; i < 6; ++i) a[i] += h * b[i];
    return VehicleState::from_array(a);
  };
  const VehicleState k1 = dynamics(state, input, params, v_min);
  const VehicleState k2 = dynamics(axpy(state, dt / 2, k1), input, params, v_min);
  const VehicleState k3 = dynamics(axpy(state, dt / 2, k2), input, params, v_min);
  const VehicleState k4 = dynamics(axpy(state, dt, k3), input, params, v_min);
  auto out = state.to_array();
  const auto a1 = k1.to_array(), a2 = k2.to_array(), a3 = k3.to_array(),
             a4 = k4.to_array();
  for (int i = 0; i < 6; ++i)
    out[i] += dt / 6.0 * (a1[i] + 2 * a2[i] + 2 * a3[i] + a4[i]);
  return VehicleState::from_array(out);
}

std::vector<TrajectoryPoint> integrate(const VehicleState& state0,
                                       const Controller& controller,
                                       const VehicleParams& params, double dt,
                                       double T, double v_min) {
  if (!(dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(T >= dt)) throw std::invalid_argument("integrate: T must be >= dt");
  const auto n_steps = static_cast<std::size_t>(std::llround(T / dt));

  std::vector<TrajectoryPoint> out;
  out.reserve(n_steps + 1);
  VehicleState state = state0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ModelInput input = controller(t, state);
    out.push_back({t, state, input});
    state = rk4_step(state, input, params, dt, v_min);
    if (!state.all_finite()) throw DivergedTrajectoryError(t + dt);
  }
  out.push_back({static_cast<double>(n_steps) * dt, state, ModelInput{}});
  return out;
}

}  // namespace fblin
