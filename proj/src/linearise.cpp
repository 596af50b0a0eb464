#include "fblin/linearise.hpp"

#include <cmath>

#include "fblin/detail/field_impl.hpp"

namespace fblin {

const char* law_name(Law law) {
  return law == Law::FrontAxleOffset ? "front_axle_offset" : "velocity_direction";
}

void LinearisationConfig::validate() const {
  if (!(p > 0))
    throw std::invalid_argument("linearisation: p must be positive (p = 0 is excluded)");
  if (!(l_f_est > 0))
    throw std::invalid_argument("linearisation: l_f_est must be positive");
  if (!(singularity_margin > 0 && singularity_margin < M_PI / 2))
    throw std::invalid_argument("linearisation: singularity_margin must be in (0, pi/2)");
}

ControlCommand ControlCommand::front_axle(double v, double u_delta) {
  ControlCommand c;
  c.v = v;
  c.law_tag = Law::FrontAxleOffset;
  c.u_delta = u_delta;
  return c;
}

ControlCommand ControlCommand::velocity_dir(double v, double delta) {
  ControlCommand c;
  c.v = v;
  c.law_tag = Law::VelocityDirection;
  c.delta = delta;
  return c;
}

SingularityError::SingularityError(double beta_minus_delta)
    : std::runtime_error(
          "linearising law singular: beta - delta = " +
          std::to_string(beta_minus_delta) +
          " rad is within the margin of pi/2 + k*pi (cos(beta - delta) ~ 0)") {}

ZeroVelocityError::ZeroVelocityError(double v)
    : std::runtime_error("velocity-direction law singular at zero speed: |v| = " +
                         std::to_string(std::abs(v))) {}

Vec2 point_p_position(const VehicleState& state, const LinearisationConfig& cfg) {
  if (cfg.law == Law::FrontAxleOffset) {
    return {state.x_G + cfg.l_f_est * std::cos(state.psi) +
                cfg.p * std::cos(state.psi + state.delta),
            state.y_G + cfg.l_f_est * std::sin(state.psi) +
                cfg.p * std::sin(state.psi + state.delta)};
  }
  return {state.x_G + cfg.p * std::cos(state.psi + state.beta),
          state.y_G + cfg.p * std::sin(state.psi + state.beta)};
}

Vec2 point_p_velocity(const VehicleState& state, const ModelInput& input,
                      const LinearisationConfig& cfg, const VehicleParams& params,
                      double v_min) {
  if (cfg.law == Law::FrontAxleOffset) {
    const double rate = state.r + input.u_delta;
    return {input.v * std::cos(state.psi + state.beta) -
                params.l_f * state.r * std::sin(state.psi) -
                cfg.p * rate * std::sin(state.psi + state.delta),
            input.v * std::sin(state.psi + state.beta) +
                params.l_f * state.r * std::cos(state.psi) +
                cfg.p * rate * std::cos(state.psi + state.delta)};
  }
  const VehicleState f = dynamics(state, input, params, v_min);
  const double heading_rate = f.psi + f.beta;  // psi_dot + beta_dot
  return {input.v * std::cos(state.psi + state.beta) -
              cfg.p * heading_rate * std::sin(state.psi + state.beta),
          input.v * std::sin(state.psi + state.beta) +
              cfg.p * heading_rate * std::cos(state.psi + state.beta)};
}

ControlCommand linearising_law_uncertain(const VehicleState& state,
                                         const PointVelocityCommand& cmd,
                                         const LinearisationConfig& cfg) {
  const double bd = state.beta - state.delta;
  if (std::abs(std::cos(bd)) <= std::sin(cfg.singularity_margin))
    throw SingularityError(bd);
  const auto out = detail::law_front_axle_impl(state.psi, state.r, state.beta,
                                               state.delta, cmd.v_Px, cmd.v_Py,
                                               cfg.p, cfg.l_f_est);
  return ControlCommand::front_axle(out.v, out.u_delta);
}

ControlCommand linearising_law_nominal(const VehicleState& state,
                                       const PointVelocityCommand& cmd,
                                       const LinearisationConfig& cfg) {
  return linearising_law_uncertain(state, cmd, cfg);
}

ControlCommand linearising_law_alternative(const VehicleState& state,
                                           const PointVelocityCommand& cmd,
                                           const LinearisationConfig& cfg,
                                           const VehicleParams& params,
                                           double v_min) {
  const double c = std::cos(state.psi + state.beta);
  const double s = std::sin(state.psi + state.beta);
  const double v = cmd.v_Px * c + cmd.v_Py * s;
  if (!(std::abs(v) > v_min)) throw ZeroVelocityError(v);
  const auto out = detail::law_velocity_dir_impl(state.psi, state.r, state.beta,
                                                 cmd.v_Px, cmd.v_Py, cfg.p,
                                                 cfg.l_f_est, params);
  return ControlCommand::velocity_dir(out.v, out.delta);
}

}  // namespace fblin
