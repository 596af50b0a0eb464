#pragma once

// Scalar-generic evaluation of the vehicle field and the linearising laws.
// Instantiated with double by the public API and with std::complex<double>
// by the complex-step differentiation oracle in the test suite.

#include <array>
#include <cmath>
#include <complex>

#include "fblin/model.hpp"

namespace fblin::detail {

template <class T>
struct FieldResult {
  T psi_dot, r_dot, beta_dot, delta_dot, x_dot, y_dot;
};

template <class T>
FieldResult<T> dynamics_impl(T psi, T r, T beta, T delta, T v, T u_delta,
                             const VehicleParams& p) {
  using std::cos;
  using std::sin;
  const T r_dot = (p.C_r * p.l_r - p.C_f * p.l_f) / p.I_z * beta -
                  (p.C_f * p.l_f * p.l_f + p.C_r * p.l_r * p.l_r) / (p.I_z * v) * r +
                  p.C_f * p.l_f / p.I_z * delta;
  const T beta_dot = -(p.C_f + p.C_r) / (p.m * v) * beta +
                     ((p.C_r * p.l_r - p.C_f * p.l_f) / (p.m * v * v) - 1.0) * r +
                     p.C_f / (p.m * v) * delta;
  return {r, r_dot, beta_dot, u_delta, v * cos(psi + beta), v * sin(psi + beta)};
}

template <class T>
struct LawFrontAxleResult {
  T v, u_delta;
};

// Front-axle-offset linearising law; l_f_est equals the true l_f in the
// nominal case. The caller is responsible for the cos(beta-delta) guard.
template <class T>
LawFrontAxleResult<T> law_front_axle_impl(T psi, T r, T beta, T delta, T v_Px,
                                          T v_Py, double p, double l_f_est) {
  using std::cos;
  using std::sin;
  const T den = cos(beta - delta);
  const T v = (v_Px * cos(psi + delta) + v_Py * sin(psi + delta) -
               r * l_f_est * sin(delta)) / den;
  const T u_delta = (v_Py * cos(psi + beta) - v_Px * sin(psi + beta) -
                     r * l_f_est * cos(beta)) / (p * den) - r;
  return {v, u_delta};
}

template <class T>
struct LawVelocityDirResult {
  T v, delta, omega;
};

// Velocity-direction linearising law. The CoM estimate shifts both axle
// distances with the wheelbase fixed (l_f_est = l_f + dl, l_r_est = l_r - dl),
// entering through the (C_r l_r_est - C_f l_f_est) coefficient of the r/v term.
template <class T>
LawVelocityDirResult<T> law_velocity_dir_impl(T psi, T r, T beta, T v_Px, T v_Py,
                                              double p, double l_f_est,
                                              const VehicleParams& prm) {
  using std::cos;
  using std::sin;
  const double l_r_est = prm.l_r - (l_f_est - prm.l_f);
  const T c = cos(psi + beta);
  const T s = sin(psi + beta);
  const T v = v_Px * c + v_Py * s;
  const T omega = (v_Py * c - v_Px * s) / p;
  const T delta = prm.m * omega / prm.C_f * v -
                  (prm.C_r * l_r_est - prm.C_f * l_f_est) / prm.C_f * r / v +
                  (prm.C_r + prm.C_f) / prm.C_f * beta;
  return {v, delta, omega};
}

// Reduced closed-loop field for the front-axle-offset law,
// xi = (psi, r, beta, delta). Commands are the constant steady-motion pair
// v_Px = v_bar cos(psi_bar), v_Py = v_bar sin(psi_bar).
template <class T>
std::array<T, 4> closed_loop_front_axle_impl(const std::array<T, 4>& xi,
                                             double v_bar, double psi_bar,
                                             double p, double l_f_est,
                                             const VehicleParams& prm) {
  const T v_Px = T(v_bar * std::cos(psi_bar));
  const T v_Py = T(v_bar * std::sin(psi_bar));
  const auto cmd = law_front_axle_impl(xi[0], xi[1], xi[2], xi[3], v_Px, v_Py,
                                       p, l_f_est);
  const auto f = dynamics_impl(xi[0], xi[1], xi[2], xi[3], cmd.v, cmd.u_delta, prm);
  return {f.psi_dot, f.r_dot, f.beta_dot, f.delta_dot};
}

// Reduced closed-loop field for the velocity-direction law,
// xi = (psi, r, beta); the steering angle is assigned algebraically.
template <class T>
std::array<T, 3> closed_loop_velocity_dir_impl(const std::array<T, 3>& xi,
                                               double v_bar, double psi_bar,
                                               double p, double l_f_est,
                                               const VehicleParams& prm) {
  const T v_Px = T(v_bar * std::cos(psi_bar));
  const T v_Py = T(v_bar * std::sin(psi_bar));
  const auto cmd = law_velocity_dir_impl(xi[0], xi[1], xi[2], v_Px, v_Py, p,
                                         l_f_est, prm);
  const auto f = dynamics_impl(xi[0], xi[1], xi[2], cmd.delta, cmd.v, T(0), prm);
  return {f.psi_dot, f.r_dot, f.beta_dot};
}

}  // namespace fblin::detail
