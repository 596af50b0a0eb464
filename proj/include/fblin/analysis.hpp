#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "fblin/linearise.hpp"
#include "fblin/model.hpp"

namespace fblin {

/// Steady motion psi = psi_bar, r = beta = delta = 0 at speed v_bar.
struct EquilibriumSpec {
  double v_bar = 1.0;            // [m/s], > 0
  double psi_bar = M_PI / 4.0;   // [rad]
  Law law = Law::FrontAxleOffset;

  int dim() const { return law == Law::FrontAxleOffset ? 4 : 3; }
};

/// Dense square matrix of dimension at most 4, enough for the reduced
/// closed-loop Jacobians.
struct SmallMatrix {
  int n = 0;
  double a[4][4] = {};

  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }
  double norm() const;  // Frobenius
};

class EigenSolveError : public std::runtime_error {
 public:
  explicit EigenSolveError(const std::string& what);
};

class EquilibriumResidualError : public std::runtime_error {
 public:
  explicit EquilibriumResidualError(double residual, double tol);
};

/// All eigenvalues of M via characteristic-polynomial root finding
/// (Faddeev-LeVerrier coefficients + Durand-Kerner iteration with Newton
/// polishing), with a residual verification pass on det(M - lambda I).
std::vector<std::complex<double>> eigenvalues(const SmallMatrix& M);

/// Reduced closed-loop vector field at xi (size 4 for the front-axle-offset
/// law, 3 for the velocity-direction law). Commands are pinned to the steady
/// motion of eq; the controller's CoM estimate is params.l_f + dl.
std::vector<double> closed_loop_field(std::span<const double> xi,
                                      const EquilibriumSpec& eq, double dl,
                                      const VehicleParams& params,
                                      const LinearisationConfig& cfg);

/// Central-difference Jacobian of the closed-loop field at the equilibrium,
/// step 1e-6 * max(1, |component|) per axis. Verifies the equilibrium
/// residual (<= 1e-10) before differencing.
SmallMatrix jacobian(const EquilibriumSpec& eq, double dl,
                     const VehicleParams& params,
                     const LinearisationConfig& cfg);

inline constexpr double kStabilityTol = 1e-9;  // [1/s]

enum class Verdict { Stable, Unstable, Invalid };

const char* verdict_name(Verdict v);

struct CellResult {
  double v_bar = 0.0;
  double dl = 0.0;
  Verdict verdict = Verdict::Invalid;
  double max_re = 0.0;
  std::vector<std::complex<double>> eigs;
  std::string error;  // non-empty iff Invalid
};

struct HopfPoint {
  double v_bar = 0.0;
  double dl_star = 0.0;
  double hopf_freq = 0.0;  // |Im| of the crossing pair [rad/s]
  bool is_hopf = false;    // false: a real eigenvalue crossed instead
};

struct StabilityMap {
  std::vector<double> v_bar_grid;
  std::vector<double> dl_grid;
  std::vector<CellResult> cells;  // row-major: cells[iv * dl_grid.size() + idl]
  std::vector<HopfPoint> hopf_points;

  const CellResult& cell(std::size_t iv, std::size_t idl) const {
    return cells[iv * dl_grid.size() + idl];
  }
};

/// Sweeps the (v_bar, dl) grid, classifying each cell from the Jacobian
/// eigenvalues, then bisects every verdict flip between valid neighbours to
/// locate the Hopf boundary. Cells where the field errors out are marked
/// invalid, not unstable.
StabilityMap stability_sweep(const std::vector<double>& v_bar_grid,
                             double dl_min, double dl_max, double dl_step,
                             const VehicleParams& params,
                             const LinearisationConfig& cfg);

struct HopfResult {
  double dl_star = 0.0;
  double hopf_freq = 0.0;
  bool is_hopf = false;
  double max_re = 0.0;  // at dl_star, |max_re| <= 1e-8 on success
  std::vector<std::complex<double>> eigs;  // at dl_star
};

class BracketError : public std::runtime_error {
 public:
  explicit BracketError(const std::string& what);
};

/// Bisects dl between a stable and an unstable sample until the rightmost
/// eigenvalue real part is within 1e-8 of zero (bracket width <= 1e-7 m).
/// Throws BracketError when both ends share a verdict; a real-eigenvalue
/// crossing is reported through is_hopf = false, never silently.
HopfResult hopf_bisect(double v_bar, double dl_stable, double dl_unstable,
                       const VehicleParams& params,
                       const LinearisationConfig& cfg);

}  // namespace fblin
