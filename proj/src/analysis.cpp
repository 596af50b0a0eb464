#include "fblin/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "fblin/detail/field_impl.hpp"

namespace fblin {

namespace {

using cplx = std::complex<double>;

// Monic characteristic polynomial coefficients via Faddeev-LeVerrier:
// p(x) = x^n - c[0] x^(n-1) - c[1] x^(n-2) - ... - c[n-1].
std::vector<double> char_poly(const SmallMatrix& M) {
  const int n = M.n;
  double Mk[4][4];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Mk[i][j] = M(i, j);

  std::vector<double> c(n);
  for (int k = 1; k <= n; ++k) {
    double tr = 0;
    for (int i = 0; i < n; ++i) tr += Mk[i][i];
    c[k - 1] = tr / k;
    if (k == n) break;
    double tmp[4][4];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tmp[i][j] = Mk[i][j] - (i == j ? c[k - 1] : 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += M(i, l) * tmp[l][j];
        Mk[i][j] = s;
      }
  }
  return c;
}

// p and p' for p(x) = x^n - c[0] x^(n-1) - ... - c[n-1].
cplx poly_eval(const std::vector<double>& c, cplx x, cplx* dp = nullptr) {
  const int n = static_cast<int>(c.size());
  cplx p = 1.0, d = 0.0;
  for (int k = 0; k < n; ++k) {
    d = d * x + p;
    p = p * x - c[k];
  }
  if (dp) *dp = d;
  return p;
}

}  // namespace

double SmallMatrix::norm() const {
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += a[i][j] * a[i][j];
  return std::sqrt(s);
}

EigenSolveError::EigenSolveError(const std::string& what)
    : std::runtime_error("eigenvalue solve failed: " + what) {}

EquilibriumResidualError::EquilibriumResidualError(double residual, double tol)
    : std::runtime_error("point is not an equilibrium: field residual " +
                         std::to_string(residual) + " exceeds " +
                         std::to_string(tol)) {}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    default: return "invalid";
  }
}

std::vector<cplx> eigenvalues(const SmallMatrix& M) {
  const int n = M.n;
  if (n < 1 || n > 4) throw EigenSolveError("dimension must be 1..4");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(M(i, j))) throw EigenSolveError("non-finite entry");

  const std::vector<double> c = char_poly(M);

  // Durand-Kerner simultaneous iteration from the usual rotated start.
  double radius = 1.0;
  for (double ck : c) radius = std::max(radius, 1.0 + std::abs(ck));
  std::vector<cplx> z(n);
  const cplx seed(0.4, 0.9);
  cplx pw = 1.0;
  for (int i = 0; i < n; ++i) {
    pw *= seed;
    z[i] = radius * pw;
  }
  const int max_iter = 500;
  bool converged = false;
  for (int it = 0; it < max_iter && !converged; ++it) {
    double max_step = 0;
    for (int i = 0; i < n; ++i) {
      cplx den = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      if (std::abs(den) == 0.0) {
        z[i] += cplx(1e-12 * radius, 1e-12 * radius);
        continue;
      }
      const cplx step = poly_eval(c, z[i]) / den;
      z[i] -= step;
      max_step = std::max(max_step, std::abs(step));
    }
    converged = max_step < 1e-15 * radius;
  }

  // Newton polish; multiple roots keep the Durand-Kerner value.
  for (int i = 0; i < n; ++i) {
    for (int it = 0; it < 4; ++it) {
      cplx d;
      const cplx p = poly_eval(c, z[i], &d);
      if (std::abs(d) < 1e-12 * radius) break;
      const cplx step = p / d;
      if (!(std::abs(step) < 0.5 * radius)) break;
      z[i] -= step;
    }
    // The matrix is real, so snap near-real roots.
    if (std::abs(z[i].imag()) < 1e-10 * radius) z[i] = cplx(z[i].real(), 0.0);
  }

  // Verification pass: |det(M - lambda I)| = |p(lambda)| against poly scale.
  double scale = std::max(1.0, std::pow(radius, n));
  for (int i = 0; i < n; ++i) {
    if (!(std::abs(poly_eval(c, z[i])) <= 1e-8 * scale))
      throw EigenSolveError("root residual check failed (no convergence)");
  }

  std::sort(z.begin(), z.end(), [](const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return z;
}

std::vector<double> closed_loop_field(std::span<const double> xi,
                                      const EquilibriumSpec& eq, double dl,
                                      const VehicleParams& params,
                                      const LinearisationConfig& cfg) {
  const double l_f_est = params.l_f + dl;
  if (eq.law == Law::FrontAxleOffset) {
    if (xi.size() != 4)
      throw std::invalid_argument("closed_loop_field: expected 4 components");
    // Keep the singularity guard of the law.
    VehicleState s;
    s.psi = xi[0]; s.r = xi[1]; s.beta = xi[2]; s.delta = xi[3];
    LinearisationConfig c = cfg;
    c.l_f_est = l_f_est;
    const PointVelocityCommand cmd{eq.v_bar * std::cos(eq.psi_bar),
                                   eq.v_bar * std::sin(eq.psi_bar)};
    const ControlCommand u = linearising_law_uncertain(s, cmd, c);
    const VehicleState f =
        dynamics(s, ModelInput{u.v, *u.u_delta}, params);
    return {f.psi, f.r, f.beta, f.delta};
  }
  if (xi.size() != 3)
    throw std::invalid_argument("closed_loop_field: expected 3 components");
  VehicleState s;
  s.psi = xi[0]; s.r = xi[1]; s.beta = xi[2];
  LinearisationConfig c = cfg;
  c.l_f_est = l_f_est;
  const PointVelocityCommand cmd{eq.v_bar * std::cos(eq.psi_bar),
                                 eq.v_bar * std::sin(eq.psi_bar)};
  const ControlCommand u = linearising_law_alternative(s, cmd, c, params);
  s.delta = *u.delta;
  const VehicleState f = dynamics(s, ModelInput{u.v, 0.0}, params);
  return {f.psi, f.r, f.beta};
}

SmallMatrix jacobian(const EquilibriumSpec& eq, double dl,
                     const VehicleParams& params,
                     const LinearisationConfig& cfg) {
  const int n = eq.dim();
  std::vector<double> x0(n, 0.0);
  x0[0] = eq.psi_bar;

  const std::vector<double> f0 = closed_loop_field(x0, eq, dl, params, cfg);
  double residual = 0;
  for (double f : f0) residual = std::max(residual, std::abs(f));
  if (residual > 1e-10) throw EquilibriumResidualError(residual, 1e-10);

  SmallMatrix J;
  J.n = n;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[j]));
    std::vector<double> xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    const std::vector<double> fp = closed_loop_field(xp, eq, dl, params, cfg);
    const std::vector<double> fm = closed_loop_field(xm, eq, dl, params, cfg);
    for (int i = 0; i < n; ++i) {
      const double d = (fp[i] - fm[i]) / (2 * h);
      if (!std::isfinite(d))
        throw EigenSolveError("non-finite Jacobian entry");
      J(i, j) = d;
    }
  }
  return J;
}

namespace {

CellResult classify_cell(double v_bar, double dl, const VehicleParams& params,
                         const LinearisationConfig& cfg, Law law) {
  CellResult cell;
  cell.v_bar = v_bar;
  cell.dl = dl;
  try {
    EquilibriumSpec eq;
    eq.v_bar = v_bar;
    eq.law = law;
    const SmallMatrix J = jacobian(eq, dl, params, cfg);
    cell.eigs = eigenvalues(J);
    cell.max_re = cell.eigs.front().real();
    for (const auto& l : cell.eigs) cell.max_re = std::max(cell.max_re, l.real());
    cell.verdict = cell.max_re < -kStabilityTol ? Verdict::Stable : Verdict::Unstable;
  } catch (const std::exception& e) {
    cell.verdict = Verdict::Invalid;
    cell.error = e.what();
  }
  return cell;
}

}  // namespace

StabilityMap stability_sweep(const std::vector<double>& v_bar_grid,
                             double dl_min, double dl_max, double dl_step,
                             const VehicleParams& params,
                             const LinearisationConfig& cfg) {
  if (v_bar_grid.empty())
    throw std::invalid_argument("stability_sweep: empty speed grid");
  if (!(dl_step > 0) || !(dl_max >= dl_min))
    throw std::invalid_argument("stability_sweep: bad dl range");

  StabilityMap map;
  map.v_bar_grid = v_bar_grid;
  const auto n_dl = static_cast<std::size_t>(
      std::floor((dl_max - dl_min) / dl_step + 0.5)) + 1;
  map.dl_grid.reserve(n_dl);
  for (std::size_t i = 0; i < n_dl; ++i)
    map.dl_grid.push_back(dl_min + static_cast<double>(i) * dl_step);

  map.cells.reserve(v_bar_grid.size() * n_dl);
  for (double v_bar : v_bar_grid)
    for (double dl : map.dl_grid)
      map.cells.push_back(classify_cell(v_bar, dl, params, cfg, cfg.law));

  // Hopf boundary: bisect every verdict flip between valid neighbours.
  for (std::size_t iv = 0; iv < v_bar_grid.size(); ++iv) {
    for (std::size_t idl = 0; idl + 1 < n_dl; ++idl) {
      const CellResult& a = map.cell(iv, idl);
      const CellResult& b = map.cell(iv, idl + 1);
      if (a.verdict == Verdict::Invalid || b.verdict == Verdict::Invalid) continue;
      if (a.verdict == b.verdict) continue;
      const bool a_stable = a.verdict == Verdict::Stable;
      try {
        const HopfResult h =
            hopf_bisect(v_bar_grid[iv], a_stable ? a.dl : b.dl,
                        a_stable ? b.dl : a.dl, params, cfg);
        map.hopf_points.push_back(
            {v_bar_grid[iv], h.dl_star, h.hopf_freq, h.is_hopf});
      } catch (const BracketError&) {
        // Boundary sits inside the sweep tolerance band; the neighbouring
        // cells still carry their verdicts.
      }
    }
  }
  return map;
}

BracketError::BracketError(const std::string& what)
    : std::runtime_error("hopf_bisect: " + what) {}

HopfResult hopf_bisect(double v_bar, double dl_stable, double dl_unstable,
                       const VehicleParams& params,
                       const LinearisationConfig& cfg) {
  if (dl_stable == dl_unstable)
    throw BracketError("degenerate bracket (equal endpoints)");

  const auto max_re_at = [&](double dl) {
    EquilibriumSpec eq;
    eq.v_bar = v_bar;
    eq.law = cfg.law;
    const auto eigs = eigenvalues(jacobian(eq, dl, params, cfg));
    double m = eigs.front().real();
    for (const auto& l : eigs) m = std::max(m, l.real());
    return std::pair<double, std::vector<cplx>>(m, eigs);
  };

  auto [re_s, eigs_s] = max_re_at(dl_stable);
  auto [re_u, eigs_u] = max_re_at(dl_unstable);
  if (re_s >= 0)
    throw BracketError("bracket end marked stable has max Re(lambda) >= 0");
  if (re_u < 0)
    throw BracketError("both bracket ends are stable (same verdict)");

  double lo = dl_stable, hi = dl_unstable;
  double dl_mid = 0.5 * (lo + hi);
  auto [re_mid, eigs_mid] = max_re_at(dl_mid);
  for (int it = 0; it < 200; ++it) {
    if (std::abs(hi - lo) <= 1e-7 && std::abs(re_mid) <= 1e-8) break;
    if (re_mid < 0)
      lo = dl_mid;
    else
      hi = dl_mid;
    const double next = 0.5 * (lo + hi);
    if (next == dl_mid) break;
    dl_mid = next;
    std::tie(re_mid, eigs_mid) = max_re_at(dl_mid);
  }
  if (!(std::abs(re_mid) <= 1e-8))
    throw BracketError("bisection stalled before |max Re| <= 1e-8");

  HopfResult out;
  out.dl_star = dl_mid;
  out.max_re = re_mid;
  out.eigs = eigs_mid;
  // Crossing type: the rightmost eigenvalue(s) at the boundary.
  double max_re = eigs_mid.front().real();
  for (const auto& l : eigs_mid) max_re = std::max(max_re, l.real());
  double freq = 0;
  for (const auto& l : eigs_mid)
    if (std::abs(l.real() - max_re) <= 1e-7)
      freq = std::max(freq, std::abs(l.imag()));
  out.is_hopf = freq > 1e-6;
  out.hopf_freq = freq;
  return out;
}

}  // namespace fblin
