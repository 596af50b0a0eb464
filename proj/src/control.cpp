#include "fblin/control.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fblin {

void TrackingGains::validate() const {
  if (!(K_Px >= 0) || !(K_Py >= 0))
    throw std::invalid_argument("tracking gains must be non-negative");
}

namespace {

ReferenceSample sample_circle(const CircleReference& c, double t) {
  const double a = c.angular_velocity * t + c.phase;
  ReferenceSample s;
  s.point = {c.center.x + c.radius * std::cos(a),
             c.center.y + c.radius * std::sin(a)};
  s.feedforward = {-c.radius * c.angular_velocity * std::sin(a),
                   c.radius * c.angular_velocity * std::cos(a)};
  return s;
}

ReferenceSample sample_piecewise(const PiecewiseConstantVelocityReference& r,
                                 double t) {
  ReferenceSample s;
  s.point = r.origin;
  double t0 = 0;
  for (const auto& seg : r.segments) {
    const double span = std::clamp(t - t0, 0.0, seg.duration);
    s.point.x += seg.v_Px * span;
    s.point.y += seg.v_Py * span;
    if (t < t0 + seg.duration) {
      s.feedforward = {seg.v_Px, seg.v_Py};
      return s;
    }
    t0 += seg.duration;
  }
  s.feedforward = {0, 0};  // past the schedule: hold last position
  return s;
}

ReferenceSample sample_points(const SampledReference& r, double t) {
  ReferenceSample s;
  if (r.samples.empty()) return s;
  if (t <= r.samples.front().t) {
    s.point = r.samples.front().point;
    return s;
  }
  if (t >= r.samples.back().t) {
    s.point = r.samples.back().point;
    return s;
  }
  const auto it = std::upper_bound(
      r.samples.begin(), r.samples.end(), t,
      [](double tt, const TimedPoint& p) { return tt < p.t; });
  const TimedPoint& b = *it;
  const TimedPoint& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  s.point = {a.point.x + w * (b.point.x - a.point.x),
             a.point.y + w * (b.point.y - a.point.y)};
  s.feedforward = {(b.point.x - a.point.x) / (b.t - a.t),
                   (b.point.y - a.point.y) / (b.t - a.t)};
  return s;
}

}  // namespace

ReferenceSample reference_point(const ReferenceTrajectory& ref, double t) {
  if (t < 0) throw std::invalid_argument("reference_point: t must be >= 0");
  return std::visit(
      [t](const auto& r) -> ReferenceSample {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, CircleReference>)
          return sample_circle(r, t);
        else if constexpr (std::is_same_v<T, PiecewiseConstantVelocityReference>)
          return sample_piecewise(r, t);
        else
          return sample_points(r, t);
      },
      ref);
}

std::vector<DropoutEpisode> DropoutModel::realize(double T) const {
  std::vector<DropoutEpisode> eps;
  if (!enabled) return eps;
  if (stochastic) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate > 0 ? rate : 1e-12);
    std::uniform_real_distribution<double> dur(min_duration, max_duration);
    double t = 0;
    while (true) {
      t += gap(rng);
      if (t >= T) break;
      const double d = dur(rng);
      eps.push_back({t, std::min(d, T - t)});
      t += d;
    }
  } else {
    eps = episodes;
  }
  std::sort(eps.begin(), eps.end(),
            [](const DropoutEpisode& a, const DropoutEpisode& b) {
              return a.start < b.start;
            });
  // Merge overlaps so episodes are disjoint.
  std::vector<DropoutEpisode> merged;
  for (const auto& e : eps) {
    if (!merged.empty() &&
        e.start <= merged.back().start + merged.back().duration) {
      const double end = std::max(merged.back().start + merged.back().duration,
                                  e.start + e.duration);
      merged.back().duration = end - merged.back().start;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

PointVelocityCommand tracking_law(const Vec2& ref_point, const Vec2& meas_point,
                                  const TrackingGains& gains) {
  return {gains.K_Px * (ref_point.x - meas_point.x),
          gains.K_Py * (ref_point.y - meas_point.y)};
}

namespace {

bool in_episode(double t, const std::vector<DropoutEpisode>& eps) {
  for (const auto& e : eps)
    if (t >= e.start && t < e.start + e.duration) return true;
  return false;
}

}  // namespace

std::vector<Measurement> apply_dropout(const std::vector<Measurement>& stream,
                                       const std::vector<DropoutEpisode>& episodes) {
  std::vector<Measurement> out;
  out.reserve(stream.size());
  bool have_held = false;
  Measurement held{};
  for (const auto& m : stream) {
    Measurement o = m;
    if (in_episode(m.t, episodes)) {
      if (have_held) {
        o.x_G = held.x_G;
        o.y_G = held.y_G;
        o.psi = held.psi;
      }
    } else {
      held = m;
      have_held = true;
    }
    out.push_back(o);
  }
  return out;
}

SimulationError::SimulationError(double t, const std::string& what)
    : std::runtime_error("simulation failed at t = " + std::to_string(t) + ": " +
                         what),
      t_(t) {}

RunLog run_tracking(const ReferenceTrajectory& ref, const TrackingGains& gains,
                    const DropoutModel& dropout, const VehicleState& state0,
                    const VehicleParams& params, const LinearisationConfig& cfg,
                    const TrackingOptions& opt) {
  gains.validate();
  cfg.validate();
  params.validate();
  if (!(opt.dt > 0) || !(opt.T >= opt.dt))
    throw std::invalid_argument("run_tracking: need dt > 0 and T >= dt");

  const auto episodes = dropout.realize(opt.T);
  const auto n_steps = static_cast<std::size_t>(std::llround(opt.T / opt.dt));

  // The controller measures point P with its own CoM estimate; the log
  // records the physical point P.
  LinearisationConfig cfg_true = cfg;
  cfg_true.l_f_est = params.l_f;

  RunLog log;
  log.law = cfg.law;
  log.rows.reserve(n_steps + 1);

  VehicleState state = state0;
  Measurement held{};
  bool have_held = false;

  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    const bool blind = in_episode(t, episodes);
    Measurement meas{t,        state.x_G,  state.y_G, state.psi,
                     state.r,  state.beta, state.delta};
    if (blind && have_held) {
      meas.x_G = held.x_G;
      meas.y_G = held.y_G;
      meas.psi = held.psi;
    } else if (!blind) {
      held = meas;
      have_held = true;
    }

    VehicleState meas_state = state;
    meas_state.x_G = meas.x_G;
    meas_state.y_G = meas.y_G;
    meas_state.psi = meas.psi;

    const ReferenceSample rs = reference_point(ref, t);
    const Vec2 p_meas = point_p_position(meas_state, cfg);
    PointVelocityCommand cmd = tracking_law(rs.point, p_meas, gains);
    if (opt.use_feedforward) {
      cmd.v_Px += rs.feedforward.x;
      cmd.v_Py += rs.feedforward.y;
    }

    RunRow row;
    row.t = t;
    row.state = state;
    row.point_p = point_p_position(state, cfg_true);
    row.point_p_ref = rs.point;
    row.cmd = cmd;
    row.dropout_active = blind;

    // The controller runs at 1/dt; the plant is integrated with enough
    // substeps under the held input to keep RK4 inside its stability region
    // for the fast tyre modes (~C/(m v), ~C l^2/(I_z v)).
    const auto substeps = [&](double v) {
      const double av = std::max(std::abs(v), opt.min_speed);
      // Spectral radius of the frozen-speed (r, beta) block.
      const double a11 = -(params.C_f * params.l_f * params.l_f +
                           params.C_r * params.l_r * params.l_r) /
                         (params.I_z * av);
      const double a12 = (params.C_r * params.l_r - params.C_f * params.l_f) /
                         params.I_z;
      const double a21 = (params.C_r * params.l_r - params.C_f * params.l_f) /
                             (params.m * av * av) - 1.0;
      const double a22 = -(params.C_f + params.C_r) / (params.m * av);
      const double tr = a11 + a22, det = a11 * a22 - a12 * a21;
      const double disc = tr * tr - 4 * det;
      double rho;
      if (disc >= 0) {
        const double s = std::sqrt(disc);
        rho = std::max(std::abs(tr + s), std::abs(tr - s)) / 2;
      } else {
        rho = std::sqrt(det);
      }
      return std::clamp(static_cast<int>(std::ceil(opt.dt * rho / 1.5)), 1,
                        20000);
    };

    try {
      if (cfg.law == Law::FrontAxleOffset) {
        ControlCommand u = linearising_law_uncertain(meas_state, cmd, cfg);
        // Eq. 1's tyre modes are unstable for v < 0; scenarios here are
        // forward-motion, so the command is floored at +min_speed.
        if (u.v < opt.min_speed) u.v = opt.min_speed;
        row.v_cmd = u.v;
        row.steer_cmd = *u.u_delta;
        log.rows.push_back(row);
        if (k == n_steps) break;
        const int n = substeps(u.v);
        for (int s = 0; s < n; ++s)
          state = rk4_step(state, ModelInput{u.v, *u.u_delta}, params, opt.dt / n);
      } else {
        // Lift the command's heading projection to the speed floor without
        // touching its transverse (omega) component.
        const double c = std::cos(meas_state.psi + meas_state.beta);
        const double s = std::sin(meas_state.psi + meas_state.beta);
        const double proj = cmd.v_Px * c + cmd.v_Py * s;
        if (proj < opt.min_speed) {
          cmd.v_Px += (opt.min_speed - proj) * c;
          cmd.v_Py += (opt.min_speed - proj) * s;
          row.cmd = cmd;
        }
        const ControlCommand u =
            linearising_law_alternative(meas_state, cmd, cfg, params);
        row.v_cmd = u.v;
        row.steer_cmd = *u.delta;
        log.rows.push_back(row);
        if (k == n_steps) break;
        // Steering is commanded directly by this law.
        state.delta = *u.delta;
        const int n = substeps(u.v);
        for (int s2 = 0; s2 < n; ++s2)
          state = rk4_step(state, ModelInput{u.v, 0.0}, params, opt.dt / n);
      }
    } catch (const std::exception& e) {
      throw SimulationError(t, e.what());
    }
    if (!state.all_finite())
      throw SimulationError(t + opt.dt, "state diverged (non-finite)");
  }
  return log;
}

MetricError::MetricError(const std::string& what)
    : std::runtime_error("nmpe: " + what) {}

double compute_nmpe(const std::vector<std::vector<double>>& simulated,
                    const std::vector<std::vector<double>>& reference) {
  if (simulated.size() != reference.size() || simulated.empty())
    throw MetricError("channel count mismatch or no channels");
  double acc = 0;
  for (std::size_t c = 0; c < simulated.size(); ++c) {
    const auto& sim = simulated[c];
    const auto& ref = reference[c];
    if (sim.size() != ref.size() || sim.empty())
      throw MetricError("series length mismatch in channel " + std::to_string(c));
    double mean = 0;
    for (double x : ref) mean += x;
    mean /= static_cast<double>(ref.size());
    double var = 0, mse = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      var += (ref[i] - mean) * (ref[i] - mean);
      mse += (sim[i] - ref[i]) * (sim[i] - ref[i]);
    }
    var /= static_cast<double>(ref.size());
    mse /= static_cast<double>(ref.size());
    if (!(var > 0))
      throw MetricError("zero-variance reference in channel " + std::to_string(c));
    acc += std::sqrt(mse) / std::sqrt(var);
  }
  return acc / static_cast<double>(simulated.size());
}

}  // namespace fblin
