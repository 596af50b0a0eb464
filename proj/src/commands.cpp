#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fblin/analysis.hpp"
#include "fblin/config.hpp"
#include "fblin/control.hpp"

namespace fblin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

class OutputDir {
 public:
  explicit OutputDir(const ScenarioConfig& cfg) : dir_(cfg.output_dir), cfg_(cfg) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + name);
    return out;
  }

  void write_manifest() {
    json m;
    m["config_hash"] = config_hash(cfg_);
    m["tool_version"] = kToolVersion;
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char ts[32];
    std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    m["timestamp"] = ts;
    files_.push_back("manifest.json");
    m["files"] = files_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  ScenarioConfig cfg_;
  std::vector<std::string> files_;
};

void write_run_csv(std::ofstream& out, const RunLog& log) {
  out << "t,x_G,y_G,psi,r,beta,delta,v_cmd,u_delta_or_delta_cmd,"
         "x_P,y_P,x_P_ref,y_P_ref,v_Px,v_Py,dropout_active\n";
  for (const auto& row : log.rows) {
    out << fmt(row.t) << ',' << fmt(row.state.x_G) << ',' << fmt(row.state.y_G)
        << ',' << fmt(row.state.psi) << ',' << fmt(row.state.r) << ','
        << fmt(row.state.beta) << ',' << fmt(row.state.delta) << ','
        << fmt(row.v_cmd) << ',' << fmt(row.steer_cmd) << ','
        << fmt(row.point_p.x) << ',' << fmt(row.point_p.y) << ','
        << fmt(row.point_p_ref.x) << ',' << fmt(row.point_p_ref.y) << ','
        << fmt(row.cmd.v_Px) << ',' << fmt(row.cmd.v_Py) << ','
        << (row.dropout_active ? 1 : 0) << '\n';
  }
}

void write_map_csv(std::ofstream& out, const StabilityMap& map) {
  out << "v_bar,dl,verdict,max_re,re_l1,re_l2,re_l3,re_l4,im_l1,im_l2,im_l3,im_l4\n";
  for (const auto& c : map.cells) {
    out << fmt(c.v_bar) << ',' << fmt(c.dl) << ',' << verdict_name(c.verdict)
        << ',';
    if (c.verdict != Verdict::Invalid) out << fmt(c.max_re);
    for (std::size_t i = 0; i < 4; ++i) {
      out << ',';
      if (i < c.eigs.size()) out << fmt(c.eigs[i].real());
    }
    for (std::size_t i = 0; i < 4; ++i) {
      out << ',';
      if (i < c.eigs.size()) out << fmt(c.eigs[i].imag());
    }
    out << '\n';
  }
}

void write_hopf_csv(std::ofstream& out, const std::vector<HopfPoint>& pts) {
  out << "v_bar,dl_star,hopf_freq\n";
  for (const auto& p : pts)
    out << fmt(p.v_bar) << ',' << fmt(p.dl_star) << ',' << fmt(p.hopf_freq)
        << '\n';
}

// Two-tone region shading with the Hopf boundary overlaid, one rect per cell.
void write_sweep_svg(std::ofstream& out, const StabilityMap& map) {
  const double W = 640, H = 480, ml = 60, mb = 40, mt = 10, mr = 10;
  const double dl0 = map.dl_grid.front(), dl1 = map.dl_grid.back();
  const double v0 = map.v_bar_grid.front(), v1 = map.v_bar_grid.back();
  const double sx = (W - ml - mr) / std::max(dl1 - dl0, 1e-12);
  const double sy = (H - mt - mb) / std::max(v1 - v0, 1e-12);
  const auto X = [&](double dl) { return ml + (dl - dl0) * sx; };
  const auto Y = [&](double v) { return H - mb - (v - v0) * sy; };
  const double cw = map.dl_grid.size() > 1
                        ? (map.dl_grid[1] - map.dl_grid[0]) * sx
                        : W - ml - mr;
  const double ch = map.v_bar_grid.size() > 1
                        ? (map.v_bar_grid[1] - map.v_bar_grid[0]) * sy
                        : H - mt - mb;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  for (const auto& c : map.cells) {
    const char* color = c.verdict == Verdict::Stable     ? "#d3d3d3"
                        : c.verdict == Verdict::Unstable ? "#555555"
                                                         : "#ffffff";
    out << "<rect x=\"" << fmt(X(c.dl) - cw / 2) << "\" y=\""
        << fmt(Y(c.v_bar) - ch / 2) << "\" width=\"" << fmt(cw)
        << "\" height=\"" << fmt(ch) << "\" fill=\"" << color << "\"/>\n";
  }
  for (const auto& p : map.hopf_points) {
    out << "<circle cx=\"" << fmt(X(p.dl_star)) << "\" cy=\"" << fmt(Y(p.v_bar))
        << "\" r=\"2\" fill=\"#000000\"/>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8
      << "\" font-size=\"14\" text-anchor=\"middle\">dl [m]</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << H / 2 << ")\">v_bar [m/s]</text>\n";
  out << "</svg>\n";
}

RunLog run_open_loop(const ScenarioConfig& cfg,
                     const OpenLoopStepsExperiment& exp) {
  VehicleState state0;  // at rest at the origin
  LinearisationConfig cfg_true = cfg.linearisation;
  cfg_true.l_f_est = cfg.vehicle.l_f;

  PiecewiseConstantVelocityReference nominal;
  nominal.origin = point_p_position(state0, cfg_true);
  nominal.segments = exp.schedule;

  TrackingOptions opt;
  opt.dt = cfg.dt;
  opt.T = cfg.horizon;
  opt.use_feedforward = true;  // no position loop: the law is fed directly
  return run_tracking(nominal, TrackingGains{0.0, 0.0}, cfg.dropout, state0,
                      cfg.vehicle, cfg.linearisation, opt);
}

RunLog run_circle(const ScenarioConfig& cfg, const CircleTrackingExperiment& exp) {
  CircleReference circle{exp.radius, exp.angular_velocity, exp.center, exp.phase};

  // Start with point P radially off the path by start_offset, heading along
  // the path tangent.
  const double a0 = exp.phase;
  const Vec2 p0{exp.center.x + (exp.radius + exp.start_offset) * std::cos(a0),
                exp.center.y + (exp.radius + exp.start_offset) * std::sin(a0)};
  VehicleState state0;
  state0.psi = a0 + (exp.angular_velocity >= 0 ? M_PI / 2 : -M_PI / 2);
  // Initial beta = delta = 0, so point P lies along the heading at a fixed arm.
  const double arm =(cfg.linearisation.law == Law::FrontAxleOffset
                          ? cfg.vehicle.l_f + cfg.linearisation.p
                          : cfg.linearisation.p);
  state0.x_G = p0.x - arm * std::cos(state0.psi);
  state0.y_G = p0.y - arm * std::sin(state0.psi);

  TrackingOptions opt;
  opt.dt = cfg.dt;
  opt.T = cfg.horizon;
  opt.use_feedforward = exp.feedforward;
  return run_tracking(circle, exp.gains, cfg.dropout, state0, cfg.vehicle,
                      cfg.linearisation, opt);
}

RunLog run_custom(const ScenarioConfig& cfg, const CustomExperiment& exp) {
  const auto series = integrate(
      exp.initial_state,
      [&exp](double, const VehicleState&) { return exp.input; }, cfg.vehicle,
      cfg.dt, cfg.horizon);
  LinearisationConfig cfg_true = cfg.linearisation;
  cfg_true.l_f_est = cfg.vehicle.l_f;
  RunLog log;
  log.law = cfg.linearisation.law;
  for (const auto& pt : series) {
    RunRow row;
    row.t = pt.t;
    row.state = pt.state;
    row.v_cmd = pt.input.v;
    row.steer_cmd = pt.input.u_delta;
    row.point_p = point_p_position(pt.state, cfg_true);
    row.point_p_ref = row.point_p;
    log.rows.push_back(row);
  }
  return log;
}

struct SinusoidFit {
  double amplitude = 0.0;
  double phase = 0.0;  // [rad]
};

// Fundamental of x(t) - mean at angular frequency w, by projection.
SinusoidFit fit_sinusoid(const std::vector<double>& t,
                         const std::vector<double>& x, double w) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double a = 0, b = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a += (x[i] - mean) * std::cos(w * t[i]);
    b += (x[i] - mean) * std::sin(w * t[i]);
  }
  a *= 2.0 / static_cast<double>(x.size());
  b *= 2.0 / static_cast<double>(x.size());
  return {std::hypot(a, b), std::atan2(-b, a)};
}

json tracking_summary(const RunLog& log, const CircleTrackingExperiment& exp) {
  const double w = exp.angular_velocity;
  const double period = 2 * M_PI / std::abs(w);
  const double t_end = log.rows.back().t;
  const double window = std::min(2 * period, t_end / 2);

  // Steady radial distance; a pure proportional loop tracks a circle of
  // radius slightly inside the reference, so settling is measured against
  // the orbit actually reached.
  double r_steady = 0;
  std::size_t n_steady = 0;
  for (const auto& row : log.rows) {
    if (row.t >= t_end - window) {
      r_steady += std::hypot(row.point_p.x - exp.center.x,
                             row.point_p.y - exp.center.y);
      ++n_steady;
    }
  }
  r_steady /= std::max<std::size_t>(n_steady, 1);

  std::vector<double> ts, xs, ys, xr, yr;
  double rms_radial = 0;
  std::size_t n_window = 0;
  double conv_time = -1;
  for (const auto& row : log.rows) {
    const double rad = std::hypot(row.point_p.x - exp.center.x,
                                  row.point_p.y - exp.center.y);
    const double radial_err = rad - exp.radius;
    if (std::abs(rad - r_steady) > 0.05 * exp.radius) conv_time = -1;
    else if (conv_time < 0) conv_time = row.t;
    if (row.t >= t_end - window) {
      ts.push_back(row.t);
      xs.push_back(row.point_p.x - exp.center.x);
      ys.push_back(row.point_p.y - exp.center.y);
      xr.push_back(row.point_p_ref.x - exp.center.x);
      yr.push_back(row.point_p_ref.y - exp.center.y);
      rms_radial += radial_err * radial_err;
      ++n_window;
    }
  }
  const SinusoidFit fx = fit_sinusoid(ts, xs, w);
  const SinusoidFit fy = fit_sinusoid(ts, ys, w);
  const SinusoidFit gx = fit_sinusoid(ts, xr, w);
  double lag = gx.phase - fx.phase;
  while (lag > M_PI) lag -= 2 * M_PI;
  while (lag < -M_PI) lag += 2 * M_PI;

  json s;
  s["rms_radial_error"] = std::sqrt(rms_radial / std::max<std::size_t>(n_window, 1));
  // Circularity of the steady-state path: x vs y fundamental amplitudes.
  s["amplitude_ratio"] = fx.amplitude / fy.amplitude;
  s["amplitude_ratio_x_vs_ref"] = fx.amplitude / gx.amplitude;
  s["phase_lag_rad"] = lag;
  s["convergence_time_5pct"] = conv_time;
  s["steady_window_s"] = window;
  return s;
}

}  // namespace

int cmd_simulate(const ScenarioConfig& cfg) {
  OutputDir out(cfg);
  if (const auto* exp = std::get_if<OpenLoopStepsExperiment>(&cfg.experiment)) {
    const RunLog log = run_open_loop(cfg, *exp);
    auto f = out.open("run.csv");
    write_run_csv(f, log);
    // Nominal point-P trajectory: the integral of the commanded velocities,
    // already logged as the reference columns; emitted separately for overlays.
    auto g = out.open("nominal.csv");
    g << "t,x_P_nom,y_P_nom\n";
    for (const auto& row : log.rows)
      g << fmt(row.t) << ',' << fmt(row.point_p_ref.x) << ','
        << fmt(row.point_p_ref.y) << '\n';
  } else if (const auto* exp =
                 std::get_if<CircleTrackingExperiment>(&cfg.experiment)) {
    const RunLog log = run_circle(cfg, *exp);
    auto f = out.open("run.csv");
    write_run_csv(f, log);
  } else if (const auto* exp = std::get_if<CustomExperiment>(&cfg.experiment)) {
    const RunLog log = run_custom(cfg, *exp);
    auto f = out.open("run.csv");
    write_run_csv(f, log);
  } else {
    throw ConfigError("experiment.kind",
                      std::string("'") + experiment_kind_name(cfg.experiment) +
                          "' is not a simulate scenario (use the sweep/hopf "
                          "subcommands)");
  }
  out.write_manifest();
  return 0;
}

int cmd_sweep(const ScenarioConfig& cfg) {
  const auto* exp = std::get_if<StabilitySweepExperiment>(&cfg.experiment);
  if (!exp)
    throw ConfigError("experiment.kind", "sweep requires kind = stability_sweep");
  const StabilityMap map =
      stability_sweep(exp->v_bar, exp->dl_min, exp->dl_max, exp->dl_step,
                      cfg.vehicle, cfg.linearisation);
  OutputDir out(cfg);
  auto f = out.open("stability_map.csv");
  write_map_csv(f, map);
  auto g = out.open("hopf_points.csv");
  write_hopf_csv(g, map.hopf_points);
  auto h = out.open("sweep.svg");
  write_sweep_svg(h, map);
  out.write_manifest();
  return 0;
}

int cmd_hopf(const ScenarioConfig& cfg) {
  const auto* exp = std::get_if<HopfThresholdExperiment>(&cfg.experiment);
  if (!exp)
    throw ConfigError("experiment.kind", "hopf requires kind = hopf_threshold");

  json report = json::array();
  for (double v_bar : exp->v_bar) {
    json entry;
    entry["v_bar"] = v_bar;
    try {
      double dl_s, dl_u;
      if (exp->bracket) {
        dl_s = exp->bracket->first;
        dl_u = exp->bracket->second;
      } else {
        // Coarse scan for a verdict flip.
        EquilibriumSpec eq;
        eq.v_bar = v_bar;
        eq.law = cfg.linearisation.law;
        const auto max_re_at = [&](double dl) {
          const auto eigs =
              eigenvalues(jacobian(eq, dl, cfg.vehicle, cfg.linearisation));
          double m = eigs.front().real();
          for (const auto& l : eigs) m = std::max(m, l.real());
          return m;
        };
        bool found = false;
        double prev_dl = exp->scan_min;
        double prev_re = max_re_at(prev_dl);
        for (double dl = exp->scan_min + exp->scan_step; dl <= exp->scan_max;
             dl += exp->scan_step) {
          const double re = max_re_at(dl);
          if ((prev_re < 0) != (re < 0)) {
            dl_s = prev_re < 0 ? prev_dl : dl;
            dl_u = prev_re < 0 ? dl : prev_dl;
            found = true;
            break;
          }
          prev_dl = dl;
          prev_re = re;
        }
        if (!found) {
          entry["found"] = false;
          entry["note"] = "no stability crossing in scan range";
          report.push_back(entry);
          continue;
        }
      }
      const HopfResult h =
          hopf_bisect(v_bar, dl_s, dl_u, cfg.vehicle, cfg.linearisation);
      entry["found"] = true;
      entry["dl_star"] = h.dl_star;
      entry["is_hopf"] = h.is_hopf;
      entry["hopf_freq"] = h.hopf_freq;
      entry["max_re"] = h.max_re;
      json eigs = json::array();
      for (const auto& l : h.eigs) eigs.push_back({l.real(), l.imag()});
      entry["eigenvalues"] = eigs;
      // Subcritical classification is not recomputed here; see README.
    } catch (const std::exception& e) {
      entry["found"] = false;
      entry["note"] = e.what();
    }
    report.push_back(entry);
  }

  OutputDir out(cfg);
  auto f = out.open("hopf_report.json");
  f << report.dump(2) << "\n";
  out.write_manifest();
  return 0;
}

int cmd_track(const ScenarioConfig& cfg) {
  const auto* exp = std::get_if<CircleTrackingExperiment>(&cfg.experiment);
  if (!exp)
    throw ConfigError("experiment.kind", "track requires kind = circle_tracking");
  const RunLog log = run_circle(cfg, *exp);
  OutputDir out(cfg);
  auto f = out.open("run.csv");
  write_run_csv(f, log);
  auto g = out.open("summary.json");
  g << tracking_summary(log, *exp).dump(2) << "\n";
  out.write_manifest();
  return 0;
}

}  // namespace fblin
