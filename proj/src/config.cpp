#include "fblin/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fblin {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double get_num(const json& obj, const std::string& path, const std::string& key,
               double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError(path + "." + key, "expected a number");
  return obj.at(key).get<double>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean())
    throw ConfigError(path + "." + key, "expected a boolean");
  return obj.at(key).get<bool>();
}

Vec2 get_vec2(const json& obj, const std::string& path, const std::string& key,
              Vec2 fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path + "." + key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<double> get_num_list(const json& obj, const std::string& path,
                                 const std::string& key,
                                 std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(path + "." + key, "expected a list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number())
      throw ConfigError(path + "." + key, "expected numeric entries");
    out.push_back(x.get<double>());
  }
  return out;
}

// Alternating-sign step sequence, magnitudes <= 0.5 m/s, 20 s total.
std::vector<VelocitySegment> default_step_schedule() {
  return {{4.0, 0.5, 0.0},
          {4.0, 0.0, 0.5},
          {4.0, -0.5, 0.0},
          {4.0, 0.0, -0.5},
          {4.0, 0.5, 0.3}};
}

std::vector<double> default_speed_grid() {
  std::vector<double> v;
  for (int i = 1; i <= 50; ++i) v.push_back(0.1 * i);
  return v;
}

Experiment parse_experiment(const json& e) {
  const std::string path = "experiment";
  if (!e.contains("kind") || !e.at("kind").is_string())
    throw ConfigError(path + ".kind", "missing or non-string experiment kind");
  const std::string kind = e.at("kind").get<std::string>();

  if (kind == "open_loop_steps") {
    check_keys(e, path, {"kind", "schedule"});
    OpenLoopStepsExperiment x;
    if (e.contains("schedule")) {
      for (const auto& seg : e.at("schedule")) {
        if (!seg.is_array() || seg.size() != 3)
          throw ConfigError(path + ".schedule",
                            "each entry must be [duration, v_Px, v_Py]");
        VelocitySegment s{seg[0].get<double>(), seg[1].get<double>(),
                          seg[2].get<double>()};
        if (!(s.duration > 0))
          throw ConfigError(path + ".schedule", "segment durations must be > 0");
        x.schedule.push_back(s);
      }
    } else {
      x.schedule = default_step_schedule();
    }
    return x;
  }
  if (kind == "circle_tracking") {
    check_keys(e, path,
               {"kind", "radius", "angular_velocity", "center", "phase",
                "start_offset", "gains", "feedforward"});
    CircleTrackingExperiment x;
    x.radius = get_num(e, path, "radius", x.radius);
    if (!(x.radius > 0)) throw ConfigError(path + ".radius", "must be > 0");
    x.angular_velocity = get_num(e, path, "angular_velocity", x.angular_velocity);
    x.center = get_vec2(e, path, "center", x.center);
    x.phase = get_num(e, path, "phase", x.phase);
    x.start_offset = get_num(e, path, "start_offset", x.start_offset);
    if (e.contains("gains")) {
      const Vec2 g = get_vec2(e, path, "gains", {x.gains.K_Px, x.gains.K_Py});
      x.gains = {g.x, g.y};
    }
    x.gains.validate();
    x.feedforward = get_bool(e, path, "feedforward", x.feedforward);
    return x;
  }
  if (kind == "stability_sweep") {
    check_keys(e, path, {"kind", "v_bar", "dl_min", "dl_max", "dl_step"});
    StabilitySweepExperiment x;
    x.v_bar = get_num_list(e, path, "v_bar", default_speed_grid());
    if (x.v_bar.empty()) throw ConfigError(path + ".v_bar", "empty speed grid");
    x.dl_min = get_num(e, path, "dl_min", x.dl_min);
    x.dl_max = get_num(e, path, "dl_max", x.dl_max);
    x.dl_step = get_num(e, path, "dl_step", x.dl_step);
    if (!(x.dl_step > 0) || !(x.dl_max >= x.dl_min))
      throw ConfigError(path, "need dl_step > 0 and dl_max >= dl_min");
    return x;
  }
  if (kind == "hopf_threshold") {
    check_keys(e, path,
               {"kind", "v_bar", "bracket", "scan_min", "scan_max", "scan_step"});
    HopfThresholdExperiment x;
    x.v_bar = get_num_list(e, path, "v_bar", {0.1});
    if (x.v_bar.empty()) throw ConfigError(path + ".v_bar", "empty speed list");
    if (e.contains("bracket")) {
      const Vec2 b = get_vec2(e, path, "bracket", {});
      if (b.x == b.y)
        throw ConfigError(path + ".bracket", "degenerate bracket (equal endpoints)");
      x.bracket = std::make_pair(b.x, b.y);
    }
    x.scan_min = get_num(e, path, "scan_min", x.scan_min);
    x.scan_max = get_num(e, path, "scan_max", x.scan_max);
    x.scan_step = get_num(e, path, "scan_step", x.scan_step);
    if (!(x.scan_step > 0) || !(x.scan_max > x.scan_min))
      throw ConfigError(path, "need scan_step > 0 and scan_max > scan_min");
    return x;
  }
  if (kind == "custom") {
    check_keys(e, path, {"kind", "initial_state", "v", "u_delta"});
    CustomExperiment x;
    if (e.contains("initial_state")) {
      const json& s = e.at("initial_state");
      check_keys(s, path + ".initial_state",
                 {"psi", "r", "beta", "delta", "x_G", "y_G"});
      const std::string sp = path + ".initial_state";
      x.initial_state.psi = get_num(s, sp, "psi", 0.0);
      x.initial_state.r = get_num(s, sp, "r", 0.0);
      x.initial_state.beta = get_num(s, sp, "beta", 0.0);
      x.initial_state.delta = get_num(s, sp, "delta", 0.0);
      x.initial_state.x_G = get_num(s, sp, "x_G", 0.0);
      x.initial_state.y_G = get_num(s, sp, "y_G", 0.0);
    }
    x.input.v = get_num(e, path, "v", x.input.v);
    x.input.u_delta = get_num(e, path, "u_delta", x.input.u_delta);
    return x;
  }
  throw ConfigError(path + ".kind", "unknown experiment kind '" + kind + "'");
}

}  // namespace

const char* experiment_kind_name(const Experiment& e) {
  return std::visit(
      [](const auto& x) -> const char* {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, OpenLoopStepsExperiment>)
          return "open_loop_steps";
        else if constexpr (std::is_same_v<T, CircleTrackingExperiment>)
          return "circle_tracking";
        else if constexpr (std::is_same_v<T, StabilitySweepExperiment>)
          return "stability_sweep";
        else if constexpr (std::is_same_v<T, HopfThresholdExperiment>)
          return "hopf_threshold";
        else
          return "custom";
      },
      e);
}

void ScenarioConfig::validate() const {
  try {
    vehicle.validate();
  } catch (const std::exception& ex) {
    throw ConfigError("vehicle", ex.what());
  }
  try {
    linearisation.validate();
  } catch (const std::exception& ex) {
    throw ConfigError("linearisation", ex.what());
  }
  if (!(dt > 0)) throw ConfigError("integrator.dt", "must be > 0");
  if (!(horizon >= dt)) throw ConfigError("integrator.horizon", "must be >= dt");
  if (output_dir.empty()) throw ConfigError("output_dir", "must be non-empty");
}

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"vehicle", "linearisation", "integrator", "experiment", "dropout",
              "seed", "output_dir"});

  ScenarioConfig cfg;
  cfg.experiment = OpenLoopStepsExperiment{default_step_schedule()};
  if (root.contains("vehicle")) {
    const json& v = root.at("vehicle");
    check_keys(v, "vehicle", {"m", "I_z", "l_f", "l_r", "C_f", "C_r", "mu"});
    cfg.vehicle.m = get_num(v, "vehicle", "m", cfg.vehicle.m);
    cfg.vehicle.I_z = get_num(v, "vehicle", "I_z", cfg.vehicle.I_z);
    cfg.vehicle.l_f = get_num(v, "vehicle", "l_f", cfg.vehicle.l_f);
    cfg.vehicle.l_r = get_num(v, "vehicle", "l_r", cfg.vehicle.l_r);
    cfg.vehicle.C_f = get_num(v, "vehicle", "C_f", cfg.vehicle.C_f);
    cfg.vehicle.C_r = get_num(v, "vehicle", "C_r", cfg.vehicle.C_r);
    cfg.vehicle.mu = get_num(v, "vehicle", "mu", cfg.vehicle.mu);
  }
  if (root.contains("linearisation")) {
    const json& l = root.at("linearisation");
    check_keys(l, "linearisation",
               {"law", "p", "l_f_est", "singularity_margin_deg"});
    if (l.contains("law")) {
      const std::string law = l.at("law").get<std::string>();
      if (law == "front_axle_offset")
        cfg.linearisation.law = Law::FrontAxleOffset;
      else if (law == "velocity_direction")
        cfg.linearisation.law = Law::VelocityDirection;
      else
        throw ConfigError("linearisation.law", "unknown law '" + law + "'");
    }
    cfg.linearisation.p = get_num(l, "linearisation", "p", cfg.linearisation.p);
    cfg.linearisation.l_f_est =
        get_num(l, "linearisation", "l_f_est", cfg.vehicle.l_f);
    cfg.linearisation.singularity_margin =
        get_num(l, "linearisation", "singularity_margin_deg", 5.0) * M_PI / 180.0;
  } else {
    cfg.linearisation.l_f_est = cfg.vehicle.l_f;
  }
  if (root.contains("integrator")) {
    const json& i = root.at("integrator");
    check_keys(i, "integrator", {"dt", "horizon"});
    cfg.dt = get_num(i, "integrator", "dt", cfg.dt);
    cfg.horizon = get_num(i, "integrator", "horizon", cfg.horizon);
  }
  if (root.contains("experiment"))
    cfg.experiment = parse_experiment(root.at("experiment"));
  if (root.contains("dropout")) {
    const json& d = root.at("dropout");
    check_keys(d, "dropout",
               {"enabled", "episodes", "stochastic", "rate", "min_duration",
                "max_duration"});
    cfg.dropout.enabled = get_bool(d, "dropout", "enabled", false);
    if (d.contains("episodes")) {
      for (const auto& e : d.at("episodes")) {
        if (!e.is_array() || e.size() != 2)
          throw ConfigError("dropout.episodes",
                            "each entry must be [start, duration]");
        cfg.dropout.episodes.push_back(
            {e[0].get<double>(), e[1].get<double>()});
      }
    }
    cfg.dropout.stochastic = get_bool(d, "dropout", "stochastic", false);
    cfg.dropout.rate = get_num(d, "dropout", "rate", 0.0);
    cfg.dropout.min_duration = get_num(d, "dropout", "min_duration", 0.1);
    cfg.dropout.max_duration = get_num(d, "dropout", "max_duration", 0.5);
    if (cfg.dropout.stochastic &&
        !(cfg.dropout.max_duration >= cfg.dropout.min_duration &&
          cfg.dropout.min_duration > 0))
      throw ConfigError("dropout", "need 0 < min_duration <= max_duration");
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned())
      throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  cfg.dropout.seed = cfg.seed;
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string())
      throw ConfigError("output_dir", "expected a string");
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ScenarioConfig& cfg) {
  json root;
  root["vehicle"] = {{"m", cfg.vehicle.m},     {"I_z", cfg.vehicle.I_z},
                     {"l_f", cfg.vehicle.l_f}, {"l_r", cfg.vehicle.l_r},
                     {"C_f", cfg.vehicle.C_f}, {"C_r", cfg.vehicle.C_r},
                     {"mu", cfg.vehicle.mu}};
  root["linearisation"] = {
      {"law", law_name(cfg.linearisation.law)},
      {"p", cfg.linearisation.p},
      {"l_f_est", cfg.linearisation.l_f_est},
      {"singularity_margin_deg", cfg.linearisation.singularity_margin * 180.0 / M_PI}};
  root["integrator"] = {{"dt", cfg.dt}, {"horizon", cfg.horizon}};

  json e;
  e["kind"] = experiment_kind_name(cfg.experiment);
  std::visit(
      [&e](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, OpenLoopStepsExperiment>) {
          json sched = json::array();
          for (const auto& s : x.schedule)
            sched.push_back({s.duration, s.v_Px, s.v_Py});
          e["schedule"] = sched;
        } else if constexpr (std::is_same_v<T, CircleTrackingExperiment>) {
          e["radius"] = x.radius;
          e["angular_velocity"] = x.angular_velocity;
          e["center"] = {x.center.x, x.center.y};
          e["phase"] = x.phase;
          e["start_offset"] = x.start_offset;
          e["gains"] = {x.gains.K_Px, x.gains.K_Py};
          e["feedforward"] = x.feedforward;
        } else if constexpr (std::is_same_v<T, StabilitySweepExperiment>) {
          e["v_bar"] = x.v_bar;
          e["dl_min"] = x.dl_min;
          e["dl_max"] = x.dl_max;
          e["dl_step"] = x.dl_step;
        } else if constexpr (std::is_same_v<T, HopfThresholdExperiment>) {
          e["v_bar"] = x.v_bar;
          if (x.bracket) e["bracket"] = {x.bracket->first, x.bracket->second};
          e["scan_min"] = x.scan_min;
          e["scan_max"] = x.scan_max;
          e["scan_step"] = x.scan_step;
        } else {
          e["initial_state"] = {{"psi", x.initial_state.psi},
                                {"r", x.initial_state.r},
                                {"beta", x.initial_state.beta},
                                {"delta", x.initial_state.delta},
                                {"x_G", x.initial_state.x_G},
                                {"y_G", x.initial_state.y_G}};
          e["v"] = x.input.v;
          e["u_delta"] = x.input.u_delta;
        }
      },
      cfg.experiment);
  root["experiment"] = e;

  json d;
  d["enabled"] = cfg.dropout.enabled;
  json eps = json::array();
  for (const auto& ep : cfg.dropout.episodes)
    eps.push_back({ep.start, ep.duration});
  d["episodes"] = eps;
  d["stochastic"] = cfg.dropout.stochastic;
  d["rate"] = cfg.dropout.rate;
  d["min_duration"] = cfg.dropout.min_duration;
  d["max_duration"] = cfg.dropout.max_duration;
  root["dropout"] = d;

  root["seed"] = cfg.seed;
  root["output_dir"] = cfg.output_dir;
  return root.dump();  // nlohmann objects serialize with sorted keys
}

std::string config_hash(const ScenarioConfig& cfg) {
  const std::string s = dump_config(cfg);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_overrides(ScenarioConfig& cfg, const CommandOverrides& o) {
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.dropout.seed = *o.seed;
  }
  if (o.dt) cfg.dt = *o.dt;
  if (o.horizon) cfg.horizon = *o.horizon;
  cfg.validate();
}

}  // namespace fblin
