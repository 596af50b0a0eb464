#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fblin/analysis.hpp"
#include "fblin/config.hpp"
#include "fblin/control.hpp"
#include "fblin/linearise.hpp"
#include "fblin/model.hpp"

namespace py = pybind11;
using namespace fblin;

PYBIND11_MODULE(_core, m) {
  m.doc() = "single-track vehicle model, feedback-linearising laws and "
            "closed-loop stability analysis";

  py::class_<VehicleParams>(m, "VehicleParams")
      .def(py::init<>())
      .def_readwrite("m", &VehicleParams::m)
      .def_readwrite("I_z", &VehicleParams::I_z)
      .def_readwrite("l_f", &VehicleParams::l_f)
      .def_readwrite("l_r", &VehicleParams::l_r)
      .def_readwrite("C_f", &VehicleParams::C_f)
      .def_readwrite("C_r", &VehicleParams::C_r)
      .def_readwrite("mu", &VehicleParams::mu)
      .def("validate", &VehicleParams::validate);

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def(py::init([](double psi, double r, double beta, double delta,
                       double x_G, double y_G) {
             return VehicleState{psi, r, beta, delta, x_G, y_G};
           }),
           py::arg("psi") = 0.0, py::arg("r") = 0.0, py::arg("beta") = 0.0,
           py::arg("delta") = 0.0, py::arg("x_G") = 0.0, py::arg("y_G") = 0.0)
      .def_readwrite("psi", &VehicleState::psi)
      .def_readwrite("r", &VehicleState::r)
      .def_readwrite("beta", &VehicleState::beta)
      .def_readwrite("delta", &VehicleState::delta)
      .def_readwrite("x_G", &VehicleState::x_G)
      .def_readwrite("y_G", &VehicleState::y_G)
      .def("to_array", &VehicleState::to_array);

  py::class_<ModelInput>(m, "ModelInput")
      .def(py::init([](double v, double u_delta) {
             return ModelInput{v, u_delta};
           }),
           py::arg("v") = 0.0, py::arg("u_delta") = 0.0)
      .def_readwrite("v", &ModelInput::v)
      .def_readwrite("u_delta", &ModelInput::u_delta);

  py::enum_<Law>(m, "Law")
      .value("FrontAxleOffset", Law::FrontAxleOffset)
      .value("VelocityDirection", Law::VelocityDirection);

  py::class_<Vec2>(m, "Vec2")
      .def(py::init([](double x, double y) { return Vec2{x, y}; }),
           py::arg("x") = 0.0, py::arg("y") = 0.0)
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y);

  py::class_<LinearisationConfig>(m, "LinearisationConfig")
      .def(py::init<>())
      .def_readwrite("p", &LinearisationConfig::p)
      .def_readwrite("l_f_est", &LinearisationConfig::l_f_est)
      .def_readwrite("law", &LinearisationConfig::law)
      .def_readwrite("singularity_margin", &LinearisationConfig::singularity_margin);

  py::class_<PointVelocityCommand>(m, "PointVelocityCommand")
      .def(py::init([](double v_Px, double v_Py) {
             return PointVelocityCommand{v_Px, v_Py};
           }),
           py::arg("v_Px") = 0.0, py::arg("v_Py") = 0.0)
      .def_readwrite("v_Px", &PointVelocityCommand::v_Px)
      .def_readwrite("v_Py", &PointVelocityCommand::v_Py);

  py::class_<ControlCommand>(m, "ControlCommand")
      .def_readonly("v", &ControlCommand::v)
      .def_readonly("law_tag", &ControlCommand::law_tag)
      .def_readonly("u_delta", &ControlCommand::u_delta)
      .def_readonly("delta", &ControlCommand::delta);

  py::register_exception<SpeedBelowFloorError>(m, "SpeedBelowFloorError");
  py::register_exception<SingularityError>(m, "SingularityError");
  py::register_exception<ZeroVelocityError>(m, "ZeroVelocityError");

  m.def("dynamics", &dynamics, py::arg("state"), py::arg("input"),
        py::arg("params"), py::arg("v_min") = kDefaultSpeedFloor);
  m.def("rk4_step", &rk4_step, py::arg("state"), py::arg("input"),
        py::arg("params"), py::arg("dt"), py::arg("v_min") = kDefaultSpeedFloor);
  m.def(
      "integrate",
      [](const VehicleState& s0, const Controller& c, const VehicleParams& p,
         double dt, double T) {
        const auto traj = integrate(s0, c, p, dt, T);
        py::list out;
        for (const auto& pt : traj)
          out.append(py::make_tuple(pt.t, pt.state,
                                    py::make_tuple(pt.input.v, pt.input.u_delta)));
        return out;
      },
      py::arg("state0"), py::arg("controller"), py::arg("params"), py::arg("dt"),
      py::arg("T"));

  m.def("point_p_position", &point_p_position, py::arg("state"), py::arg("cfg"));
  m.def("point_p_velocity", &point_p_velocity, py::arg("state"), py::arg("input"),
        py::arg("cfg"), py::arg("params"), py::arg("v_min") = kDefaultSpeedFloor);
  m.def("linearising_law_nominal", &linearising_law_nominal, py::arg("state"),
        py::arg("cmd"), py::arg("cfg"));
  m.def("linearising_law_uncertain", &linearising_law_uncertain, py::arg("state"),
        py::arg("cmd"), py::arg("cfg"));
  m.def("linearising_law_alternative", &linearising_law_alternative,
        py::arg("state"), py::arg("cmd"), py::arg("cfg"), py::arg("params"),
        py::arg("v_min") = kDefaultSpeedFloor);

  py::class_<EquilibriumSpec>(m, "EquilibriumSpec")
      .def(py::init<>())
      .def_readwrite("v_bar", &EquilibriumSpec::v_bar)
      .def_readwrite("psi_bar", &EquilibriumSpec::psi_bar)
      .def_readwrite("law", &EquilibriumSpec::law)
      .def("dim", &EquilibriumSpec::dim);

  m.def(
      "jacobian",
      [](const EquilibriumSpec& eq, double dl, const VehicleParams& prm,
         const LinearisationConfig& cfg) {
        const SmallMatrix J = jacobian(eq, dl, prm, cfg);
        std::vector<std::vector<double>> out(J.n, std::vector<double>(J.n));
        for (int i = 0; i < J.n; ++i)
          for (int j = 0; j < J.n; ++j) out[i][j] = J(i, j);
        return out;
      },
      py::arg("eq"), py::arg("dl"), py::arg("params"), py::arg("cfg"));
  m.def(
      "closed_loop_eigenvalues",
      [](const EquilibriumSpec& eq, double dl, const VehicleParams& prm,
         const LinearisationConfig& cfg) {
        return eigenvalues(jacobian(eq, dl, prm, cfg));
      },
      py::arg("eq"), py::arg("dl"), py::arg("params"), py::arg("cfg"));
  m.def(
      "closed_loop_field",
      [](const std::vector<double>& xi, const EquilibriumSpec& eq, double dl,
         const VehicleParams& prm, const LinearisationConfig& cfg) {
        return closed_loop_field(xi, eq, dl, prm, cfg);
      },
      py::arg("xi"), py::arg("eq"), py::arg("dl"), py::arg("params"),
      py::arg("cfg"));

  py::enum_<Verdict>(m, "Verdict")
      .value("Stable", Verdict::Stable)
      .value("Unstable", Verdict::Unstable)
      .value("Invalid", Verdict::Invalid);

  py::class_<CellResult>(m, "CellResult")
      .def_readonly("v_bar", &CellResult::v_bar)
      .def_readonly("dl", &CellResult::dl)
      .def_readonly("verdict", &CellResult::verdict)
      .def_readonly("max_re", &CellResult::max_re)
      .def_readonly("eigs", &CellResult::eigs)
      .def_readonly("error", &CellResult::error);

  py::class_<HopfPoint>(m, "HopfPoint")
      .def_readonly("v_bar", &HopfPoint::v_bar)
      .def_readonly("dl_star", &HopfPoint::dl_star)
      .def_readonly("hopf_freq", &HopfPoint::hopf_freq)
      .def_readonly("is_hopf", &HopfPoint::is_hopf);

  py::class_<StabilityMap>(m, "StabilityMap")
      .def_readonly("v_bar_grid", &StabilityMap::v_bar_grid)
      .def_readonly("dl_grid", &StabilityMap::dl_grid)
      .def_readonly("cells", &StabilityMap::cells)
      .def_readonly("hopf_points", &StabilityMap::hopf_points);

  m.def("stability_sweep", &stability_sweep, py::arg("v_bar_grid"),
        py::arg("dl_min"), py::arg("dl_max"), py::arg("dl_step"),
        py::arg("params"), py::arg("cfg"));

  py::class_<HopfResult>(m, "HopfResult")
      .def_readonly("dl_star", &HopfResult::dl_star)
      .def_readonly("hopf_freq", &HopfResult::hopf_freq)
      .def_readonly("is_hopf", &HopfResult::is_hopf)
      .def_readonly("max_re", &HopfResult::max_re);

  m.def("hopf_bisect", &hopf_bisect, py::arg("v_bar"), py::arg("dl_stable"),
        py::arg("dl_unstable"), py::arg("params"), py::arg("cfg"));

  py::class_<TrackingGains>(m, "TrackingGains")
      .def(py::init([](double kx, double ky) {
             return TrackingGains{kx, ky};
           }),
           py::arg("K_Px") = 1.0, py::arg("K_Py") = 1.0)
      .def_readwrite("K_Px", &TrackingGains::K_Px)
      .def_readwrite("K_Py", &TrackingGains::K_Py);

  py::class_<CircleReference>(m, "CircleReference")
      .def(py::init([](double radius, double w, Vec2 center, double phase) {
             return CircleReference{radius, w, center, phase};
           }),
           py::arg("radius") = 1.0, py::arg("angular_velocity") = 0.5,
           py::arg("center") = Vec2{}, py::arg("phase") = 0.0)
      .def_readwrite("radius", &CircleReference::radius)
      .def_readwrite("angular_velocity", &CircleReference::angular_velocity)
      .def_readwrite("center", &CircleReference::center)
      .def_readwrite("phase", &CircleReference::phase);

  py::class_<DropoutEpisode>(m, "DropoutEpisode")
      .def(py::init([](double start, double duration) {
             return DropoutEpisode{start, duration};
           }),
           py::arg("start"), py::arg("duration"))
      .def_readwrite("start", &DropoutEpisode::start)
      .def_readwrite("duration", &DropoutEpisode::duration);

  py::class_<DropoutModel>(m, "DropoutModel")
      .def(py::init<>())
      .def_readwrite("enabled", &DropoutModel::enabled)
      .def_readwrite("episodes", &DropoutModel::episodes)
      .def_readwrite("stochastic", &DropoutModel::stochastic)
      .def_readwrite("rate", &DropoutModel::rate)
      .def_readwrite("min_duration", &DropoutModel::min_duration)
      .def_readwrite("max_duration", &DropoutModel::max_duration)
      .def_readwrite("seed", &DropoutModel::seed)
      .def("realize", &DropoutModel::realize, py::arg("T"));

  py::class_<TrackingOptions>(m, "TrackingOptions")
      .def(py::init<>())
      .def_readwrite("dt", &TrackingOptions::dt)
      .def_readwrite("T", &TrackingOptions::T)
      .def_readwrite("use_feedforward", &TrackingOptions::use_feedforward)
      .def_readwrite("min_speed", &TrackingOptions::min_speed);

  py::class_<RunRow>(m, "RunRow")
      .def_readonly("t", &RunRow::t)
      .def_readonly("state", &RunRow::state)
      .def_readonly("v_cmd", &RunRow::v_cmd)
      .def_readonly("steer_cmd", &RunRow::steer_cmd)
      .def_readonly("point_p", &RunRow::point_p)
      .def_readonly("point_p_ref", &RunRow::point_p_ref)
      .def_readonly("dropout_active", &RunRow::dropout_active);

  py::class_<RunLog>(m, "RunLog")
      .def_readonly("law", &RunLog::law)
      .def_readonly("rows", &RunLog::rows);

  m.def(
      "run_circle_tracking",
      [](const CircleReference& ref, const TrackingGains& gains,
         const DropoutModel& drop, const VehicleState& s0,
         const VehicleParams& prm, const LinearisationConfig& cfg,
         const TrackingOptions& opt) {
        return run_tracking(ref, gains, drop, s0, prm, cfg, opt);
      },
      py::arg("ref"), py::arg("gains"), py::arg("dropout"), py::arg("state0"),
      py::arg("params"), py::arg("cfg"), py::arg("options"));

  m.def("compute_nmpe", &compute_nmpe, py::arg("simulated"), py::arg("reference"));
  m.def("config_hash",
        [](const std::string& text) { return config_hash(parse_config(text)); },
        py::arg("json_text"),
        "hash of the canonical form of a scenario config");
  m.attr("tool_version") = kToolVersion;
}
