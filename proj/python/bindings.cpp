#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ramp/distribution.hpp"
#include "ramp/kinematics.hpp"
#include "ramp/lrst.hpp"
#include "ramp/scenario.hpp"

namespace py = pybind11;
using namespace ramp;

namespace {

Eigen::Vector4d quat_wxyz(const Quat& q) { return {q.w(), q.x(), q.y(), q.z()}; }

Quat quat_from(const Eigen::Vector4d& v) { return Quat(v[0], v[1], v[2], v[3]).normalized(); }

py::dict curve_point(const CurvePoint& p) {
  py::dict d;
  d["position"] = p.position;
  d["velocity"] = p.velocity;
  d["acceleration"] = p.acceleration;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ramp, m) {
  m.doc() = "Reaction-aware planning and simulation of climbing robots";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<ModelError>(m, "ModelError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<UnreachableTarget>(m, "UnreachableTarget", error.ptr());
  py::register_exception<JointLimitError>(m, "JointLimitError", error.ptr());
  py::register_exception<InfeasibleTrajectory>(m, "InfeasibleTrajectory", error.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ComparisonError>(m, "ComparisonError", error.ptr());

  py::class_<RobotModel>(m, "RobotModel")
      .def_readonly("name", &RobotModel::name)
      .def_property_readonly("dof", &RobotModel::dof)
      .def_property_readonly("num_limbs", &RobotModel::num_limbs)
      .def_property_readonly("planar", &RobotModel::planar)
      .def_property_readonly("base_dofs", &RobotModel::base_dofs)
      .def_property_readonly("limb_names",
                             [](const RobotModel& r) {
                               std::vector<std::string> names;
                               for (const LimbSpec& l : r.limbs) names.push_back(l.name);
                               return names;
                             })
      .def("limb_joints", [](const RobotModel& r, int limb) { return r.limbs.at(limb).joints; })
      .def("reach", &RobotModel::reach);

  m.def("load_robot", &load_robot, py::arg("path"));

  py::class_<SystemState>(m, "SystemState")
      .def_static("zero", &SystemState::zero, py::arg("model"))
      .def_readwrite("base_position", &SystemState::base_position)
      .def_property(
          "base_orientation", [](const SystemState& s) { return quat_wxyz(s.base_orientation); },
          [](SystemState& s, const Eigen::Vector4d& q) { s.base_orientation = quat_from(q); },
          "unit quaternion (w, x, y, z)")
      .def_readwrite("base_twist", &SystemState::base_twist)
      .def_readwrite("joint_angles", &SystemState::joint_angles)
      .def_readwrite("joint_rates", &SystemState::joint_rates)
      .def_readwrite("time", &SystemState::time)
      .def("limb_angles", &SystemState::limb_angles)
      .def("set_limb_angles", &SystemState::set_limb_angles)
      .def("limb_rates", &SystemState::limb_rates)
      .def("set_limb_rates", &SystemState::set_limb_rates)
      .def("copy", [](const SystemState& s) { return s; });

  m.def(
      "forward_kinematics",
      [](const RobotModel& model, const SystemState& state) {
        const Kinematics k = forward_kinematics(model, state);
        py::dict d;
        d["tip_positions"] = k.tip_positions;
        d["tip_rotations"] = k.tip_rotations;
        return d;
      },
      py::arg("model"), py::arg("state"));

  m.def(
      "jacobians",
      [](const RobotModel& model, const SystemState& state, int limb) {
        const LimbJacobian j = jacobians(model, state, limb);
        py::dict d;
        d["base"] = j.base;
        d["manip"] = j.manip;
        d["manip_pinv"] = j.manip_pinv;
        d["sigma_min"] = j.sigma_min;
        return d;
      },
      py::arg("model"), py::arg("state"), py::arg("limb"));

  m.def(
      "system_momentum",
      [](const RobotModel& model, const SystemState& state, const std::vector<int>& swing) {
        const MomentumState s = system_momentum(model, state, swing);
        py::dict d;
        d["total"] = s.total;
        d["base"] = s.base_part;
        d["support"] = s.support_part;
        d["swing"] = s.swing_part;
        return d;
      },
      py::arg("model"), py::arg("state"), py::arg("swing") = std::vector<int>{});

  m.def(
      "inverse_kinematics",
      [](const RobotModel& model, int limb, const Vec3& position, const SystemState& state) {
        return inverse_kinematics(model, limb, {position, std::nullopt}, state.base_position,
                                  state.base_orientation, state.limb_angles(model, limb));
      },
      py::arg("model"), py::arg("limb"), py::arg("position"), py::arg("state"),
      "limb joint angles placing the tip at `position`, seeded from `state`");

  py::class_<BezierCurve>(m, "BezierCurve")
      .def_property_readonly("points",
                             [](const BezierCurve& c) { return std::vector<Vec3>(c.points.begin(), c.points.end()); })
      .def_readonly("t0", &BezierCurve::t0)
      .def_readonly("tf", &BezierCurve::tf)
      .def("evaluate", [](const BezierCurve& c, double t) { return curve_point(c.evaluate(t)); });

  m.def("boundary_constrained_curve", &boundary_constrained_curve, py::arg("start"), py::arg("target"),
        py::arg("t0"), py::arg("tf"), py::arg("a3"), py::arg("a4"));

  py::class_<ViaPointSpline>(m, "ViaPointSpline")
      .def_readonly("start", &ViaPointSpline::start)
      .def_readonly("apex", &ViaPointSpline::apex)
      .def_readonly("target", &ViaPointSpline::target)
      .def("evaluate", [](const ViaPointSpline& c, double t) { return curve_point(c.evaluate(t)); });

  m.def("make_via_point_spline", &make_via_point_spline, py::arg("start"), py::arg("target"),
        py::arg("height"), py::arg("up"), py::arg("t0"), py::arg("tf"));

  m.def(
      "base_velocity",
      [](const RobotModel& model, const SystemState& state, const std::vector<int>& swing, double alpha,
         double threshold) {
        DistributionOptions o;
        o.singularity_threshold = threshold;
        return base_velocity(model, state, swing, DistributionFactor(alpha), o);
      },
      py::arg("model"), py::arg("state"), py::arg("swing"), py::arg("alpha"),
      py::arg("singularity_threshold") = DistributionOptions{}.singularity_threshold);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_property(
          "mode", [](const ScenarioConfig& c) { return to_string(c.mode); },
          [](ScenarioConfig& c, const std::string& s) { c.mode = parse_mode(s); })
      .def_readwrite("alpha", &ScenarioConfig::alpha)
      .def_readwrite("output_dir", &ScenarioConfig::output_dir)
      .def_property_readonly("robot_path", &ScenarioConfig::robot_path)
      .def("validate", &ScenarioConfig::validate)
      .def("to_json", [](const ScenarioConfig& c) { return to_json(c).dump(); });

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "scenario_from_json",
      [](const std::string& text, const std::filesystem::path& directory) {
        return scenario_from_json(Json::parse(text), directory);
      },
      py::arg("text"), py::arg("directory"));
  m.def(
      "load_scenario_model",
      [](const ScenarioConfig& c) {
        const Scenario sc = prepare(c);
        return py::make_tuple(sc.model, sc.initial);
      },
      py::arg("config"), "robot model and solved initial stance of a scenario");

  m.def(
      "run",
      [](const ScenarioConfig& c, bool plan_only, const std::optional<std::filesystem::path>& out) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c, plan_only);
        }
        if (out) write_outputs(r, *out);
        return to_json(r.summary).dump();
      },
      py::arg("config"), py::arg("plan_only") = false, py::arg("out") = std::nullopt,
      "plans and simulates a scenario; returns the summary as JSON text");

  m.def(
      "compare",
      [](const std::vector<ScenarioConfig>& configs) {
        check_comparable(configs);
        std::vector<RunSummary> runs;
        {
          py::gil_scoped_release release;
          for (const ScenarioConfig& c : configs) runs.push_back(run(c).summary);
        }
        const ComparisonSummary s = compare(runs);
        return py::make_tuple(to_json(s).dump(), format_table(s));
      },
      py::arg("configs"));
}
