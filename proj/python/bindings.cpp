#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <sstream>

#include "wandteleop/config.hpp"
#include "wandteleop/geometry.hpp"
#include "wandteleop/mappings.hpp"
#include "wandteleop/metrics.hpp"
#include "wandteleop/operator.hpp"
#include "wandteleop/robot.hpp"
#include "wandteleop/session.hpp"
#include "wandteleop/session_log.hpp"
#include "wandteleop/statistics.hpp"
#include "wandteleop/task.hpp"

namespace py = pybind11;
using namespace wandteleop;

namespace {

// json crosses the boundary as text; the Python side sees plain dicts.
py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& obj) {
  if (obj.is_none()) {
    return json::object();
  }
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

ExperimentConfig config_arg(const py::object& obj) {
  if (obj.is_none()) {
    return ExperimentConfig{};
  }
  if (py::isinstance<py::str>(obj)) {
    return load_config(obj.cast<std::string>());
  }
  ExperimentConfig cfg = config_from_json(from_py(obj));
  cfg.validate();
  return cfg;
}

py::dict report_dict(const ReplayReport& r) {
  py::dict d;
  d["records"] = r.records;
  d["structure_matches"] = r.structure_matches;
  d["max_desired_translation"] = r.max_desired_translation;
  d["max_desired_rotation"] = r.max_desired_rotation;
  d["max_robot_translation"] = r.max_robot_translation;
  d["max_robot_rotation"] = r.max_robot_rotation;
  d["max_joint"] = r.max_joint;
  d["max_deviation"] = r.max_deviation();
  return d;
}

py::dict wilcoxon_dict(const WilcoxonResult& r) {
  py::dict d;
  d["tested"] = r.tested;
  d["n"] = r.n;
  d["w_plus"] = r.statistic;
  d["w_minus"] = r.w_minus;
  d["p_value"] = r.p_value;
  d["exact"] = r.exact;
  return d;
}

py::object opt(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::list metric_rows(const std::vector<TargetMetrics>& rows) {
  py::list out;
  for (const auto& m : rows) {
    py::dict d;
    d["mode"] = std::string(to_string(m.mode));
    d["trial"] = m.trial;
    d["target"] = m.target;
    d["kind"] = std::string(to_string(m.kind));
    d["visualization_on"] = m.visualization_on;
    d["achieved"] = m.achieved;
    d["duration"] = opt(m.duration);
    d["overshoot_translation"] = opt(m.overshoot_translation);
    d["overshoot_rotation"] = opt(m.overshoot_rotation);
    d["response_time"] = opt(m.response_time);
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Teleoperation workbench core: mappings, servo, sessions and metrics.";

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Mat3& r, const Vec3& t) {
             if (!is_rotation(r, 1e-6)) {
               throw std::invalid_argument("rotation is not orthonormal");
             }
             return Pose{r, t};
           }),
           py::arg("rotation"), py::arg("translation"))
      .def_static("from_translation", &Pose::from_translation)
      .def_static("from_axis_angle", &Pose::from_axis_angle, py::arg("axis"), py::arg("angle"),
                  py::arg("translation") = Vec3::Zero())
      .def_static(
          "from_quaternion",
          [](const std::array<double, 4>& q, const Vec3& t) { return Pose::from_quaternion(q, t); },
          py::arg("wxyz"), py::arg("translation") = Vec3::Zero())
      .def_readwrite("rotation", &Pose::rotation)
      .def_readwrite("translation", &Pose::translation)
      .def("quaternion", &Pose::quaternion)
      .def("matrix", &Pose::matrix)
      .def("inverse", [](const Pose& p) { return invert(p); })
      .def("__matmul__", [](const Pose& a, const Pose& b) { return compose(a, b); })
      .def("__eq__", &Pose::operator==)
      .def("__repr__", [](const Pose& p) {
        std::ostringstream s;
        s << "Pose(t=[" << p.translation.x() << ", " << p.translation.y() << ", "
          << p.translation.z() << "], angle=" << geodesic_angle(p.rotation) << ")";
        return s.str();
      });

  m.def("compose", &compose);
  m.def("invert", &invert);
  m.def("geodesic_angle", &geodesic_angle);
  m.def("rotation_distance", &rotation_distance);
  m.def("translation_distance", &translation_distance);
  m.def("log_vector", &log_vector);
  m.def("exp_rotation", &exp_rotation);
  m.def("pose_error", [](const Pose& current, const Pose& desired) {
    return pose_error(current, desired).stacked();
  });
  m.def("fibonacci_sphere", &fibonacci_sphere, py::arg("n"));

  py::enum_<MappingMode>(m, "MappingMode")
      .value("DIRECT", MappingMode::Direct)
      .value("WAND", MappingMode::Wand);

  py::class_<MappingState>(m, "MappingState")
      .def_property_readonly("mode", &MappingState::mode)
      .def_property_readonly("hand_t0", &MappingState::hand_t0)
      .def_property_readonly("effector_t0", &MappingState::effector_t0)
      .def_property_readonly("hand_to_tip", &MappingState::hand_to_tip)
      .def_property_readonly("visualization_on", &MappingState::visualization_on)
      .def_property_readonly("wand_length", &MappingState::wand_length)
      .def("desired_pose", &MappingState::desired_pose, py::arg("hand"))
      .def("hand_for_desired", &MappingState::hand_for_desired, py::arg("desired"))
      .def("with_visualization",
           [](const MappingState& s, bool on) { return set_visualization(s, on); });

  m.def("init_mapping", &init_mapping, py::arg("mode"), py::arg("hand_t0"), py::arg("effector_t0"),
        py::arg("visualization_on") = true);
  m.def(
      "initial_effector_pose",
      [](const Pose& hand_start, double length) {
        WandGeometry wand;
        wand.length = length;
        return initial_effector_pose(hand_start, wand);
      },
      py::arg("hand_start"), py::arg("wand_length") = WandGeometry{}.length);

  m.def(
      "forward_kinematics",
      [](const std::vector<double>& q) { return forward_kinematics(default_chain(), q); },
      py::arg("q"));
  m.def(
      "jacobian",
      [](const std::vector<double>& q) -> Eigen::MatrixXd { return jacobian(default_chain(), q); },
      py::arg("q"));

  m.def("minimum_jerk", &minimum_jerk);
  m.def(
      "reach_progress",
      [](double t, double duration, double fraction, double amplitude) {
        ReachPlan plan;
        plan.duration = duration;
        plan.ballistic_fraction = fraction;
        plan.ballistic_amplitude = amplitude;
        plan.validate();
        return reach_progress(plan, t);
      },
      py::arg("t"), py::arg("duration") = 2.0, py::arg("ballistic_fraction") = 0.5,
      py::arg("ballistic_amplitude") = 0.9);

  m.def("default_config", [] { return to_py(config_to_json(ExperimentConfig{})); });

  m.def(
      "generate_targets",
      [](const py::object& config, MappingMode mode) {
        const ExperimentConfig cfg = config_arg(config);
        return to_py(targets_to_json(generate_targets(cfg.seed, cfg.mapping_for(mode, 1),
                                                      cfg.hand_start, cfg.protocol)));
      },
      py::arg("config") = py::none(), py::arg("mode") = MappingMode::Wand);

  m.def(
      "run_experiment",
      [](const py::object& config, const std::string& out_dir) {
        const ExperimentConfig cfg = config_arg(config);
        ExperimentRun run;
        {
          py::gil_scoped_release release;
          run = run_experiment(cfg);
        }
        if (!out_dir.empty()) {
          std::filesystem::create_directories(out_dir);
        }
        py::list logs;
        for (const auto& log : run.logs) {
          if (!out_dir.empty()) {
            write_log(out_dir + "/" + std::string(to_string(log.header.mode)) + ".jsonl", log);
          }
          logs.append(std::string(to_string(log.header.mode)));
        }
        py::dict d;
        d["attempted"] = run.attempted();
        d["achieved"] = run.achieved();
        d["modes"] = logs;
        std::vector<TargetMetrics> rows;
        for (const auto& log : run.logs) {
          const auto m = compute_target_metrics(extract_slices(log));
          rows.insert(rows.end(), m.begin(), m.end());
        }
        d["targets"] = metric_rows(rows);
        return d;
      },
      py::arg("config") = py::none(), py::arg("out_dir") = "");

  m.def(
      "replay",
      [](const std::string& path) {
        const SessionLog log = read_log(path);
        return report_dict(replay_log(log));
      },
      py::arg("path"));

  m.def(
      "target_metrics",
      [](const std::string& path) {
        const SessionLog log = read_log(path);
        return metric_rows(compute_target_metrics(extract_slices(log)));
      },
      py::arg("path"));

  m.def(
      "coordination",
      [](const std::string& path, const std::string& subject, bool ballistic) {
        const Subject s = subject == "hand"      ? Subject::Hand
                          : subject == "desired" ? Subject::Desired
                          : subject == "robot"   ? Subject::Robot
                                                 : throw std::invalid_argument("unknown subject: " + subject);
        const SessionLog log = read_log(path);
        py::list out;
        for (const auto& slice : extract_slices(log)) {
          const auto c = coordination_curve(slice, s, ballistic ? Window::Ballistic : Window::Full);
          py::dict d;
          d["target"] = slice.target.index;
          d["trial"] = slice.trial;
          d["translation"] = c.translation;
          d["rotation"] = c.rotation;
          d["mean_signed_deviation"] = c.mean_signed_deviation();
          out.append(d);
        }
        return out;
      },
      py::arg("path"), py::arg("subject") = "hand", py::arg("ballistic") = true);

  m.def(
      "wilcoxon",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return wilcoxon_dict(wilcoxon_paired(a, b));
      },
      py::arg("a"), py::arg("b"));
}
