/*
 * Copyright 2026 The magslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "magslam/config.hpp"
#include "magslam/csv.hpp"
#include "magslam/fieldmap.hpp"
#include "magslam/geometry.hpp"
#include "magslam/io.hpp"
#include "magslam/metrics.hpp"
#include "magslam/pipeline.hpp"

namespace py = pybind11;
using namespace magslam;
using nlohmann::json;

namespace {

RunConfig parse_config(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_json(doc);
}

std::string simulate(const std::string &config, const std::string &out_dir, int replicate) {
  const RunConfig cfg = parse_config(config);
  const SimulatedScenario sim = simulate_scenario(cfg, replicate);
  write_dataset(sim.data, out_dir);
  return sim.data.metadata.dump();
}

std::string slam(const std::string &config, const std::string &data_dir,
                 const std::string &out_dir) {
  const RunConfig cfg = parse_config(config);
  const Dataset raw = read_dataset(data_dir);
  const RunOutcome run = run_mode(cfg, raw);
  return export_run(cfg, run, out_dir, data_dir).dump();
}

std::string report(const std::vector<std::string> &runs, const std::string &out_dir,
                   bool consistency) {
  ReportOptions opts;
  opts.consistency = consistency;
  return make_report(runs, out_dir, opts).dump();
}

std::string presets() {
  json out = json::array();
  for (const auto &p : scenario_presets()) {
    out.push_back({{"name", p.name},
                   {"label", p.label},
                   {"time_s", p.time_s},
                   {"length_m", p.length_m},
                   {"length_scale", p.length_scale},
                   {"sigma_se", p.sigma_se()},
                   {"o_pos_mm_s", {p.o_pos_mm_s.x(), p.o_pos_mm_s.y(), p.o_pos_mm_s.z()}},
                   {"o_rot_deg_s", {p.o_rot_deg_s.x(), p.o_rot_deg_s.y(), p.o_rot_deg_s.z()}},
                   {"motion", motion_name(p.motion.kind)}});
  }
  return out.dump();
}

std::string normalize_config(const std::string &config) {
  return config_to_json(parse_config(config)).dump();
}

py::dict consistency(const Eigen::MatrixXd &norms) {
  const ConsistencyStats s = consistency_stats(norms);
  py::dict d;
  d["range"] = s.range;
  d["std"] = s.std;
  d["median_range"] = s.median_range;
  return d;
}

} // namespace

PYBIND11_MODULE(_magslam, m) {
  m.doc() = "Magnetic-field SLAM with a magnetometer array";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def("exp_rot", &exp_rot, py::arg("v"));
  m.def("log_rot", &log_rot, py::arg("r"));
  m.def("rotation_angle", &rotation_angle, py::arg("a"), py::arg("b"));
  m.def("spectral_density_se",
        [](double omega, double length_scale, double sigma_se) {
          GpHyper h;
          h.length_scale = length_scale;
          h.sigma_se = sigma_se;
          return spectral_density_se(omega, h);
        },
        py::arg("omega"), py::arg("length_scale"), py::arg("sigma_se"));

  py::class_<BasisSet>(m, "Basis")
      .def(py::init([](const Vec3 &lower, const Vec3 &upper, int n_modes, double length_scale,
                       double sigma_se) {
             GpHyper h;
             h.length_scale = length_scale;
             h.sigma_se = sigma_se;
             return build_basis(DomainBox{lower, upper}, n_modes, h);
           }),
           py::arg("lower"), py::arg("upper"), py::arg("n_modes"), py::arg("length_scale"),
           py::arg("sigma_se") = 1.0)
      .def_property_readonly("n_weights", &BasisSet::n_weights)
      .def_property_readonly("lower", [](const BasisSet &b) { return b.domain().lower; })
      .def_property_readonly("upper", [](const BasisSet &b) { return b.domain().upper; })
      .def("eigenvalues",
           [](const BasisSet &b) {
             Eigen::VectorXd v(b.n_modes());
             for (int j = 0; j < b.n_modes(); ++j) {
               v[j] = b.modes()[j].eigenvalue;
             }
             return v;
           })
      .def("phi", &BasisSet::phi, py::arg("p"))
      .def("grad_phi", [](const BasisSet &b, const Vec3 &p) { return Eigen::MatrixXd(b.grad_phi(p)); },
           py::arg("p"))
      .def("hess_phi", &BasisSet::hess_phi, py::arg("p"))
      .def("field", &BasisSet::field, py::arg("p"), py::arg("weights"));

  m.def("presets_json", &presets);
  m.def("normalize_config_json", &normalize_config, py::arg("config"));
  m.def("simulate_json", &simulate, py::arg("config"), py::arg("out_dir"),
        py::arg("replicate") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("slam_json", &slam, py::arg("config"), py::arg("data_dir"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("report_json", &report, py::arg("runs"), py::arg("out_dir"),
        py::arg("consistency") = false, py::call_guard<py::gil_scoped_release>());
  m.def("export_map_grid", &export_map_grid, py::arg("run_dir"), py::arg("out_path"),
        py::arg("z") = std::nullopt, py::arg("spacing") = 0.05);
  m.def("consistency_stats", &consistency, py::arg("norms"));
}
