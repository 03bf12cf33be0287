// Python module exposing the main pipeline operations: scene compilation,
// mesh decomposition, heightfield sampling, the physics stepper, and the
// offline trajectory metrics.

#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "simbridge/convex_hull.hpp"
#include "simbridge/decompose.hpp"
#include "simbridge/heightfield.hpp"
#include "simbridge/mesh_ops.hpp"
#include "simbridge/mjcf.hpp"
#include "simbridge/obj_io.hpp"
#include "simbridge/run_pipeline.hpp"
#include "simbridge/scene.hpp"
#include "simbridge/spec_compiler.hpp"
#include "simbridge/trajectory_metrics.hpp"
#include "simbridge/world.hpp"

namespace py = pybind11;
using namespace simbridge;

namespace {

TriMesh mesh_from_arrays(const std::vector<std::array<double, 3>>& vertices,
                         const std::vector<std::array<int, 3>>& triangles) {
    TriMesh mesh;
    for (const auto& v : vertices) mesh.vertices.emplace_back(v[0], v[1], v[2]);
    for (const auto& t : triangles) {
        mesh.triangles.push_back({static_cast<std::uint32_t>(t[0]),
                                  static_cast<std::uint32_t>(t[1]),
                                  static_cast<std::uint32_t>(t[2])});
    }
    return mesh;
}

py::dict mesh_to_dict(const TriMesh& mesh) {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> triangles;
    for (const auto& v : mesh.vertices) vertices.push_back({v.x(), v.y(), v.z()});
    for (const auto& t : mesh.triangles) {
        triangles.push_back({static_cast<int>(t[0]), static_cast<int>(t[1]),
                             static_cast<int>(t[2])});
    }
    py::dict out;
    out["vertices"] = vertices;
    out["triangles"] = triangles;
    return out;
}

} // namespace

PYBIND11_MODULE(_simbridge, m) {
    m.doc() = "headless robotics-simulation bridge: scene compiler, deterministic "
              "rigid-body stepper, and trajectory evaluation";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    // Mesh pipeline ------------------------------------------------------
    m.def("parse_obj", [](const std::string& text) { return mesh_to_dict(parse_obj(text)); });
    m.def("write_obj",
          [](const std::vector<std::array<double, 3>>& v, const std::vector<std::array<int, 3>>& t) {
              return write_obj(mesh_from_arrays(v, t));
          });
    m.def("convex_hull", [](const std::vector<std::array<double, 3>>& points) {
        std::vector<Vec3> pts;
        for (const auto& p : points) pts.emplace_back(p[0], p[1], p[2]);
        return mesh_to_dict(convex_hull(pts).mesh);
    });
    m.def("mesh_volume", [](const std::vector<std::array<double, 3>>& v,
                            const std::vector<std::array<int, 3>>& t) {
        return mesh_volume(mesh_from_arrays(v, t));
    });
    m.def("concavity", [](const std::vector<std::array<double, 3>>& v,
                          const std::vector<std::array<int, 3>>& t) {
        return concavity(mesh_from_arrays(v, t));
    });
    m.def(
        "decompose",
        [](const std::vector<std::array<double, 3>>& v, const std::vector<std::array<int, 3>>& t,
           double threshold, int max_depth) {
            DecomposeResult result =
                decompose(mesh_from_arrays(v, t), DecomposeParams{threshold, max_depth});
            py::list parts;
            for (const auto& p : result.parts) parts.append(mesh_to_dict(p.mesh));
            py::dict out;
            out["parts"] = parts;
            out["depth_exhausted"] = result.depth_exhausted;
            return out;
        },
        py::arg("vertices"), py::arg("triangles"), py::arg("threshold") = 0.05,
        py::arg("max_depth") = 6);

    // Scene compilation ---------------------------------------------------
    m.def(
        "compile_scene",
        [](const std::filesystem::path& scene_json, const std::filesystem::path& out_dir,
           double threshold, int max_depth) {
            SceneDescription scene = load_scene(scene_json);
            ProcessOptions options;
            options.decompose.threshold = threshold;
            options.decompose.max_depth = max_depth;
            PhysicsSpec spec = compile_scene(scene, options);
            CompileOutput out = write_compile_output(spec, out_dir);
            py::dict result;
            result["scene_xml"] = out.scene_xml;
            result["assets"] = out.asset_files;
            result["bodies"] = spec.bodies.size();
            return result;
        },
        py::arg("scene_json"), py::arg("out_dir"), py::arg("threshold") = 0.05,
        py::arg("max_depth") = 6);
    m.def("emit_mjcf_from_scene", [](const std::filesystem::path& scene_json) {
        return emit_mjcf(compile_scene(load_scene(scene_json)));
    });

    // Physics -------------------------------------------------------------
    py::class_<StepResult>(m, "StepResult")
        .def_property_readonly("contact_count",
                               [](const StepResult& r) { return r.contacts.size(); })
        .def_property_readonly("readings", [](const StepResult& r) {
            py::dict out;
            for (const auto& reading : r.readings) out[reading.sensor.c_str()] = reading.values;
            return out;
        });

    py::class_<World>(m, "World")
        .def(py::init([](const std::filesystem::path& scene_xml, double dt) {
                 return new World(load_mjcf(scene_xml), dt);
             }),
             py::arg("scene_xml"), py::arg("dt") = 1e-3)
        .def("step", &World::step)
        .def("apply_external", &World::apply_external, py::arg("body"), py::arg("force"),
             py::arg("torque") = Vec3::Zero().eval())
        .def_property_readonly("sim_time", &World::sim_time)
        .def_property_readonly("step_count", &World::step_count)
        .def("body_position",
             [](const World& w, const std::string& id) { return w.body_state(id).position; })
        .def("body_velocity", [](const World& w, const std::string& id) {
            return w.body_state(id).linear_velocity;
        });

    // Heightfields ----------------------------------------------------------
    m.def(
        "sample_heightfield",
        [](const std::vector<std::array<double, 3>>& v, const std::vector<std::array<int, 3>>& t,
           const std::array<double, 3>& bbox_min, const std::array<double, 3>& bbox_max, int nx,
           int ny, int workers) {
            LandscapeRegion region;
            region.id = "py";
            region.bbox.min = Vec3(bbox_min[0], bbox_min[1], bbox_min[2]);
            region.bbox.max = Vec3(bbox_max[0], bbox_max[1], bbox_max[2]);
            region.nx = nx;
            region.ny = ny;
            SampleOptions options;
            options.workers = workers;
            options.warn_empty = false;
            HeightField hf = sample_heightfield(region, mesh_from_arrays(v, t), options);
            std::vector<std::vector<double>> rows;
            for (int j = 0; j < hf.ny; ++j) {
                std::vector<double> row;
                for (int i = 0; i < hf.nx; ++i) row.push_back(hf.at(i, j));
                rows.push_back(std::move(row));
            }
            return rows;
        },
        py::arg("vertices"), py::arg("triangles"), py::arg("bbox_min"), py::arg("bbox_max"),
        py::arg("nx"), py::arg("ny"), py::arg("workers") = 0);

    // Trajectory metrics ----------------------------------------------------
    m.def("sc", [](const std::vector<std::pair<bool, int>>& episodes) {
        std::vector<Episode> eps;
        for (const auto& [s, c] : episodes) eps.push_back({s, c});
        return success_weighted_by_collision(eps);
    });
    m.def("ate", [](const std::vector<std::array<double, 3>>& gt,
                    const std::vector<std::array<double, 3>>& est) {
        PairedSamples pairs;
        for (const auto& p : gt) pairs.gt.emplace_back(p[0], p[1], p[2]);
        for (const auto& p : est) pairs.est.emplace_back(p[0], p[1], p[2]);
        if (pairs.gt.size() != pairs.est.size()) {
            throw ValidationError("gt and est must have equal length");
        }
        return ate(pairs);
    });
    m.def("umeyama", [](const std::vector<std::array<double, 3>>& gt,
                        const std::vector<std::array<double, 3>>& est) {
        std::vector<Vec3> p, q;
        for (const auto& v : gt) p.emplace_back(v[0], v[1], v[2]);
        for (const auto& v : est) q.emplace_back(v[0], v[1], v[2]);
        SimilarityTransform tf = umeyama(p, q);
        py::dict out;
        out["scale"] = tf.scale;
        out["rotation"] = tf.rotation;
        out["translation"] = tf.translation;
        return out;
    });
    m.def("coverage", [](const std::vector<std::array<double, 3>>& gt,
                         const std::vector<std::array<double, 3>>& est) {
        std::vector<Vec3> p, q;
        for (const auto& v : gt) p.emplace_back(v[0], v[1], v[2]);
        for (const auto& v : est) q.emplace_back(v[0], v[1], v[2]);
        return coverage(p, q);
    });
    m.def("scaled_ate", &scaled_ate, py::arg("ate"), py::arg("coverage"));
    m.def("cosine_similarity", &cosine_similarity);
    m.def("kl_divergence", &kl_divergence, py::arg("p"), py::arg("q"), py::arg("log_base") = 0.0);
}
