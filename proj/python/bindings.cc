/* Copyright 2026 The voxpan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Python bindings over numpy arrays. Grids travel as (H, W, Z) or
// (H, W, Z, D) C-contiguous arrays next to a GridSpec.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "voxpan/error.h"
#include "voxpan/grad_suite.h"
#include "voxpan/io.h"
#include "voxpan/losses.h"
#include "voxpan/metrics.h"
#include "voxpan/refine.h"
#include "voxpan/scene.h"
#include "voxpan/sparsify.h"
#include "voxpan/supervision.h"
#include "voxpan/temporal.h"

namespace py = pybind11;

namespace voxpan {
namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
std::vector<T> flat(const Array<T>& a, std::size_t expected, const char* what) {
  require(static_cast<std::size_t>(a.size()) == expected, ErrorCode::kShapeMismatch,
          std::string(what) + " has the wrong number of elements");
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <typename T>
Array<T> to_array(std::span<const T> data, std::vector<py::ssize_t> shape) {
  Array<T> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

std::vector<py::ssize_t> grid_shape(const VoxelGridSpec& s) { return {s.h(), s.w(), s.z()}; }

DenseVolume volume_from(const VoxelGridSpec& spec, const Array<float>& a) {
  require(a.ndim() == 4 && a.shape(0) == spec.h() && a.shape(1) == spec.w() &&
              a.shape(2) == spec.z(),
          ErrorCode::kShapeMismatch, "volume must have shape (H, W, Z, D)");
  const int d = static_cast<int>(a.shape(3));
  return DenseVolume(spec, d, flat(a, spec.cell_count() * d, "volume"));
}

Array<float> volume_to(const DenseVolume& v) {
  auto shape = grid_shape(v.spec());
  shape.push_back(v.channels());
  return to_array(v.data(), shape);
}

SemanticGrid semantic_from(const VoxelGridSpec& spec, const Array<std::uint16_t>& a,
                           int num_classes) {
  return SemanticGrid(spec, num_classes, flat(a, spec.cell_count(), "labels"));
}

InstanceGrid instance_from(const VoxelGridSpec& spec, const Array<std::uint32_t>& a) {
  return InstanceGrid(spec, flat(a, spec.cell_count(), "instance ids"));
}

std::vector<UpsampleStage> stages_from(const std::vector<std::array<int, 3>>& factors,
                                       const std::string& map) {
  require(map == "trilinear" || map == "copy", ErrorCode::kInvalidArgument,
          "map must be 'trilinear' or 'copy'");
  std::vector<UpsampleStage> stages;
  for (const auto& f : factors) {
    UpsampleStage s{f};
    if (map == "copy") s.map = CopyParent{};
    stages.push_back(s);
  }
  return stages;
}

Box3D box_from(const py::dict& d) {
  Box3D b;
  const auto center = d["center"].cast<std::array<double, 3>>();
  const auto size = d["size"].cast<std::array<double, 3>>();
  b.center = Vec3(center[0], center[1], center[2]);
  b.size = Vec3(size[0], size[1], size[2]);
  b.yaw = d.contains("yaw") ? d["yaw"].cast<double>() : 0.0;
  b.cls = d["class"].cast<int>();
  b.score = d["score"].cast<double>();
  b.validate();
  return b;
}

py::dict pq_dict(const PQStats& s) {
  py::list classes;
  for (const ClassPQ& c : s.classes) {
    py::dict d;
    d["class"] = c.cls;
    d["thing"] = c.thing;
    d["pq"] = c.pq;
    d["sq"] = c.sq;
    d["rq"] = c.rq;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["fn"] = c.fn;
    classes.append(d);
  }
  py::dict out;
  out["pq"] = s.pq;
  out["sq"] = s.sq;
  out["rq"] = s.rq;
  out["pq_things"] = s.pq_things;
  out["pq_stuff"] = s.pq_stuff;
  out["classes"] = classes;
  return out;
}

}  // namespace
}  // namespace voxpan

PYBIND11_MODULE(_core, m) {
  using namespace voxpan;
  m.doc() = "voxpan core bindings";

  py::exception<Error>(m, "VoxpanError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::module_::import("voxpan._core").attr("VoxpanError");
      const std::string code(error_code_name(e.code()));
      py::object exc = type(code + ": " + e.what());
      exc.attr("code") = code;
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<VoxelGridSpec>(m, "GridSpec")
      .def(py::init([](std::array<int, 3> dims, std::array<double, 3> origin,
                       std::array<double, 3> cell) {
             return VoxelGridSpec(dims, Vec3(origin[0], origin[1], origin[2]),
                                  Vec3(cell[0], cell[1], cell[2]));
           }),
           py::arg("dims"), py::arg("origin"), py::arg("cell_size"))
      .def_property_readonly("dims", &VoxelGridSpec::dims)
      .def_property_readonly("origin", [](const VoxelGridSpec& s) { return s.origin(); })
      .def_property_readonly("cell_size", [](const VoxelGridSpec& s) { return s.cell_size(); })
      .def_property_readonly("cell_count", &VoxelGridSpec::cell_count)
      .def("world_to_index",
           [](const VoxelGridSpec& s, std::array<double, 3> p) -> std::optional<std::array<int, 3>> {
             const auto idx = world_to_index(s, Vec3(p[0], p[1], p[2]));
             if (!idx) return std::nullopt;
             return std::array<int, 3>{idx->i, idx->j, idx->k};
           })
      .def("index_to_center",
           [](const VoxelGridSpec& s, std::array<int, 3> i) {
             return index_to_center(s, {i[0], i[1], i[2]});
           })
      .def("__eq__", [](const VoxelGridSpec& a, const VoxelGridSpec& b) { return a == b; })
      .def("__repr__", [](const VoxelGridSpec& s) {
        return "GridSpec(dims=(" + std::to_string(s.h()) + ", " + std::to_string(s.w()) + ", " +
               std::to_string(s.z()) + "))";
      });

  m.def("profile_grids", [](const std::string& name) {
    const ProfileGrids g = profile_grids(parse_profile(name));
    std::vector<std::array<int, 3>> factors;
    for (const auto& s : g.stages) factors.push_back(s.factors);
    return py::make_tuple(g.coarse, g.fine, factors);
  }, py::arg("profile") = "tiny", "Coarse spec, fine spec and stage factors of a profile.");

  m.def("supervision_grid_spec", &supervision_grid_spec);

  m.def(
      "voxelize_majority",
      [](const VoxelGridSpec& spec, const Array<float>& points, const Array<std::uint16_t>& labels,
         int num_classes) {
        require(points.ndim() == 2 && points.shape(1) == 3, ErrorCode::kShapeMismatch,
                "points must have shape (N, 3)");
        const auto n = static_cast<std::size_t>(points.shape(0));
        require(static_cast<std::size_t>(labels.size()) == n, ErrorCode::kShapeMismatch,
                "one label per point is required");
        std::vector<LabeledPoint> pts(n);
        for (std::size_t i = 0; i < n; ++i) {
          pts[i].xyz = {points.at(i, 0), points.at(i, 1), points.at(i, 2)};
          pts[i].label = labels.data()[i];
        }
        const SemanticGrid g = voxelize_majority(LabeledPointCloud(num_classes, std::move(pts)), spec);
        return to_array(g.labels(), grid_shape(spec));
      },
      py::arg("spec"), py::arg("points"), py::arg("labels"), py::arg("num_classes"));

  m.def(
      "align_volume",
      [](const VoxelGridSpec& spec, const Array<float>& volume, const Mat4& t_cur_to_hist) {
        return volume_to(align_volume(volume_from(spec, volume), Pose(t_cur_to_hist)));
      },
      py::arg("spec"), py::arg("volume"), py::arg("t_cur_to_hist"));

  m.def(
      "coarse_to_fine",
      [](const VoxelGridSpec& spec, const Array<float>& volume,
         const std::vector<std::array<int, 3>>& factors, const std::string& map) {
        const DenseVolume out = coarse_to_fine(volume_from(spec, volume), stages_from(factors, map));
        return py::make_tuple(out.spec(), volume_to(out));
      },
      py::arg("spec"), py::arg("volume"), py::arg("factors"), py::arg("map") = "trilinear");

  m.def(
      "sparse_coarse_to_fine",
      [](const VoxelGridSpec& spec, const Array<float>& volume,
         const std::vector<std::array<int, 3>>& factors, const std::vector<double>& ratios,
         const std::string& map) {
        const SparseCascade c = sparse_coarse_to_fine(
            volume_from(spec, volume), stages_from(factors, map), ratios, feature_norm_score);
        Array<std::int32_t> coords({static_cast<py::ssize_t>(c.volume.size()), py::ssize_t{3}});
        auto* out = coords.mutable_data();
        for (const Index3& i : c.volume.coords()) {
          *out++ = i.i;
          *out++ = i.j;
          *out++ = i.k;
        }
        py::dict d;
        d["spec"] = c.volume.spec();
        d["coords"] = coords;
        d["features"] = to_array(c.volume.features(),
                                 {static_cast<py::ssize_t>(c.volume.size()), c.volume.channels()});
        d["kept"] = c.kept;
        d["sparsity"] = c.sparsity;
        return d;
      },
      py::arg("spec"), py::arg("volume"), py::arg("factors"),
      py::arg("ratios") = std::vector<double>{0.2, 0.5, 0.5}, py::arg("map") = "trilinear",
      "Scores cells by feature norm; returns kept coordinates and features.");

  m.def(
      "refine",
      [](const VoxelGridSpec& spec, const Array<std::uint16_t>& labels, int num_classes,
         const std::vector<py::dict>& boxes, const std::vector<int>& thing_classes, double tau,
         double overlap) {
        std::vector<Box3D> bx;
        for (const auto& d : boxes) bx.push_back(box_from(d));
        const SemanticGrid sem = refine_semantics(semantic_from(spec, labels, num_classes), bx, tau);
        const InstanceGrid inst = assign_instances(sem, bx, thing_classes, tau, overlap);
        return py::make_tuple(to_array(sem.labels(), grid_shape(spec)),
                              to_array(inst.ids(), grid_shape(spec)));
      },
      py::arg("spec"), py::arg("labels"), py::arg("num_classes"), py::arg("boxes"),
      py::arg("thing_classes"), py::arg("tau") = kDefaultRefineTau,
      py::arg("overlap") = kDefaultOverlapThreshold);

  m.def(
      "miou",
      [](const VoxelGridSpec& spec, const Array<std::uint16_t>& pred,
         const Array<std::uint16_t>& gt, int num_classes, const std::vector<int>& classes,
         std::optional<Array<std::uint8_t>> mask) {
        std::optional<BinaryMask> m;
        if (mask) m = BinaryMask(spec, flat(*mask, spec.cell_count(), "mask"));
        const MiouReport r = miou(semantic_from(spec, pred, num_classes),
                                  semantic_from(spec, gt, num_classes), m ? &*m : nullptr, classes);
        py::dict per_class;
        for (const ClassIoU& c : r.per_class) per_class[py::int_(c.cls)] = c.iou;
        py::dict d;
        d["miou"] = r.mean;
        d["class_iou"] = per_class;
        d["evaluated_cells"] = r.evaluated_cells;
        return d;
      },
      py::arg("spec"), py::arg("pred"), py::arg("gt"), py::arg("num_classes"), py::arg("classes"),
      py::arg("mask") = py::none());

  m.def(
      "panoptic_quality",
      [](const VoxelGridSpec& spec, const Array<std::uint16_t>& pred_sem,
         const Array<std::uint32_t>& pred_inst, const Array<std::uint16_t>& gt_sem,
         const Array<std::uint32_t>& gt_inst, int num_classes, const std::vector<int>& things,
         const std::vector<int>& stuff, bool dagger) {
        const SemanticGrid ps = semantic_from(spec, pred_sem, num_classes);
        const SemanticGrid gs = semantic_from(spec, gt_sem, num_classes);
        const InstanceGrid pi = instance_from(spec, pred_inst);
        const InstanceGrid gi = instance_from(spec, gt_inst);
        const PanopticGrids p{ps, pi}, g{gs, gi};
        return pq_dict(dagger ? panoptic_quality_dagger(p, g, things, stuff)
                              : panoptic_quality(p, g, things, stuff));
      },
      py::arg("spec"), py::arg("pred_sem"), py::arg("pred_inst"), py::arg("gt_sem"),
      py::arg("gt_inst"), py::arg("num_classes"), py::arg("thing_classes"),
      py::arg("stuff_classes"), py::arg("dagger") = false);

  m.def(
      "focal_loss",
      [](const Eigen::MatrixXd& probs, const std::vector<int>& targets, double alpha,
         double gamma, int ignore_label) {
        const LossWithGrad l = focal_loss(probs, targets, {alpha, gamma}, ignore_label);
        return py::make_tuple(l.value, l.grad);
      },
      py::arg("probs"), py::arg("targets"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0,
      py::arg("ignore_label") = -1, "Returns (loss, gradient with respect to logits).");

  m.def(
      "lovasz_softmax_loss",
      [](const Eigen::MatrixXd& probs, const std::vector<int>& targets, int ignore_label) {
        const LossWithGrad l = lovasz_softmax_loss(probs, targets, {}, ignore_label);
        return py::make_tuple(l.value, l.grad);
      },
      py::arg("probs"), py::arg("targets"), py::arg("ignore_label") = -1,
      "Returns (loss, gradient with respect to probabilities).");

  m.def("softmax_rows", &softmax_rows, py::arg("logits"));

  m.def(
      "total_loss",
      [](double focal, double lovasz, double thing, double cls, double reg) {
        return total_loss({focal, lovasz, thing, cls, reg}, LossWeights{});
      },
      py::arg("focal"), py::arg("lovasz"), py::arg("thing"), py::arg("cls"), py::arg("reg"),
      "Weighted sum with the default weights.");

  m.def(
      "gradient_suite",
      [](std::uint64_t seed, int instances) {
        py::list out;
        for (const GradSuiteResult& r : run_gradient_suite(seed, instances)) {
          py::dict d;
          d["name"] = r.name;
          d["max_rel_error"] = r.max_rel_error;
          d["instances"] = r.instances;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 0, py::arg("instances") = 100);

  m.def(
      "write_scene",
      [](std::uint64_t seed, const std::string& profile, const std::string& dir, int boxes) {
        SceneConfig c;
        c.profile = parse_profile(profile);
        c.num_boxes = boxes;
        write_scene(gen_scene(seed, c), dir);
      },
      py::arg("seed"), py::arg("profile"), py::arg("dir"), py::arg("boxes") = 3);

  m.def(
      "run_pipeline_json",
      [](std::uint64_t seed, const std::string& profile, const std::string& mode, bool sparse,
         std::optional<std::size_t> drop_box, bool temporal, bool camera_mask,
         const std::string& scene_dir, bool timings) {
        SceneConfig c;
        c.profile = parse_profile(profile);
        const SyntheticScene scene = scene_dir.empty() ? gen_scene(seed, c) : read_scene(scene_dir);
        PipelineOptions o;
        o.mode = parse_mode(mode);
        o.sparse = sparse;
        o.drop_box = drop_box;
        o.temporal = temporal;
        o.camera_mask = camera_mask;
        return run_pipeline(scene, o).to_json(timings).dump();
      },
      py::arg("seed") = 0, py::arg("profile") = "tiny", py::arg("mode") = "oracle",
      py::arg("sparse") = false, py::arg("drop_box") = py::none(), py::arg("temporal") = true,
      py::arg("camera_mask") = false, py::arg("scene_dir") = "", py::arg("timings") = true);

  m.def(
      "read_semantic_pvox",
      [](const std::string& path) {
        const SemanticGrid g = io::decode_semantic(io::read_file(path));
        return py::make_tuple(g.spec(), g.num_classes(), to_array(g.labels(), grid_shape(g.spec())));
      },
      py::arg("path"));

  m.def(
      "write_semantic_pvox",
      [](const std::string& path, const VoxelGridSpec& spec, const Array<std::uint16_t>& labels,
         int num_classes) {
        io::write_file(path, io::encode_pvox(semantic_from(spec, labels, num_classes)));
      },
      py::arg("path"), py::arg("spec"), py::arg("labels"), py::arg("num_classes"));
}
