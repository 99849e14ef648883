/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: python/src/module.cpp
 *
 * Copyright 2026 The dfmvr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dfmvr/camera.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/fitter.hpp"
#include "dfmvr/fusion.hpp"
#include "dfmvr/losses.hpp"
#include "dfmvr/mask.hpp"
#include "dfmvr/mesh.hpp"
#include "dfmvr/metrics.hpp"
#include "dfmvr/model_io.hpp"
#include "dfmvr/morphable_model.hpp"
#include "dfmvr/mulen_unet.hpp"
#include "dfmvr/observation.hpp"
#include "dfmvr/params_io.hpp"
#include "dfmvr/rasterizer.hpp"
#include "dfmvr/registration.hpp"
#include "dfmvr/similarity.hpp"

#include "pybind11/eigen.h"
#include "pybind11/numpy.h"
#include "pybind11/pybind11.h"
#include "pybind11/stl.h"
#include "pybind11/stl/filesystem.h"

#include <cstring>

namespace py = pybind11;
using namespace dfmvr;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& data, std::vector<py::ssize_t> shape)
{
    py::array_t<T> out(shape);
    std::memcpy(out.mutable_data(), data.data(), data.size() * sizeof(T));
    return out;
}

LabelMask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a)
{
    if (a.ndim() != 2)
    {
        throw InvalidArgument("mask must be a 2D array");
    }
    LabelMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(m.labels.data(), a.data(), m.labels.size());
    return m;
}

py::array_t<std::uint8_t> mask_to_array(const LabelMask& m)
{
    return to_array(m.labels, {m.height, m.width});
}

FeatureMap feature_map_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a)
{
    if (a.ndim() != 3)
    {
        throw InvalidArgument("feature map must be an H x W x C array");
    }
    std::vector<double> data(a.data(), a.data() + a.size());
    return FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                      std::move(data));
}

py::array_t<double> feature_map_to_array(const FeatureMap& f)
{
    return to_array(f.data(), {f.height(), f.width(), f.channels()});
}

} // namespace

PYBIND11_MODULE(_dfmvr, m)
{
    m.doc() = "Multi-view 3D face reconstruction toolkit";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<BehindCameraError>(m, "BehindCameraError", PyExc_RuntimeError);
    py::register_exception<EmptyOverlapError>(m, "EmptyOverlapError", PyExc_RuntimeError);
    py::register_exception<DegenerateConfigurationError>(m, "DegenerateConfigurationError", PyExc_RuntimeError);
    py::register_exception<EmptyCropError>(m, "EmptyCropError", PyExc_RuntimeError);
    py::register_exception<InvalidMeshError>(m, "InvalidMeshError", PyExc_RuntimeError);
    py::register_exception<BadInitializationError>(m, "BadInitializationError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ViewPose>(m, "ViewPose")
        .def(py::init<>())
        .def(py::init([](double pitch, double yaw, double roll, const Eigen::Vector3d& t) {
                 return ViewPose{pitch, yaw, roll, t};
             }),
             py::arg("pitch"), py::arg("yaw"), py::arg("roll"), py::arg("translation"))
        .def_readwrite("pitch", &ViewPose::pitch)
        .def_readwrite("yaw", &ViewPose::yaw)
        .def_readwrite("roll", &ViewPose::roll)
        .def_readwrite("translation", &ViewPose::translation)
        .def("rotation", [](const ViewPose& p) { return pose_to_matrix(p).rotation; });

    py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init<>())
        .def_static("for_image", &CameraIntrinsics::for_image, py::arg("width"), py::arg("height"))
        .def_readwrite("focal", &CameraIntrinsics::focal)
        .def_readwrite("cx", &CameraIntrinsics::cx)
        .def_readwrite("cy", &CameraIntrinsics::cy)
        .def_readwrite("width", &CameraIntrinsics::width)
        .def_readwrite("height", &CameraIntrinsics::height)
        .def_readwrite("near", &CameraIntrinsics::near);

    m.def("project", &project, py::arg("camera_points"), py::arg("camera"));

    py::class_<MorphableModel>(m, "MorphableModel")
        .def_readonly("mean_shape", &MorphableModel::mean_shape)
        .def_readonly("mean_texture", &MorphableModel::mean_texture)
        .def_readonly("basis_id", &MorphableModel::basis_id)
        .def_readonly("basis_exp", &MorphableModel::basis_exp)
        .def_readonly("basis_tex", &MorphableModel::basis_tex)
        .def_readonly("triangles", &MorphableModel::triangles)
        .def_readonly("region_labels", &MorphableModel::region_labels)
        .def_readonly("landmarks_68", &MorphableModel::landmarks_68)
        .def_readonly("landmarks_101", &MorphableModel::landmarks_101)
        .def_readonly("align_7", &MorphableModel::align_7)
        .def_readonly("crop_center", &MorphableModel::crop_center)
        .def_property_readonly("num_vertices", &MorphableModel::num_vertices)
        .def_property_readonly("num_triangles", &MorphableModel::num_triangles);

    m.def("generate_toy_model", &generate_toy_model, py::arg("seed") = 1, py::arg("target_vertices") = 2000);
    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("evaluate_shape", &evaluate_shape, py::arg("model"), py::arg("alpha"), py::arg("beta"));
    m.def("evaluate_texture", &evaluate_texture, py::arg("model"), py::arg("gamma"));

    py::class_<FaceParams>(m, "FaceParams")
        .def(py::init<>())
        .def_static("zeros", &FaceParams::zeros, py::arg("model"), py::arg("num_views"))
        .def_readwrite("alpha", &FaceParams::alpha)
        .def_readwrite("beta", &FaceParams::beta)
        .def_readwrite("gamma", &FaceParams::gamma)
        .def_readwrite("poses", &FaceParams::poses);

    m.def("read_params", &read_params, py::arg("path"));
    m.def("write_params", &write_params, py::arg("path"), py::arg("params"));
    m.def("nominal_rig", &nominal_rig, py::arg("num_views") = 3, py::arg("yaw_spread_deg") = 30.0,
          py::arg("distance") = 1100.0);
    m.def(
        "sample_ground_truth",
        [](const MorphableModel& model, std::uint64_t seed) { return sample_ground_truth(model, seed); },
        py::arg("model"), py::arg("seed"));

    m.def(
        "render",
        [](const MorphableModel& model, const FaceParams& params, int view, const CameraIntrinsics& cam) {
            if (view < 0 || view >= static_cast<int>(params.poses.size()))
            {
                throw InvalidArgument("view " + std::to_string(view) + " is out of range");
            }
            const Eigen::VectorXd shape = evaluate_shape(model, params.alpha, params.beta);
            const Eigen::VectorXd tex = evaluate_texture(model, params.gamma);
            const RenderedFrame f = rasterize(model, shape, tex, params.poses[view], cam);
            py::dict out;
            out["color"] = to_array(f.color, {f.height, f.width, 3});
            out["coverage"] = to_array(f.coverage, {f.height, f.width});
            out["class_probs"] = to_array(f.class_probs, {f.height, f.width, kNumClasses});
            out["depth"] = to_array(f.depth, {f.height, f.width});
            out["triangle_id"] = to_array(f.triangle_id, {f.height, f.width});
            out["labels"] = mask_to_array(f.label_mask());
            return out;
        },
        py::arg("model"), py::arg("params"), py::arg("view"), py::arg("camera"),
        "Renders one view; returns color, coverage, class_probs, depth, triangle_id and labels arrays.");

    m.def(
        "dilate", [](const py::array_t<std::uint8_t>& mask, int radius) { return mask_to_array(dilate(mask_from_array(mask), radius)); },
        py::arg("mask"), py::arg("radius") = kDefaultDilationRadius);
    m.def(
        "weight_map",
        [](const py::array_t<std::uint8_t>& mask, int radius) {
            const WeightMap w = make_weight_map(mask_from_array(mask), radius);
            return to_array(w.weights, {w.height, w.width});
        },
        py::arg("mask"), py::arg("radius") = kDefaultDilationRadius);

    py::class_<SimilarityTransform>(m, "SimilarityTransform")
        .def(py::init<>())
        .def_readwrite("scale", &SimilarityTransform::scale)
        .def_readwrite("rotation", &SimilarityTransform::rotation)
        .def_readwrite("translation", &SimilarityTransform::translation)
        .def("apply", py::overload_cast<const Eigen::Matrix3Xd&>(&SimilarityTransform::apply, py::const_))
        .def("inverse", &SimilarityTransform::inverse);
    m.def("solve_similarity", &solve_similarity, py::arg("src"), py::arg("dst"));

    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("photo", &LossWeights::photo)
        .def_readwrite("mask", &LossWeights::mask)
        .def_readwrite("landmark", &LossWeights::landmark)
        .def_readwrite("reg", &LossWeights::reg)
        .def_readwrite("landmark2d", &LossWeights::landmark2d)
        .def_readwrite("landmark3d", &LossWeights::landmark3d)
        .def_readwrite("alpha", &LossWeights::alpha)
        .def_readwrite("beta", &LossWeights::beta)
        .def_readwrite("gamma", &LossWeights::gamma)
        .def_readwrite("use_3d", &LossWeights::use_3d);
    m.def(
        "total_loss",
        [](double photo, double mask, double landmark2d, double landmark3d, double reg, const LossWeights& w) {
            return total_loss(LossComponents{photo, mask, landmark2d, landmark3d, reg}, w).value;
        },
        py::arg("photo"), py::arg("mask"), py::arg("landmark2d"), py::arg("landmark3d"), py::arg("reg"),
        py::arg("weights") = LossWeights{});
    m.def(
        "landmark3d_loss",
        [](const Eigen::Matrix3Xd& gt, const Eigen::Matrix3Xd& pred, const std::vector<int>& align) {
            const Landmark3dLossResult r = landmark3d_loss(gt, pred, align);
            return py::make_tuple(r.value, r.d_pred);
        },
        py::arg("gt"), py::arg("pred"), py::arg("align_idx"));

    py::class_<Mesh>(m, "Mesh")
        .def(py::init<>())
        .def(py::init([](const Eigen::Matrix3Xd& v, const std::vector<Triangle>& t) {
                 Mesh mesh;
                 mesh.vertices = v;
                 mesh.triangles = t;
                 validate(mesh);
                 return mesh;
             }),
             py::arg("vertices"), py::arg("triangles"))
        .def_readwrite("vertices", &Mesh::vertices)
        .def_readwrite("triangles", &Mesh::triangles)
        .def_readwrite("normals", &Mesh::normals)
        .def_readwrite("colors", &Mesh::colors)
        .def_property_readonly("num_vertices", &Mesh::num_vertices);
    m.def("read_mesh", &read_mesh, py::arg("path"));
    m.def("write_mesh", &write_mesh, py::arg("path"), py::arg("mesh"));
    m.def("vertex_normals", &vertex_normals, py::arg("mesh"));

    py::class_<IcpResult>(m, "IcpResult")
        .def_readonly("transform", &IcpResult::transform)
        .def_readonly("residual", &IcpResult::residual)
        .def_readonly("converged", &IcpResult::converged)
        .def_readonly("iterations", &IcpResult::iterations)
        .def_readonly("residual_history", &IcpResult::residual_history);
    m.def(
        "icp_register",
        [](const Mesh& source, const Mesh& target, int max_iterations, double tolerance) {
            return icp_register(source, target, IcpOptions{max_iterations, tolerance, true});
        },
        py::arg("source"), py::arg("target"), py::arg("max_iterations") = 100, py::arg("tolerance") = 1e-6);
    m.def("point_to_plane_rmse", &point_to_plane_rmse, py::arg("pred"), py::arg("gt"));
    m.def("crop_front_face", &crop_front_face, py::arg("mesh"), py::arg("center_vertex"),
          py::arg("radius") = kDefaultCropRadius);
    m.def(
        "evaluate_reconstruction",
        [](const Mesh& pred, const Mesh& gt, std::optional<int> center, double radius, bool register_first) {
            const Evaluation e =
                evaluate_reconstruction(pred, gt, center.value_or(default_crop_center(gt)), radius, register_first);
            return py::make_tuple(e.rmse, e.registration.residual);
        },
        py::arg("pred"), py::arg("gt"), py::arg("center") = py::none(), py::arg("radius") = kDefaultCropRadius,
        py::arg("register_first") = true, "Returns (rmse, icp_residual).");

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("iterations", &FitConfig::iterations)
        .def_readwrite("step_size", &FitConfig::step_size)
        .def_readwrite("beta1", &FitConfig::beta1)
        .def_readwrite("beta2", &FitConfig::beta2)
        .def_readwrite("weights", &FitConfig::weights)
        .def_readwrite("clip_norm", &FitConfig::clip_norm)
        .def_readwrite("tolerance", &FitConfig::tolerance)
        .def_readwrite("decay_start", &FitConfig::decay_start)
        .def_readwrite("pose_iterations", &FitConfig::pose_iterations)
        .def_readwrite("pose_step_size", &FitConfig::pose_step_size);

    py::class_<Observation>(m, "Observation")
        .def_property_readonly("num_views", &Observation::num_views)
        .def_readonly("landmarks3d", &Observation::landmarks3d)
        .def("image", [](const Observation& o, int v) {
            const Image& img = o.views.at(v).image;
            return to_array(img.data, {img.height, img.width, 3});
        })
        .def("mask", [](const Observation& o, int v) { return mask_to_array(o.views.at(v).mask); })
        .def("landmarks", [](const Observation& o, int v) { return o.views.at(v).landmarks; });
    m.def("synthesize_observation", &synthesize_observation, py::arg("model"), py::arg("params"), py::arg("camera"),
          py::arg("quantize") = true);
    m.def("read_observation", &read_observation, py::arg("dir"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("initial_loss", &FitResult::initial_loss)
        .def_readonly("best_loss", &FitResult::best_loss)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("warnings", &FitResult::warnings)
        .def_property_readonly("trace", [](const FitResult& r) {
            std::vector<double> totals;
            for (const auto& row : r.trace)
            {
                totals.push_back(row.loss.total);
            }
            return totals;
        });
    m.def("fit", &staged_fit, py::arg("model"), py::arg("observation"), py::arg("camera"), py::arg("config"),
          py::arg("init"), py::call_guard<py::gil_scoped_release>());
    m.def("landmark_reprojection_error", &landmark_reprojection_error, py::arg("model"), py::arg("observation"),
          py::arg("camera"), py::arg("params"));

    m.def(
        "involution",
        [](const py::array_t<double>& x, int kernel_size, int groups, int reduction, std::uint64_t seed) {
            const FeatureMap fx = feature_map_from_array(x);
            const InvolutionSpec spec = InvolutionSpec::random(fx.channels(), kernel_size, groups, reduction, seed);
            return feature_map_to_array(involution_forward(fx, spec));
        },
        py::arg("x"), py::arg("kernel_size") = 3, py::arg("groups") = 1, py::arg("reduction") = 4,
        py::arg("seed") = 0, "Involution with generator weights drawn from seed.");

    py::class_<MulEnUnetWeights>(m, "MulEnUnetWeights")
        .def_static("random", &MulEnUnetWeights::random, py::arg("seed"), py::arg("in_channels") = 4,
                    py::arg("out_channels") = 64, py::arg("widths") = std::array<int, kUnetDepth>{16, 32, 64, 128})
        .def_property_readonly("parameter_count", &MulEnUnetWeights::parameter_count);
    m.def("save_weights", &save_weights, py::arg("weights"), py::arg("path"));
    m.def("load_weights", &load_weights, py::arg("path"));
    m.def(
        "mulen_unet_forward",
        [](const std::vector<py::array_t<double>>& views, const MulEnUnetWeights& w) {
            std::vector<FeatureMap> maps;
            for (const auto& v : views)
            {
                maps.push_back(feature_map_from_array(v));
            }
            return feature_map_to_array(mulen_unet_forward(maps, w));
        },
        py::arg("views"), py::arg("weights"));
}
