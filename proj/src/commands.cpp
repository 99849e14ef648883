/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/commands.cpp
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
#include "dfmvr/commands.hpp"
#include "dfmvr/config.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/fitter.hpp"
#include "dfmvr/mesh.hpp"
#include "dfmvr/metrics.hpp"
#include "dfmvr/model_io.hpp"
#include "dfmvr/observation.hpp"
#include "dfmvr/params_io.hpp"
#include "dfmvr/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

namespace dfmvr {

namespace {

// Independent stream for the ground-truth draw, so model and scene seeds never coincide.
constexpr std::uint64_t kSceneSeedSalt = 0x9E3779B97F4A7C15ull;

int guarded(std::ostream& err, const std::function<int()>& body)
{
    try
    {
        return body();
    } catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

int cmd_gen_toy(const GenToyArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (args.out.empty())
        {
            throw InvalidArgument("gen-toy: an output directory is required");
        }
        std::filesystem::create_directories(args.out);
        const auto model_path = args.out / "model.dfm";
        save_model(generate_toy_model(args.seed, args.vertices), model_path);
        // Everything downstream uses the float-rounded model exactly as later commands will read it.
        const MorphableModel model = load_model(model_path);
        const CameraIntrinsics cam = CameraIntrinsics::for_image(args.image_size, args.image_size);
        ToySceneOptions scene;
        scene.image_size = args.image_size;
        const FaceParams gt = sample_ground_truth(model, args.seed ^ kSceneSeedSalt, scene);
        const Observation obs = synthesize_observation(model, gt, cam, true);
        write_observation(args.out, obs, cam);
        write_params(args.out / "gt_params.txt", gt);
        FaceParams init = FaceParams::zeros(model, scene.num_views);
        init.poses = nominal_rig(scene.num_views, scene.yaw_spread_deg, scene.distance);
        write_params(args.out / "init_params.txt", init);
        write_obj(args.out / "gt_mesh.obj", mesh_from_shape(model, evaluate_shape(model, gt.alpha, gt.beta)));
        out << "vertices=" << model.num_vertices() << "\n";
        out << "triangles=" << model.num_triangles() << "\n";
        out << "views=" << obs.num_views() << "\n";
        return kExitOk;
    });
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        FitConfig cfg;
        if (args.config)
        {
            apply_config_file(cfg, *args.config);
        }
        for (const auto& s : args.settings)
        {
            const auto [key, value] = split_setting(s);
            apply_setting(cfg, key, value);
        }
        if (args.no_3d)
        {
            cfg.weights.use_3d = false;
        }
        validate(cfg);
        const MorphableModel model = load_model(args.model);
        const Observation obs = read_observation(args.observation);
        const CameraIntrinsics cam = read_camera(args.observation / "camera.txt");
        FaceParams init;
        const auto default_init = args.observation / "init_params.txt";
        if (args.init)
        {
            init = read_params(*args.init);
        } else if (std::filesystem::exists(default_init))
        {
            init = read_params(default_init);
        } else
        {
            init = FaceParams::zeros(model, obs.num_views());
            init.poses = nominal_rig(obs.num_views());
        }
        validate(init, model, obs.num_views());

        const FitResult r = staged_fit(model, obs, cam, cfg, init);
        for (const auto& w : r.warnings)
        {
            err << "warning: " << w << '\n';
        }
        std::filesystem::create_directories(args.out);
        write_params(args.out / "params.txt", r.params);
        write_obj(args.out / "fitted.obj", mesh_from_shape(model, evaluate_shape(model, r.params.alpha, r.params.beta)));
        write_trace_csv(args.out / "trace.csv", r.trace);
        write_trace_csv(args.out / "pose_trace.csv", r.pose_trace);
        out << "initial_loss=" << format_double(r.initial_loss) << "\n";
        out << "final_loss=" << format_double(r.best_loss) << "\n";
        out << "landmark_error_px=" << format_double(landmark_reprojection_error(model, obs, cam, r.params)) << "\n";
        out << "converged=" << (r.converged ? "true" : "false") << "\n";
        return r.converged ? kExitOk : kExitNotConverged;
    });
}

int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const MorphableModel model = load_model(args.model);
        const FaceParams params = read_params(args.params);
        validate(params, model, static_cast<int>(params.poses.size()));
        if (args.view < 0 || args.view >= static_cast<int>(params.poses.size()))
        {
            throw InvalidArgument("view index " + std::to_string(args.view) + " is out of range (0.." +
                                  std::to_string(params.poses.size() - 1) + ")");
        }
        const CameraIntrinsics cam =
            args.camera ? read_camera(*args.camera) : CameraIntrinsics::for_image(args.image_size, args.image_size);
        const Eigen::VectorXd shape = evaluate_shape(model, params.alpha, params.beta);
        const RenderedFrame frame =
            rasterize(model, shape, evaluate_texture(model, params.gamma), params.poses[args.view], cam);
        std::filesystem::create_directories(args.out);
        write_ppm(args.out / "render.ppm", frame.image());
        std::vector<std::uint8_t> cov(frame.coverage.size());
        std::vector<std::uint16_t> depth(frame.coverage.size());
        for (std::size_t p = 0; p < cov.size(); ++p)
        {
            cov[p] = frame.coverage[p] ? 255 : 0;
            depth[p] = frame.coverage[p]
                           ? static_cast<std::uint16_t>(std::clamp(std::lround(frame.depth[p]), 0L, 65535L))
                           : 0;
        }
        write_pgm8(args.out / "coverage.pgm", frame.width, frame.height, cov);
        write_pgm16(args.out / "depth.pgm", frame.width, frame.height, depth);
        write_mask(args.out / "mask.pgm", frame.label_mask());
        out << "covered_pixels=" << std::count(cov.begin(), cov.end(), 255) << "\n";
        return kExitOk;
    });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Mesh pred = read_mesh(args.pred);
        const Mesh gt = read_mesh(args.gt);
        const int center = args.center ? *args.center : default_crop_center(gt);
        const Evaluation e = evaluate_reconstruction(pred, gt, center, args.radius, args.register_first);
        if (args.errmap)
        {
            write_mesh(*args.errmap, error_map(e.registered, gt, args.scale_max).colored);
        }
        out << "icp_residual_mm=" << fixed6(e.registration.residual) << "\n";
        out << "rmse_mm=" << fixed6(e.rmse) << "\n";
        return kExitOk;
    });
}

int cmd_errmap(const ErrmapArgs& args, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Mesh pred = read_mesh(args.pred);
        const Mesh gt = read_mesh(args.gt);
        Mesh registered = pred;
        if (args.register_first)
        {
            registered.vertices = icp_register(pred, gt).transform.apply(pred.vertices);
        }
        const ErrorMap map = error_map(registered, gt, args.scale_max);
        write_mesh(args.out, map.colored);
        const double worst = map.errors.empty() ? 0.0 : *std::max_element(map.errors.begin(), map.errors.end());
        out << "max_error_mm=" << fixed6(worst) << "\n";
        return kExitOk;
    });
}

} // namespace dfmvr
