/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/observation.cpp
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
#include "dfmvr/observation.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/mask.hpp"
#include "dfmvr/params_io.hpp"
#include "dfmvr/rasterizer.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace dfmvr {

void validate(const Observation& obs)
{
    if (obs.views.empty())
    {
        throw InvalidArgument("observation has no views");
    }
    const int w = obs.views[0].image.width, h = obs.views[0].image.height;
    for (int v = 0; v < obs.num_views(); ++v)
    {
        const auto& view = obs.views[v];
        const std::string where = "view " + std::to_string(v);
        if (view.image.width != w || view.image.height != h ||
            view.image.data.size() != static_cast<std::size_t>(w) * h * 3)
        {
            throw InvalidArgument(where + ": image size differs from view 0");
        }
        if (view.mask.width != w || view.mask.height != h)
        {
            throw InvalidArgument(where + ": mask size differs from its image");
        }
        validate(view.mask);
        if (view.landmarks.cols() != kNumLandmarks2d)
        {
            throw InvalidArgument(where + ": expected 68 landmarks, got " + std::to_string(view.landmarks.cols()));
        }
    }
    if (obs.landmarks3d && obs.landmarks3d->cols() != kNumLandmarks3d)
    {
        throw InvalidArgument("expected 101 3D landmarks, got " + std::to_string(obs.landmarks3d->cols()));
    }
}

std::vector<ViewPose> nominal_rig(int num_views, double yaw_spread_deg, double distance)
{
    if (num_views < 1)
    {
        throw InvalidArgument("rig needs at least one view");
    }
    std::vector<ViewPose> poses(num_views);
    for (int v = 0; v < num_views; ++v)
    {
        const double f = num_views == 1 ? 0.0 : -1.0 + 2.0 * v / (num_views - 1);
        poses[v].yaw = f * yaw_spread_deg * std::numbers::pi / 180.0;
        poses[v].translation = Eigen::Vector3d(0.0, 0.0, distance);
    }
    return poses;
}

namespace {

// Portable draws: raw 64-bit engine output mapped by hand.
double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric(std::mt19937_64& rng, double bound)
{
    return (2.0 * uniform01(rng) - 1.0) * bound;
}

double gaussian(std::mt19937_64& rng)
{
    // Box-Muller on (0, 1].
    const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace

FaceParams sample_ground_truth(const MorphableModel& model, std::uint64_t seed, const ToySceneOptions& options)
{
    std::mt19937_64 rng(seed);
    FaceParams p = FaceParams::zeros(model, options.num_views);
    for (Eigen::Index i = 0; i < p.alpha.size(); ++i)
    {
        p.alpha(i) = options.shape_sigma * gaussian(rng);
    }
    for (Eigen::Index i = 0; i < p.beta.size(); ++i)
    {
        p.beta(i) = options.shape_sigma * gaussian(rng);
    }
    for (Eigen::Index i = 0; i < p.gamma.size(); ++i)
    {
        p.gamma(i) = options.texture_sigma * gaussian(rng);
    }
    p.poses = nominal_rig(options.num_views, options.yaw_spread_deg, options.distance);
    const double a = options.angle_jitter_deg * std::numbers::pi / 180.0;
    for (auto& pose : p.poses)
    {
        pose.pitch += symmetric(rng, a);
        pose.yaw += symmetric(rng, a);
        pose.roll += symmetric(rng, a);
        pose.translation.x() += symmetric(rng, options.lateral_jitter);
        pose.translation.y() += symmetric(rng, options.lateral_jitter);
        pose.translation.z() += symmetric(rng, options.depth_jitter);
    }
    return p;
}

Observation synthesize_observation(const MorphableModel& model, const FaceParams& params, const CameraIntrinsics& cam,
                                   bool quantize)
{
    validate(model);
    validate(cam);
    validate(params, model, static_cast<int>(params.poses.size()));
    const Eigen::VectorXd shape = evaluate_shape(model, params.alpha, params.beta);
    const Eigen::VectorXd texture = evaluate_texture(model, params.gamma);
    const Eigen::Matrix3Xd lm68 = gather_points(shape, model.landmarks_68);
    Observation obs;
    for (const auto& pose : params.poses)
    {
        const RenderedFrame frame = rasterize(model, shape, texture, pose, cam);
        ViewObservation view;
        view.image = quantize ? quantize_8bit(frame.image()) : frame.image();
        view.mask = frame.label_mask();
        view.landmarks = project(to_camera(lm68, pose), cam);
        obs.views.push_back(std::move(view));
    }
    obs.landmarks3d = gather_points(shape, model.landmarks_101);
    return obs;
}

void write_observation(const std::filesystem::path& dir, const Observation& obs, const CameraIntrinsics& cam)
{
    validate(obs);
    std::filesystem::create_directories(dir);
    write_camera(dir / "camera.txt", cam);
    for (int v = 0; v < obs.num_views(); ++v)
    {
        const std::string i = std::to_string(v);
        write_ppm(dir / ("view" + i + ".ppm"), obs.views[v].image);
        write_mask(dir / ("mask" + i + ".pgm"), obs.views[v].mask);
        write_landmarks(dir / ("landmarks" + i + ".txt"), obs.views[v].landmarks);
    }
    if (obs.landmarks3d)
    {
        write_landmarks(dir / "landmarks3d.txt", *obs.landmarks3d);
    }
}

Observation read_observation(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
    {
        throw IoError("observation directory " + dir.string() + " does not exist");
    }
    Observation obs;
    for (int v = 0;; ++v)
    {
        const std::string i = std::to_string(v);
        const auto image_path = dir / ("view" + i + ".ppm");
        if (!std::filesystem::exists(image_path))
        {
            break;
        }
        const std::string where = "view " + i + ": ";
        const auto mask_path = dir / ("mask" + i + ".pgm");
        const auto lm_path = dir / ("landmarks" + i + ".txt");
        if (!std::filesystem::exists(mask_path))
        {
            throw IoError(where + "missing mask file " + mask_path.string());
        }
        if (!std::filesystem::exists(lm_path))
        {
            throw IoError(where + "missing landmark file " + lm_path.string());
        }
        ViewObservation view;
        try
        {
            view.image = read_ppm(image_path);
            view.mask = read_mask(mask_path);
            view.landmarks = read_landmarks2d(lm_path);
        } catch (const std::exception& e)
        {
            throw IoError(where + e.what());
        }
        obs.views.push_back(std::move(view));
    }
    if (obs.views.empty())
    {
        throw IoError(dir.string() + ": no view0.ppm found");
    }
    const auto lm3 = dir / "landmarks3d.txt";
    if (std::filesystem::exists(lm3))
    {
        obs.landmarks3d = read_landmarks3d(lm3);
    }
    try
    {
        validate(obs);
    } catch (const InvalidArgument& e)
    {
        throw IoError(dir.string() + ": " + e.what());
    }
    return obs;
}

} // namespace dfmvr
