/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/observation.hpp
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
#pragma once

#ifndef DFMVR_OBSERVATION_HPP
#define DFMVR_OBSERVATION_HPP

#include "dfmvr/camera.hpp"
#include "dfmvr/image.hpp"
#include "dfmvr/morphable_model.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace dfmvr {

struct ViewObservation
{
    Image image;
    LabelMask mask;
    Eigen::Matrix2Xd landmarks; // 68 pixel positions
};

/// Multi-view fitting target. The optional 3D landmarks (101, model space) are shared by all views.
struct Observation
{
    std::vector<ViewObservation> views;
    std::optional<Eigen::Matrix3Xd> landmarks3d;

    int num_views() const { return static_cast<int>(views.size()); }
};

/// Throws InvalidArgument on inconsistent sizes, landmark counts or labels.
void validate(const Observation& obs);

/// Nominal rig: views evenly spread in yaw over [-spread, +spread] degrees, the face at distance on the optical axis.
std::vector<ViewPose> nominal_rig(int num_views = 3, double yaw_spread_deg = 30.0, double distance = 1100.0);

struct ToySceneOptions
{
    int num_views = 3;
    int image_size = 128;
    double yaw_spread_deg = 30.0;
    double distance = 1100.0;
    double shape_sigma = 0.5;   // alpha and beta
    double texture_sigma = 0.5; // gamma
    double angle_jitter_deg = 4.0;
    double lateral_jitter = 15.0;
    double depth_jitter = 30.0;
};

/// Ground-truth parameters: Gaussian coefficients and uniformly jittered nominal poses, all from one seed.
FaceParams sample_ground_truth(const MorphableModel& model, std::uint64_t seed, const ToySceneOptions& options = {});

/**
 * Renders every view of params: image (quantized to 8 bits when quantize is
 * set, matching what a PPM round trip yields), argmax label mask and the
 * projected 68 landmarks; the 101 model-space 3D landmarks are attached.
 */
Observation synthesize_observation(const MorphableModel& model, const FaceParams& params, const CameraIntrinsics& cam,
                                   bool quantize = true);

/**
 * Bundle directory layout:
 *   camera.txt, view<i>.ppm, mask<i>.pgm, landmarks<i>.txt, and optionally landmarks3d.txt.
 */
void write_observation(const std::filesystem::path& dir, const Observation& obs, const CameraIntrinsics& cam);

/// Reads views 0, 1, ... until view<i>.ppm is missing. Errors name the offending view.
Observation read_observation(const std::filesystem::path& dir);

} // namespace dfmvr

#endif // DFMVR_OBSERVATION_HPP
