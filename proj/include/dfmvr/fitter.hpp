/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/fitter.hpp
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

#ifndef DFMVR_FITTER_HPP
#define DFMVR_FITTER_HPP

#include "dfmvr/camera.hpp"
#include "dfmvr/image.hpp"
#include "dfmvr/losses.hpp"
#include "dfmvr/mask.hpp"
#include "dfmvr/morphable_model.hpp"
#include "dfmvr/observation.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dfmvr {

enum class StageOrder { landmarks_first, joint_first };

struct FitConfig
{
    int iterations = 400;
    double step_size = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    LossWeights weights;
    double clip_norm = 10.0;
    /// Converged when the best loss improved by less than this fraction over the final 10% of iterations.
    double tolerance = 1e-2;
    std::uint64_t seed = 0;
    /// Millimetres of translation per optimizer unit, so a step moves angles and translation comparably.
    double translation_scale = 100.0;
    /// Fraction of the run after which the step size follows a half cosine down to 0; 1 keeps it constant.
    double decay_start = 0.75;
    int dilation_radius = kDefaultDilationRadius;
    /// Landmark-only pose stage of staged_fit.
    int pose_iterations = 200;
    double pose_step_size = 1e-2;
    StageOrder stage_order = StageOrder::landmarks_first;
};

/// Throws InvalidArgument on iterations <= 0, step sizes <= 0, decays outside (0, 1) and similar.
void validate(const FitConfig& cfg);

struct LossBreakdown
{
    LossComponents components;
    double total = 0.0;
};

struct TraceRow
{
    int iteration = 0;
    LossBreakdown loss;
};

/// dL/d(parameter) in natural units (radians, model units).
struct ParamsGradient
{
    Eigen::VectorXd d_alpha;
    Eigen::VectorXd d_beta;
    Eigen::VectorXd d_gamma;
    std::vector<Eigen::Matrix<double, 6, 1>> d_poses; // pitch, yaw, roll, tx, ty, tz
};

/**
 * The fitting objective for one observation, with everything that does not
 * depend on the parameters (weight maps, alignment index lists) precomputed.
 */
class FitProblem
{
public:
    FitProblem(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
               int dilation_radius = kDefaultDilationRadius);

    /**
     * L_all and its components at params under weights. Terms with a zero
     * coefficient are skipped (reported as 0); the 3D term is also skipped when
     * the observation carries no 3D landmarks. With gradient set, fills grad.
     *
     * Throws EmptyOverlapError / BehindCameraError from the renderer and
     * NumericalError naming the term that produced a non-finite value.
     */
    LossBreakdown evaluate(const FaceParams& params, const LossWeights& weights, ParamsGradient* grad = nullptr) const;

    const MorphableModel& model() const { return model_; }
    const Observation& observation() const { return obs_; }
    const CameraIntrinsics& camera() const { return cam_; }
    const std::vector<WeightMap>& weight_maps() const { return weight_maps_; }

private:
    const MorphableModel& model_;
    const Observation& obs_;
    CameraIntrinsics cam_;
    std::vector<WeightMap> weight_maps_;
    std::vector<Image> originals_;
    std::vector<LabelMask> masks_;
    std::vector<Eigen::Matrix2Xd> landmarks_;
    std::vector<int> align_in_101_;
};

struct FitResult
{
    FaceParams params;               // lowest-loss iterate
    std::vector<TraceRow> trace;     // full-objective iterations
    std::vector<TraceRow> pose_trace; // landmark-only stage of staged_fit
    double initial_loss = 0.0;       // L_all at the initial parameters
    double best_loss = 0.0;
    int best_iteration = 0;
    bool converged = false;
    bool stopped_early = false;      // the renderer rejected an iterate; the best one so far is returned
    std::vector<std::string> warnings;
};

/**
 * Adam on (alpha, beta, gamma, every view pose) against L_all. Each iteration
 * renders all views, evaluates the loss and its gradient, clips the gradient to
 * clip_norm and steps. Returns the iterate with the lowest recorded loss.
 *
 * Throws BadInitializationError when the initial parameters leave a view without
 * overlap (or behind the camera) and NumericalError on non-finite losses.
 */
FitResult fit(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam, const FitConfig& cfg,
              const FaceParams& init);

/// Pose-only Adam against the landmark terms (pose_iterations, pose_step_size).
FitResult fit_pose(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                   const FitConfig& cfg, const FaceParams& init);

/**
 * fit_pose followed by fit. With StageOrder::joint_first the stages run the other
 * way round and a warning is recorded.
 */
FitResult staged_fit(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                     const FitConfig& cfg, const FaceParams& init);

/// Mean pixel distance between the observed and projected 68 landmarks over all views.
double landmark_reprojection_error(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                                   const FaceParams& params);

/// CSV with header iteration,L_p,L_m,L_2d,L_3d,L_reg,L_all.
std::string format_trace_csv(const std::vector<TraceRow>& trace);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

} // namespace dfmvr

#endif // DFMVR_FITTER_HPP
