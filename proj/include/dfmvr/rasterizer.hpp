/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/rasterizer.hpp
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

#ifndef DFMVR_RASTERIZER_HPP
#define DFMVR_RASTERIZER_HPP

#include "dfmvr/camera.hpp"
#include "dfmvr/image.hpp"
#include "dfmvr/morphable_model.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace dfmvr {

/// Geometry a frame was rendered from; retained for the backward pass.
struct RasterScene
{
    std::vector<Triangle> triangles;
    std::vector<std::uint8_t> labels;
    Eigen::Matrix3Xd model_points;
    Eigen::Matrix3Xd camera_points;
    Eigen::Matrix2Xd screen_points;
    Eigen::Matrix3Xd colors;
    ViewPose pose;
    CameraIntrinsics camera;
};

/**
 * Output of rasterize(). All per-pixel arrays are row-major.
 *
 * Covered pixels carry the front-most triangle and its screen-space barycentric
 * weights; color and class probabilities are barycentric blends of the vertex
 * colors and one-hot vertex class codes. Uncovered pixels hold the background
 * color, probability 1 on the background class, triangle -1 and depth 0.
 */
struct RenderedFrame
{
    int width = 0;
    int height = 0;
    std::vector<double> color;             // H*W*3
    std::vector<std::uint8_t> coverage;    // H*W, 0 or 1
    std::vector<double> class_probs;       // H*W*10
    std::vector<std::int32_t> triangle_id; // H*W, -1 where uncovered
    std::vector<double> barycentric;       // H*W*3
    std::vector<double> depth;             // H*W camera-space depth
    int degenerate_triangles = 0;          // skipped: projected area < 1e-12 px^2
    std::shared_ptr<const RasterScene> scene;

    std::size_t pixel(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    Image image() const;
    /// Argmax of class probabilities (lowest class id on ties).
    LabelMask label_mask() const;
};

struct RenderOptions
{
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
};

/**
 * Z-buffered rasterization of a triangle soup seen through pose and camera.
 *
 * points and colors are 3xV; labels holds one class id per vertex. A pixel is
 * covered when its center lies inside or on the boundary of a projected
 * triangle; the nearest perspective-correct depth wins and ties keep the lower
 * triangle index. Back faces are not culled.
 *
 * Throws BehindCameraError if any vertex lies at or behind the near plane and
 * InvalidArgument on size mismatches.
 */
RenderedFrame rasterize(std::span<const Triangle> triangles, std::span<const std::uint8_t> labels,
                        const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& colors, const ViewPose& pose,
                        const CameraIntrinsics& cam, const RenderOptions& options = {});

/// Renders a model instance; shape and colors are interleaved length-3V vectors.
RenderedFrame rasterize(const MorphableModel& model, const Eigen::VectorXd& shape, const Eigen::VectorXd& colors,
                        const ViewPose& pose, const CameraIntrinsics& cam, const RenderOptions& options = {});

struct RasterGradients
{
    Eigen::Matrix3Xd d_points;      // model-space vertex positions
    Eigen::Matrix3Xd d_colors;
    Eigen::Matrix<double, 6, 1> d_pose = Eigen::Matrix<double, 6, 1>::Zero(); // pitch, yaw, roll, tx, ty, tz
    Eigen::MatrixXd d_class_codes;  // 10 x V
};

/**
 * Backward pass of rasterize() under the fixed-visibility approximation.
 *
 * Every covered pixel keeps its triangle; gradients flow through the barycentric
 * weights into the projected vertices, then through the projection and the pose.
 * Coverage and occlusion changes contribute nothing. d_color is H*W*3 and d_class
 * H*W*10; either may be empty, meaning zero.
 */
RasterGradients rasterize_backward(const RenderedFrame& frame, std::span<const double> d_color,
                                   std::span<const double> d_class);

} // namespace dfmvr

#endif // DFMVR_RASTERIZER_HPP
