/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/camera.hpp
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

#ifndef DFMVR_CAMERA_HPP
#define DFMVR_CAMERA_HPP

#include "Eigen/Core"

#include <array>

namespace dfmvr {

/**
 * Rigid pose of the face in one view's camera frame.
 *
 * Angles are radians. The rotation is R = Rz(roll) * Ry(yaw) * Rx(pitch) and a
 * model-space point X maps to camera space as R * X + translation.
 */
struct ViewPose
{
    double pitch = 0.0;
    double yaw = 0.0;
    double roll = 0.0;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/**
 * Pinhole camera. The camera looks down +z, x points right, y points up, and
 * image rows grow downwards, so a camera-space point projects to
 * u = focal * x / z + cx, v = cy - focal * y / z. Pixel (col, row) has its
 * center at (col + 0.5, row + 0.5).
 */
struct CameraIntrinsics
{
    double focal = 1015.0;
    double cx = 112.0;
    double cy = 112.0;
    int width = 224;
    int height = 224;
    double near = 1.0;

    /// Conventional face camera: focal 1015 px at 224 px width, scaled with the width.
    static CameraIntrinsics for_image(int width, int height);
};

/// Throws InvalidArgument if any invariant (focal > 0, principal point inside, near > 0) fails.
void validate(const CameraIntrinsics& cam);

struct RigidTransform
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

RigidTransform pose_to_matrix(const ViewPose& pose);

/// dR/dpitch, dR/dyaw, dR/droll.
std::array<Eigen::Matrix3d, 3> rotation_jacobians(const ViewPose& pose);

/// Camera-space points of a 3xN model-space point set.
Eigen::Matrix3Xd to_camera(const Eigen::Matrix3Xd& model_points, const ViewPose& pose);

/// Projection of a single point without any depth check.
Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraIntrinsics& cam);

/// d(u, v) / d(x, y, z) at camera-space point p.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p, const CameraIntrinsics& cam);

/**
 * Projects camera-space points to pixel coordinates.
 *
 * Throws BehindCameraError naming the first point whose depth is <= cam.near.
 */
Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const CameraIntrinsics& cam);

} // namespace dfmvr

#endif // DFMVR_CAMERA_HPP
