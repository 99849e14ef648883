/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/camera.cpp
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

#include <cmath>
#include <string>

namespace dfmvr {

CameraIntrinsics CameraIntrinsics::for_image(int width, int height)
{
    CameraIntrinsics cam;
    cam.focal = 1015.0 * static_cast<double>(width) / 224.0;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    cam.near = 1.0;
    return cam;
}

void validate(const CameraIntrinsics& cam)
{
    if (!(cam.focal > 0.0))
    {
        throw InvalidArgument("camera focal length must be positive");
    }
    if (cam.width <= 0 || cam.height <= 0)
    {
        throw InvalidArgument("camera image size must be positive");
    }
    if (!(cam.cx > 0.0 && cam.cx < cam.width && cam.cy > 0.0 && cam.cy < cam.height))
    {
        throw InvalidArgument("principal point must lie inside the image");
    }
    if (!(cam.near > 0.0))
    {
        throw InvalidArgument("near plane must be positive");
    }
}

namespace {

Eigen::Matrix3d rot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

Eigen::Matrix3d rot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}

Eigen::Matrix3d rot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

Eigen::Matrix3d d_rot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return r;
}

Eigen::Matrix3d d_rot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return r;
}

Eigen::Matrix3d d_rot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return r;
}

} // namespace

RigidTransform pose_to_matrix(const ViewPose& pose)
{
    RigidTransform t;
    t.rotation = rot_z(pose.roll) * rot_y(pose.yaw) * rot_x(pose.pitch);
    t.translation = pose.translation;
    return t;
}

std::array<Eigen::Matrix3d, 3> rotation_jacobians(const ViewPose& pose)
{
    const Eigen::Matrix3d rx = rot_x(pose.pitch);
    const Eigen::Matrix3d ry = rot_y(pose.yaw);
    const Eigen::Matrix3d rz = rot_z(pose.roll);
    return {rz * ry * d_rot_x(pose.pitch), rz * d_rot_y(pose.yaw) * rx, d_rot_z(pose.roll) * ry * rx};
}

Eigen::Matrix3Xd to_camera(const Eigen::Matrix3Xd& model_points, const ViewPose& pose)
{
    const RigidTransform t = pose_to_matrix(pose);
    return (t.rotation * model_points).colwise() + t.translation;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraIntrinsics& cam)
{
    return {cam.focal * p.x() / p.z() + cam.cx, cam.cy - cam.focal * p.y() / p.z()};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p, const CameraIntrinsics& cam)
{
    const double inv_z = 1.0 / p.z();
    const double f = cam.focal * inv_z;
    Eigen::Matrix<double, 2, 3> j;
    j << f, 0.0, -f * p.x() * inv_z, 0.0, -f, f * p.y() * inv_z;
    return j;
}

Eigen::Matrix2Xd project(const Eigen::Matrix3Xd& points, const CameraIntrinsics& cam)
{
    Eigen::Matrix2Xd out(2, points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i)
    {
        const Eigen::Vector3d p = points.col(i);
        if (!(p.z() > cam.near))
        {
            throw BehindCameraError(static_cast<int>(i), p.z(), cam.near);
        }
        out.col(i) = project_point(p, cam);
    }
    return out;
}

} // namespace dfmvr
