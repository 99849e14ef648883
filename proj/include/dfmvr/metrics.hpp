/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/metrics.hpp
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

#ifndef DFMVR_METRICS_HPP
#define DFMVR_METRICS_HPP

#include "dfmvr/mesh.hpp"
#include "dfmvr/registration.hpp"

#include "Eigen/Core"

#include <vector>

namespace dfmvr {

/// Front-face crop radius in model units (mm) around the nose tip.
inline constexpr double kDefaultCropRadius = 95.0;

/**
 * Keeps the vertices within radius (inclusive) of the center vertex and the
 * triangles whose three corners survive; vertex order is preserved.
 * Throws InvalidArgument on a bad index or radius.
 */
Mesh crop_front_face(const Mesh& mesh, int center_vertex, double radius = kDefaultCropRadius);

/// Same filter around an arbitrary point. Throws EmptyCropError if nothing survives.
Mesh crop_around(const Mesh& mesh, const Eigen::Vector3d& center, double radius);

/// Vertex with the smallest z (the most protruding point for a face looking down -z); lowest index on ties.
int default_crop_center(const Mesh& mesh);

/**
 * |n_c . (p - c)| for every pred vertex p, where c is its nearest gt vertex and
 * n_c the gt vertex normal. gt vertices whose normal cannot be computed fall back
 * to the point distance |p - c|. Throws InvalidMeshError if gt has no computable
 * normal at all.
 */
std::vector<double> point_to_plane_distances(const Mesh& pred, const Mesh& gt);

/// Root mean square of point_to_plane_distances().
double point_to_plane_rmse(const Mesh& pred, const Mesh& gt);

/**
 * Error ramp: blue at 0, green at scale_max / 3, yellow at 2 scale_max / 3 and
 * red from scale_max on, linear in between.
 */
Eigen::Vector3d error_color(double error, double scale_max);

struct ErrorMap
{
    std::vector<double> errors;
    Mesh colored; // pred with per-vertex ramp colors
};

ErrorMap error_map(const Mesh& pred, const Mesh& gt, double scale_max);

struct Evaluation
{
    IcpResult registration;
    Mesh registered;     // pred mapped onto gt
    Mesh cropped;        // registered pred restricted to the crop sphere
    double rmse = 0.0;
};

/**
 * Evaluation protocol: similarity ICP of pred onto gt (skipped when register_first
 * is false), crop of the registered prediction to the sphere of the given radius
 * around gt's center vertex, and point-to-plane RMSE of the crop against gt.
 */
Evaluation evaluate_reconstruction(const Mesh& pred, const Mesh& gt, int gt_center_vertex,
                                   double radius = kDefaultCropRadius, bool register_first = true);

} // namespace dfmvr

#endif // DFMVR_METRICS_HPP
