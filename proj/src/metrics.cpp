/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/metrics.cpp
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
#include "dfmvr/metrics.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/nearest_neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dfmvr {

Mesh crop_front_face(const Mesh& mesh, int center_vertex, double radius)
{
    if (center_vertex < 0 || center_vertex >= mesh.num_vertices())
    {
        throw InvalidArgument("crop center vertex " + std::to_string(center_vertex) + " is out of range");
    }
    return crop_around(mesh, mesh.vertices.col(center_vertex), radius);
}

Mesh crop_around(const Mesh& mesh, const Eigen::Vector3d& center, double radius)
{
    if (!(radius > 0.0))
    {
        throw InvalidArgument("crop radius must be positive");
    }
    std::vector<int> keep;
    const double r2 = radius * radius;
    for (int v = 0; v < mesh.num_vertices(); ++v)
    {
        if ((mesh.vertices.col(v) - center).squaredNorm() <= r2)
        {
            keep.push_back(v);
        }
    }
    if (keep.empty())
    {
        throw EmptyCropError("no vertex lies within the crop radius");
    }
    return submesh(mesh, keep);
}

int default_crop_center(const Mesh& mesh)
{
    if (mesh.num_vertices() == 0)
    {
        throw InvalidArgument("empty mesh has no crop center");
    }
    Eigen::Index best = 0;
    mesh.vertices.row(2).minCoeff(&best);
    return static_cast<int>(best);
}

std::vector<double> point_to_plane_distances(const Mesh& pred, const Mesh& gt)
{
    if (gt.num_vertices() == 0)
    {
        throw InvalidArgument("point_to_plane: ground-truth mesh is empty");
    }
    const Eigen::Matrix3Xd normals = normals_or_computed(gt);
    if (normals.cwiseAbs().maxCoeff() == 0.0)
    {
        throw InvalidMeshError("ground-truth mesh has no computable normals");
    }
    const NearestNeighborIndex index(gt.vertices, correspondence_cell_size(gt));
    const std::vector<int> nn = index.query_all(pred.vertices);
    std::vector<double> d(pred.num_vertices());
    for (int v = 0; v < pred.num_vertices(); ++v)
    {
        const Eigen::Vector3d diff = pred.vertices.col(v) - gt.vertices.col(nn[v]);
        const Eigen::Vector3d n = normals.col(nn[v]);
        d[v] = n.squaredNorm() > 0.0 ? std::abs(n.dot(diff)) : diff.norm();
    }
    return d;
}

double point_to_plane_rmse(const Mesh& pred, const Mesh& gt)
{
    if (pred.num_vertices() == 0)
    {
        throw InvalidArgument("point_to_plane_rmse: predicted mesh is empty");
    }
    double sum = 0.0;
    for (const double d : point_to_plane_distances(pred, gt))
    {
        sum += d * d;
    }
    return std::sqrt(sum / pred.num_vertices());
}

Eigen::Vector3d error_color(double error, double scale_max)
{
    static const Eigen::Vector3d stops[4] = {{0, 0, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}};
    if (!(scale_max > 0.0))
    {
        throw InvalidArgument("error ramp scale must be positive");
    }
    const double t = std::clamp(error / scale_max, 0.0, 1.0) * 3.0;
    const int seg = std::min(2, static_cast<int>(t));
    const double f = t - seg;
    return (1.0 - f) * stops[seg] + f * stops[seg + 1];
}

ErrorMap error_map(const Mesh& pred, const Mesh& gt, double scale_max)
{
    ErrorMap out;
    out.errors = point_to_plane_distances(pred, gt);
    out.colored = pred;
    out.colored.colors.resize(3, pred.num_vertices());
    for (int v = 0; v < pred.num_vertices(); ++v)
    {
        out.colored.colors.col(v) = error_color(out.errors[v], scale_max);
    }
    return out;
}

Evaluation evaluate_reconstruction(const Mesh& pred, const Mesh& gt, int gt_center_vertex, double radius,
                                   bool register_first)
{
    validate(pred);
    validate(gt);
    if (gt_center_vertex < 0 || gt_center_vertex >= gt.num_vertices())
    {
        throw InvalidArgument("crop center vertex " + std::to_string(gt_center_vertex) + " is out of range");
    }
    Evaluation e;
    e.registered = pred;
    e.registered.normals.resize(3, 0);
    if (register_first)
    {
        e.registration = icp_register(pred, gt);
        e.registered.vertices = e.registration.transform.apply(pred.vertices);
    } else
    {
        e.registration.converged = true;
        e.registration.residual_history.push_back(0.0);
    }
    e.cropped = crop_around(e.registered, gt.vertices.col(gt_center_vertex), radius);
    e.rmse = point_to_plane_rmse(e.cropped, gt);
    return e;
}

} // namespace dfmvr
