/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/mesh.cpp
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
#include "dfmvr/mesh.hpp"
#include "dfmvr/errors.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <string>
#include <utility>

namespace dfmvr {

void validate(const Mesh& mesh)
{
    const int nv = mesh.num_vertices();
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f)
    {
        for (const int i : mesh.triangles[f])
        {
            if (i < 0 || i >= nv)
            {
                throw InvalidMeshError("triangle " + std::to_string(f) + " references vertex " + std::to_string(i) +
                                       " of " + std::to_string(nv));
            }
        }
    }
    if (mesh.normals.cols() != 0 && mesh.normals.cols() != nv)
    {
        throw InvalidMeshError("mesh normals must be empty or one per vertex");
    }
    if (mesh.colors.cols() != 0 && mesh.colors.cols() != nv)
    {
        throw InvalidMeshError("mesh colors must be empty or one per vertex");
    }
    if (!mesh.vertices.allFinite())
    {
        throw InvalidMeshError("mesh has non-finite vertex positions");
    }
}

Eigen::Matrix3Xd vertex_normals(const Mesh& mesh)
{
    validate(mesh);
    Eigen::Matrix3Xd n = Eigen::Matrix3Xd::Zero(3, mesh.num_vertices());
    for (const auto& t : mesh.triangles)
    {
        const Eigen::Vector3d a = mesh.vertices.col(t[0]);
        const Eigen::Vector3d face = (mesh.vertices.col(t[1]) - a).cross(mesh.vertices.col(t[2]) - a);
        for (const int i : t)
        {
            n.col(i) += face;
        }
    }
    for (Eigen::Index v = 0; v < n.cols(); ++v)
    {
        const double len = n.col(v).norm();
        if (len > 1e-300)
        {
            n.col(v) /= len;
        } else
        {
            n.col(v).setZero();
        }
    }
    return n;
}

Eigen::Matrix3Xd normals_or_computed(const Mesh& mesh)
{
    return mesh.normals.cols() == mesh.num_vertices() && mesh.num_vertices() > 0 ? mesh.normals
                                                                                  : vertex_normals(mesh);
}

double median_edge_length(const Mesh& mesh)
{
    std::vector<std::pair<int, int>> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
    {
        for (int k = 0; k < 3; ++k)
        {
            const int a = t[k], b = t[(k + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.empty())
    {
        return 0.0;
    }
    std::vector<double> lengths;
    lengths.reserve(edges.size());
    for (const auto& [a, b] : edges)
    {
        lengths.push_back((mesh.vertices.col(a) - mesh.vertices.col(b)).norm());
    }
    const auto mid = lengths.begin() + static_cast<std::ptrdiff_t>(lengths.size() / 2);
    std::nth_element(lengths.begin(), mid, lengths.end());
    return *mid;
}

Mesh mesh_from_shape(const MorphableModel& model, const Eigen::VectorXd& shape)
{
    if (shape.size() != 3 * model.num_vertices())
    {
        throw InvalidArgument("shape vector does not match the model's vertex count");
    }
    Mesh m;
    m.vertices = as_points(shape);
    m.triangles = model.triangles;
    return m;
}

Mesh submesh(const Mesh& mesh, const std::vector<int>& keep)
{
    std::vector<int> remap(mesh.num_vertices(), -1);
    Mesh out;
    out.vertices.resize(3, static_cast<Eigen::Index>(keep.size()));
    const bool has_normals = mesh.normals.cols() == mesh.num_vertices() && mesh.num_vertices() > 0;
    const bool has_colors = mesh.colors.cols() == mesh.num_vertices() && mesh.num_vertices() > 0;
    if (has_normals)
    {
        out.normals.resize(3, out.vertices.cols());
    }
    if (has_colors)
    {
        out.colors.resize(3, out.vertices.cols());
    }
    for (std::size_t k = 0; k < keep.size(); ++k)
    {
        const int v = keep[k];
        if (v < 0 || v >= mesh.num_vertices())
        {
            throw InvalidArgument("submesh: vertex index out of range");
        }
        remap[v] = static_cast<int>(k);
        out.vertices.col(k) = mesh.vertices.col(v);
        if (has_normals)
        {
            out.normals.col(k) = mesh.normals.col(v);
        }
        if (has_colors)
        {
            out.colors.col(k) = mesh.colors.col(v);
        }
    }
    for (const auto& t : mesh.triangles)
    {
        if (remap[t[0]] >= 0 && remap[t[1]] >= 0 && remap[t[2]] >= 0)
        {
            out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
        }
    }
    return out;
}

} // namespace dfmvr
