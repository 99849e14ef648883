/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/mesh.hpp
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

#ifndef DFMVR_MESH_HPP
#define DFMVR_MESH_HPP

#include "dfmvr/morphable_model.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <vector>

namespace dfmvr {

/**
 * Triangle mesh with optional per-vertex normals and colors.
 *
 * normals and colors are either empty (0 columns) or 3xV.
 */
struct Mesh
{
    Eigen::Matrix3Xd vertices;
    std::vector<Triangle> triangles;
    Eigen::Matrix3Xd normals;
    Eigen::Matrix3Xd colors;

    int num_vertices() const { return static_cast<int>(vertices.cols()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

/// Throws InvalidMeshError on out-of-range indices or mis-sized attributes.
void validate(const Mesh& mesh);

/**
 * Area-weighted vertex normals: the sum of the (unnormalised) cross products of
 * the incident triangles, normalised. Vertices without any non-degenerate
 * incident triangle get a zero vector.
 */
Eigen::Matrix3Xd vertex_normals(const Mesh& mesh);

/// The mesh's own normals if present, otherwise vertex_normals(mesh).
Eigen::Matrix3Xd normals_or_computed(const Mesh& mesh);

/// Median length over the unique edges; 0 for meshes without triangles.
double median_edge_length(const Mesh& mesh);

/// Instance mesh of a model for an interleaved shape vector.
Mesh mesh_from_shape(const MorphableModel& model, const Eigen::VectorXd& shape);

/// Keeps the listed vertices (in the given order) and the triangles whose corners are all kept.
Mesh submesh(const Mesh& mesh, const std::vector<int>& keep);

/**
 * ASCII OBJ. Vertex colors use the common "v x y z r g b" extension; faces with
 * more than three corners are fan-triangulated on read, and texture / normal
 * indices in face tokens are ignored.
 */
void write_obj(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_obj(const std::filesystem::path& path);

/**
 * Binary little-endian PLY. Positions are written as double, colors as uchar,
 * normals (if present) as double. The reader accepts any scalar property type.
 */
void write_ply(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_ply(const std::filesystem::path& path);

/// Dispatches on the extension (.obj or .ply); throws IoError otherwise.
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_mesh(const std::filesystem::path& path);

} // namespace dfmvr

#endif // DFMVR_MESH_HPP
