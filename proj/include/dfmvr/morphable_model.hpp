/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/morphable_model.hpp
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

#ifndef DFMVR_MORPHABLE_MODEL_HPP
#define DFMVR_MORPHABLE_MODEL_HPP

#include "dfmvr/camera.hpp"

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <vector>

namespace dfmvr {

inline constexpr int kIdentityDims = 80;
inline constexpr int kExpressionDims = 80;
inline constexpr int kTextureDims = 64;
inline constexpr int kNumLandmarks2d = 68;
inline constexpr int kNumLandmarks3d = 101;
inline constexpr int kNumAlignmentPoints = 7;

/// Semantic face classes. The numeric value is the label stored in masks and models.
enum class FaceClass : std::uint8_t {
    background = 0,
    skin = 1,
    left_brow = 2,
    right_brow = 3,
    left_eye = 4,
    right_eye = 5,
    nose = 6,
    mouth = 7,
    upper_lip = 8,
    lower_lip = 9,
};
inline constexpr int kNumClasses = 10;

using Triangle = std::array<int, 3>;

/**
 * A linear face model: shape S = mean_shape + basis_id * alpha + basis_exp * beta,
 * texture T = mean_texture + basis_tex * gamma.
 *
 * Vertex quantities are stored interleaved, (x0, y0, z0, x1, ...). Shape is in
 * model units (millimetres), texture is RGB in [0, 1]. The face looks towards -z
 * in model space, so an identity pose with positive z translation faces the camera.
 */
struct MorphableModel
{
    Eigen::VectorXd mean_shape;
    Eigen::VectorXd mean_texture;
    Eigen::MatrixXd basis_id;
    Eigen::MatrixXd basis_exp;
    Eigen::MatrixXd basis_tex;
    std::vector<Triangle> triangles;
    std::vector<std::uint8_t> region_labels;
    std::vector<int> landmarks_68;
    std::vector<int> landmarks_101;
    std::vector<int> align_7;
    int crop_center = 0;

    int num_vertices() const { return static_cast<int>(mean_shape.size() / 3); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

/// Throws InvalidArgument describing the first violated model invariant.
void validate(const MorphableModel& model);

/// Regression target: 3DMM coefficients plus one pose per view.
struct FaceParams
{
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
    std::vector<ViewPose> poses;

    /// Zero coefficients sized for the model, with num_views default poses.
    static FaceParams zeros(const MorphableModel& model, int num_views);
};

/// Throws InvalidArgument if coefficient lengths do not match the model or the view count differs.
void validate(const FaceParams& params, const MorphableModel& model, int num_views);

/// S = mean_shape + basis_id * alpha + basis_exp * beta, as a length-3V vector.
Eigen::VectorXd evaluate_shape(const MorphableModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

/// T = mean_texture + basis_tex * gamma before clamping.
Eigen::VectorXd evaluate_texture_unclamped(const MorphableModel& model, const Eigen::VectorXd& gamma);

/// T = mean_texture + basis_tex * gamma, clamped to [0, 1] per component.
Eigen::VectorXd evaluate_texture(const MorphableModel& model, const Eigen::VectorXd& gamma);

/// Views a length-3V interleaved vector as a 3xV matrix.
inline Eigen::Map<const Eigen::Matrix3Xd> as_points(const Eigen::VectorXd& v)
{
    return {v.data(), 3, v.size() / 3};
}

/// Columns of the given vertex indices.
Eigen::Matrix3Xd gather_points(const Eigen::VectorXd& interleaved, const std::vector<int>& indices);

/**
 * Generates a synthetic face model, deterministic per seed.
 *
 * The surface is a height field over an elliptical (u, v) domain: an ellipsoid
 * cap with a protruding nose, eye sockets and lips. Regions are painted per
 * triangle and vertices are duplicated along region seams, so every triangle
 * carries a single class. Basis columns are smooth random fields, orthogonalised
 * (identity and expression jointly) and scaled so that a coefficient of +-3
 * displaces no vertex by more than 15% of the bounding-box diagonal.
 *
 * Throws InvalidArgument if target_vertices < 200.
 */
MorphableModel generate_toy_model(std::uint64_t seed, int target_vertices);

} // namespace dfmvr

#endif // DFMVR_MORPHABLE_MODEL_HPP
