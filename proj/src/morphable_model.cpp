/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/morphable_model.cpp
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
#include "dfmvr/morphable_model.hpp"
#include "dfmvr/errors.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace dfmvr {

namespace {

void check_indices(const std::vector<int>& indices, int num_vertices, const char* what)
{
    for (const int i : indices)
    {
        if (i < 0 || i >= num_vertices)
        {
            throw InvalidArgument(std::string(what) + " index " + std::to_string(i) + " out of range");
        }
    }
}

} // namespace

void validate(const MorphableModel& model)
{
    const auto rows = model.mean_shape.size();
    if (rows % 3 != 0)
    {
        throw InvalidArgument("mean shape length is not a multiple of 3");
    }
    const int nv = model.num_vertices();
    if (model.mean_texture.size() != rows || model.basis_id.rows() != rows || model.basis_exp.rows() != rows ||
        model.basis_tex.rows() != rows)
    {
        throw InvalidArgument("model arrays disagree on the vertex count");
    }
    if (model.basis_id.cols() != kIdentityDims || model.basis_exp.cols() != kExpressionDims ||
        model.basis_tex.cols() != kTextureDims)
    {
        throw InvalidArgument("basis column counts must be (80, 80, 64)");
    }
    if (static_cast<int>(model.region_labels.size()) != nv)
    {
        throw InvalidArgument("one region label per vertex is required");
    }
    for (const auto label : model.region_labels)
    {
        if (label >= kNumClasses)
        {
            throw InvalidArgument("region label " + std::to_string(label) + " is not a face class");
        }
    }
    for (const auto& tri : model.triangles)
    {
        for (const int i : tri)
        {
            if (i < 0 || i >= nv)
            {
                throw InvalidArgument("triangle index " + std::to_string(i) + " out of range");
            }
        }
    }
    if (model.landmarks_68.size() != kNumLandmarks2d || model.landmarks_101.size() != kNumLandmarks3d ||
        model.align_7.size() != kNumAlignmentPoints)
    {
        throw InvalidArgument("landmark sets must have 68, 101 and 7 entries");
    }
    check_indices(model.landmarks_68, nv, "2D landmark");
    check_indices(model.landmarks_101, nv, "3D landmark");
    check_indices(model.align_7, nv, "alignment");
    const std::set<int> lm101(model.landmarks_101.begin(), model.landmarks_101.end());
    for (const int i : model.align_7)
    {
        if (!lm101.contains(i))
        {
            throw InvalidArgument("alignment vertex " + std::to_string(i) + " is not one of the 101 landmarks");
        }
    }
    if (model.crop_center < 0 || model.crop_center >= nv)
    {
        throw InvalidArgument("crop center out of range");
    }
    if (model.mean_texture.size() > 0 &&
        (model.mean_texture.minCoeff() < 0.0 || model.mean_texture.maxCoeff() > 1.0))
    {
        throw InvalidArgument("mean texture must lie in [0, 1]");
    }
}

FaceParams FaceParams::zeros(const MorphableModel& model, int num_views)
{
    FaceParams p;
    p.alpha = Eigen::VectorXd::Zero(model.basis_id.cols());
    p.beta = Eigen::VectorXd::Zero(model.basis_exp.cols());
    p.gamma = Eigen::VectorXd::Zero(model.basis_tex.cols());
    p.poses.assign(num_views, ViewPose{});
    return p;
}

void validate(const FaceParams& params, const MorphableModel& model, int num_views)
{
    if (params.alpha.size() != model.basis_id.cols() || params.beta.size() != model.basis_exp.cols() ||
        params.gamma.size() != model.basis_tex.cols())
    {
        throw InvalidArgument("coefficient vector lengths do not match the model");
    }
    if (static_cast<int>(params.poses.size()) != num_views)
    {
        throw InvalidArgument("expected " + std::to_string(num_views) + " poses, got " +
                              std::to_string(params.poses.size()));
    }
}

Eigen::VectorXd evaluate_shape(const MorphableModel& model, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta)
{
    if (alpha.size() != model.basis_id.cols() || beta.size() != model.basis_exp.cols())
    {
        throw InvalidArgument("shape coefficient dimensions do not match the model: alpha " +
                              std::to_string(alpha.size()) + ", beta " + std::to_string(beta.size()));
    }
    Eigen::VectorXd s = model.mean_shape;
    s.noalias() += model.basis_id * alpha;
    s.noalias() += model.basis_exp * beta;
    return s;
}

Eigen::VectorXd evaluate_texture_unclamped(const MorphableModel& model, const Eigen::VectorXd& gamma)
{
    if (gamma.size() != model.basis_tex.cols())
    {
        throw InvalidArgument("texture coefficient dimension " + std::to_string(gamma.size()) +
                              " does not match the model");
    }
    Eigen::VectorXd t = model.mean_texture;
    t.noalias() += model.basis_tex * gamma;
    return t;
}

Eigen::VectorXd evaluate_texture(const MorphableModel& model, const Eigen::VectorXd& gamma)
{
    return evaluate_texture_unclamped(model, gamma).cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::Matrix3Xd gather_points(const Eigen::VectorXd& interleaved, const std::vector<int>& indices)
{
    const auto pts = as_points(interleaved);
    Eigen::Matrix3Xd out(3, indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i)
    {
        out.col(i) = pts.col(indices[i]);
    }
    return out;
}

} // namespace dfmvr
