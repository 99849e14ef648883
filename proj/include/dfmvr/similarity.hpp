/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/similarity.hpp
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

#ifndef DFMVR_SIMILARITY_HPP
#define DFMVR_SIMILARITY_HPP

#include "Eigen/Core"

namespace dfmvr {

/**
 * Similarity x -> s * (R * x + t).
 *
 * Note the translation sits inside the scale, so the equivalent "s R x + t'"
 * form has t' = s * t.
 */
struct SimilarityTransform
{
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return scale * (rotation * x + translation); }
    Eigen::Matrix3Xd apply(const Eigen::Matrix3Xd& x) const;

    /// (this o first)(x) = this(first(x)).
    SimilarityTransform after(const SimilarityTransform& first) const;
    SimilarityTransform inverse() const;
};

/**
 * Closed-form least squares similarity mapping src onto dst,
 * minimising sum_i || dst_i - s (R src_i + t) ||^2.
 *
 * Centroid centering, SVD of the cross-covariance with reflection correction
 * (det R = +1), scale from the variance ratio. Throws
 * DegenerateConfigurationError if the centred source has rank < 2 or the
 * optimal scale is not positive, and InvalidArgument on size mismatch.
 */
SimilarityTransform solve_similarity(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

/// sum_i || dst_i - T(src_i) ||^2
double similarity_residual(const SimilarityTransform& t, const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst);

} // namespace dfmvr

#endif // DFMVR_SIMILARITY_HPP
