/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/similarity.cpp
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
#include "dfmvr/similarity.hpp"
#include "dfmvr/errors.hpp"

#include "Eigen/LU"
#include "Eigen/SVD"

#include <cmath>

namespace dfmvr {

Eigen::Matrix3Xd SimilarityTransform::apply(const Eigen::Matrix3Xd& x) const
{
    return scale * ((rotation * x).colwise() + translation);
}

SimilarityTransform SimilarityTransform::after(const SimilarityTransform& first) const
{
    // s2 (R2 s1 (R1 x + t1) + t2) = s2 s1 (R2 R1 x + R2 t1 + t2 / s1)
    SimilarityTransform c;
    c.scale = scale * first.scale;
    c.rotation = rotation * first.rotation;
    c.translation = rotation * first.translation + translation / first.scale;
    return c;
}

SimilarityTransform SimilarityTransform::inverse() const
{
    // x = R^T (y / s - t) = (1 / s) (R^T y - s R^T t)
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -scale * (rotation.transpose() * translation);
    return inv;
}

SimilarityTransform solve_similarity(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst)
{
    if (src.cols() != dst.cols() || src.cols() == 0)
    {
        throw InvalidArgument("solve_similarity: point sets must be non-empty and of equal size");
    }
    const double n = static_cast<double>(src.cols());
    const Eigen::Vector3d mu_src = src.rowwise().mean();
    const Eigen::Vector3d mu_dst = dst.rowwise().mean();
    const Eigen::Matrix3Xd xs = src.colwise() - mu_src;
    const Eigen::Matrix3Xd xd = dst.colwise() - mu_dst;

    const Eigen::Vector3d spread = Eigen::JacobiSVD<Eigen::Matrix3d>(xs * xs.transpose()).singularValues();
    if (!(spread(0) > 0.0) || spread(1) <= 1e-12 * spread(0))
    {
        throw DegenerateConfigurationError("solve_similarity: source points are collinear or coincident");
    }
    const double var_src = xs.squaredNorm() / n;
    const Eigen::Matrix3d cov = xd * xs.transpose() / n;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
    {
        d(2) = -1.0;
    }
    SimilarityTransform t;
    t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    t.scale = svd.singularValues().dot(d) / var_src;
    if (!(t.scale > 0.0) || !std::isfinite(t.scale))
    {
        throw DegenerateConfigurationError("solve_similarity: optimal scale is not positive");
    }
    t.translation = (mu_dst - t.scale * t.rotation * mu_src) / t.scale;
    return t;
}

double similarity_residual(const SimilarityTransform& t, const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst)
{
    return (dst - t.apply(src)).squaredNorm();
}

} // namespace dfmvr
