/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/registration.cpp
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
#include "dfmvr/registration.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/nearest_neighbor.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace dfmvr {

namespace {

struct Matching
{
    std::vector<int> forward;  // nearest target vertex of every moved source vertex
    std::vector<int> backward; // nearest moved source vertex of every target vertex
    double residual = 0.0;
};

Eigen::Matrix3Xd gather(const Eigen::Matrix3Xd& points, const std::vector<int>& idx)
{
    Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
        out.col(i) = points.col(idx[i]);
    }
    return out;
}

constexpr Eigen::Index kCoarseSamples = 1000;
constexpr double kCoarseStartFraction = 0.3; // of the target RMS radius
constexpr double kCoarseDecay = 0.8;
constexpr int kCoarseSolvesPerLevel = 3;

/// Every k-th column so that at most kCoarseSamples remain.
Eigen::Matrix3Xd subsample(const Eigen::Matrix3Xd& points)
{
    const Eigen::Index stride = (points.cols() + kCoarseSamples - 1) / kCoarseSamples;
    Eigen::Matrix3Xd out(3, (points.cols() + stride - 1) / stride);
    for (Eigen::Index i = 0; i < out.cols(); ++i)
    {
        out.col(i) = points.col(i * stride);
    }
    return out;
}

/// Gaussian-weighted averages of `values`, with weights from the distance of each query to `positions`.
Eigen::Matrix3Xd soft_match(const Eigen::Matrix3Xd& queries, const Eigen::Matrix3Xd& positions,
                            const Eigen::Matrix3Xd& values, double sigma)
{
    Eigen::Matrix3Xd out(3, queries.cols());
    const double inv = 1.0 / (2.0 * sigma * sigma);
    parallel_for(static_cast<int>(queries.cols()), [&](int i) {
        const Eigen::ArrayXd d2 = (positions.colwise() - queries.col(i)).colwise().squaredNorm().transpose().array();
        const Eigen::VectorXd w = (-(d2 - d2.minCoeff()) * inv).exp().matrix();
        out.col(i) = values * w / w.sum();
    });
    return out;
}

/**
 * Annealed soft-correspondence alignment. Wide Gaussians average over many
 * vertices and smooth away the lattice-aligned local minima that trap
 * nearest-vertex matching; the width shrinks toward a quarter edge length.
 */
SimilarityTransform coarse_align(const Mesh& source, const Mesh& target, SimilarityTransform t)
{
    const Eigen::Matrix3Xd src = subsample(source.vertices);
    const Eigen::Matrix3Xd tgt = subsample(target.vertices);
    const Eigen::Vector3d mu = tgt.rowwise().mean();
    const double radius = std::sqrt((tgt.colwise() - mu).squaredNorm() / static_cast<double>(tgt.cols()));
    // Spacing of the subsampled target grows with the square root of the stride.
    const double spacing = median_edge_length(target) *
                           std::sqrt(static_cast<double>(target.num_vertices()) / static_cast<double>(tgt.cols()));
    const double sigma_end = spacing > 0.0 ? 0.25 * spacing : 1e-3 * radius;
    const Eigen::Index ns = src.cols();
    const Eigen::Index nt = tgt.cols();
    for (double sigma = kCoarseStartFraction * radius; sigma > sigma_end; sigma *= kCoarseDecay)
    {
        for (int k = 0; k < kCoarseSolvesPerLevel; ++k)
        {
            const Eigen::Matrix3Xd moved = t.apply(src);
            Eigen::Matrix3Xd a(3, ns + nt);
            Eigen::Matrix3Xd b(3, ns + nt);
            a.leftCols(ns) = src;
            b.leftCols(ns) = soft_match(moved, tgt, tgt, sigma);
            a.rightCols(nt) = soft_match(tgt, moved, src, sigma);
            b.rightCols(nt) = tgt;
            try
            {
                t = solve_similarity(a, b);
            } catch (const DegenerateConfigurationError&)
            {
                return t;
            }
        }
    }
    return t;
}

} // namespace

double correspondence_cell_size(const Mesh& mesh)
{
    return 2.0 * median_edge_length(mesh);
}

SimilarityTransform prealign_transform(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target)
{
    const Eigen::Vector3d mu_s = source.rowwise().mean();
    const Eigen::Vector3d mu_t = target.rowwise().mean();
    const double rms_s = std::sqrt((source.colwise() - mu_s).squaredNorm() / static_cast<double>(source.cols()));
    const double rms_t = std::sqrt((target.colwise() - mu_t).squaredNorm() / static_cast<double>(target.cols()));
    SimilarityTransform t;
    t.scale = rms_s > 0.0 && rms_t > 0.0 ? rms_t / rms_s : 1.0;
    t.translation = mu_t / t.scale - mu_s;
    return t;
}

IcpResult icp_register(const Mesh& source, const Mesh& target, const IcpOptions& options)
{
    if (source.num_vertices() == 0 || target.num_vertices() == 0)
    {
        throw InvalidArgument("icp_register: meshes must be non-empty");
    }
    const SimilarityTransform init =
        options.prealign ? prealign_transform(source.vertices, target.vertices) : SimilarityTransform{};
    return icp_register(source, target, init, options);
}

IcpResult icp_register(const Mesh& source, const Mesh& target, const SimilarityTransform& initial,
                       const IcpOptions& options)
{
    if (source.num_vertices() == 0 || target.num_vertices() == 0)
    {
        throw InvalidArgument("icp_register: meshes must be non-empty");
    }
    if (options.max_iterations < 0 || !(options.tolerance >= 0.0))
    {
        throw InvalidArgument("icp_register: max_iterations and tolerance must be non-negative");
    }
    const NearestNeighborIndex target_index(target.vertices, correspondence_cell_size(target));
    const double source_cell = correspondence_cell_size(source);

    const auto match = [&](const SimilarityTransform& t) {
        Matching m;
        const Eigen::Matrix3Xd moved = t.apply(source.vertices);
        m.forward = target_index.query_all(moved);
        // Grid cell scales with the transform so the hash stays balanced.
        const NearestNeighborIndex moved_index(moved, source_cell > 0.0 ? t.scale * source_cell : 1.0);
        m.backward = moved_index.query_all(target.vertices);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < moved.cols(); ++i)
        {
            sum += (moved.col(i) - target.vertices.col(m.forward[i])).squaredNorm();
        }
        for (Eigen::Index j = 0; j < target.vertices.cols(); ++j)
        {
            sum += (moved.col(m.backward[j]) - target.vertices.col(j)).squaredNorm();
        }
        m.residual = std::sqrt(sum / static_cast<double>(moved.cols() + target.vertices.cols()));
        return m;
    };

    IcpResult r;
    r.transform = initial;
    Matching m = match(r.transform);
    r.residual = m.residual;
    r.residual_history.push_back(r.residual);
    if (options.coarse_stage && r.residual > 0.0)
    {
        const SimilarityTransform coarse = coarse_align(source, target, initial);
        Matching cm = match(coarse);
        if (cm.residual <= r.residual)
        {
            r.transform = coarse;
            r.residual = cm.residual;
            m = std::move(cm);
            r.residual_history.push_back(r.residual);
        }
    }

    for (int it = 0; it < options.max_iterations; ++it)
    {
        r.iterations = it + 1;
        if (r.residual == 0.0)
        {
            r.converged = true;
            break;
        }
        const Eigen::Index ns = source.vertices.cols();
        const Eigen::Index nt = target.vertices.cols();
        Eigen::Matrix3Xd src(3, ns + nt);
        Eigen::Matrix3Xd dst(3, ns + nt);
        src.leftCols(ns) = source.vertices;
        dst.leftCols(ns) = gather(target.vertices, m.forward);
        src.rightCols(nt) = gather(source.vertices, m.backward);
        dst.rightCols(nt) = target.vertices;
        SimilarityTransform candidate;
        try
        {
            candidate = solve_similarity(src, dst);
        } catch (const DegenerateConfigurationError&)
        {
            break;
        }
        Matching cand = match(candidate);
        if (!(cand.residual <= r.residual))
        {
            r.converged = true;
            break;
        }
        const double improvement = r.residual - cand.residual;
        r.transform = candidate;
        r.residual = cand.residual;
        m = std::move(cand);
        r.residual_history.push_back(r.residual);
        if (improvement < options.tolerance)
        {
            r.converged = true;
            break;
        }
    }
    return r;
}

} // namespace dfmvr
