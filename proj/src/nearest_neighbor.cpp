/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/nearest_neighbor.cpp
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
#include "dfmvr/nearest_neighbor.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dfmvr {

int brute_force_nearest(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query)
{
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.cols(); ++i)
    {
        const double d = (points.col(i) - query).squaredNorm();
        if (d < best_d)
        {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

NearestNeighborIndex::NearestNeighborIndex(const Eigen::Matrix3Xd& points, double cell_size) : points_(points)
{
    if (points.cols() == 0)
    {
        throw InvalidArgument("nearest-neighbor index needs at least one point");
    }
    use_grid_ = points.cols() >= kBruteForceThreshold && cell_size > 0.0 && std::isfinite(cell_size);
    if (!use_grid_)
    {
        return;
    }
    origin_ = points.rowwise().minCoeff();
    const Eigen::Vector3d extent = points.rowwise().maxCoeff() - origin_;
    // Keep the dense grid within a few cells per point.
    const double max_cells = 8.0 * static_cast<double>(points.cols()) + 64.0;
    cell_ = cell_size;
    while (true)
    {
        double cells = 1.0;
        for (int k = 0; k < 3; ++k)
        {
            cells *= std::floor(extent(k) / cell_) + 1.0;
        }
        if (cells <= max_cells)
        {
            break;
        }
        cell_ *= 1.5;
    }
    for (int k = 0; k < 3; ++k)
    {
        dims_(k) = static_cast<int>(std::floor(extent(k) / cell_)) + 1;
    }
    const std::size_t ncells = static_cast<std::size_t>(dims_(0)) * dims_(1) * dims_(2);
    std::vector<int> cell_id(points.cols());
    cell_start_.assign(ncells + 1, 0);
    for (Eigen::Index i = 0; i < points.cols(); ++i)
    {
        const Eigen::Vector3i c = cell_of(points.col(i));
        cell_id[i] = (c(2) * dims_(1) + c(1)) * dims_(0) + c(0);
        ++cell_start_[cell_id[i] + 1];
    }
    for (std::size_t c = 0; c < ncells; ++c)
    {
        cell_start_[c + 1] += cell_start_[c];
    }
    cell_items_.resize(points.cols());
    std::vector<int> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (Eigen::Index i = 0; i < points.cols(); ++i)
    {
        cell_items_[fill[cell_id[i]]++] = static_cast<int>(i);
    }
}

Eigen::Vector3i NearestNeighborIndex::cell_of(const Eigen::Vector3d& p) const
{
    Eigen::Vector3i c;
    for (int k = 0; k < 3; ++k)
    {
        const double f = std::floor((p(k) - origin_(k)) / cell_);
        c(k) = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(dims_(k) - 1)));
    }
    return c;
}

int NearestNeighborIndex::query(const Eigen::Vector3d& q) const
{
    if (!q.allFinite())
    {
        throw InvalidArgument("nearest-neighbor query must be finite");
    }
    if (!use_grid_)
    {
        return brute_force_nearest(points_, q);
    }
    const Eigen::Vector3i qc = cell_of(q);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const int max_ring = dims_.maxCoeff();
    for (int ring = 0; ring <= max_ring; ++ring)
    {
        // Unvisited cells are at Chebyshev ring >= ring, so at least (ring - 1) cells away.
        const double lower = (ring - 1) * cell_ * (1.0 - 1e-9);
        if (ring > 0 && best >= 0 && lower > 0.0 && lower * lower > best_d)
        {
            break;
        }
        const int z0 = std::max(0, qc(2) - ring), z1 = std::min(dims_(2) - 1, qc(2) + ring);
        const int y0 = std::max(0, qc(1) - ring), y1 = std::min(dims_(1) - 1, qc(1) + ring);
        const int x0 = std::max(0, qc(0) - ring), x1 = std::min(dims_(0) - 1, qc(0) + ring);
        for (int z = z0; z <= z1; ++z)
        {
            for (int y = y0; y <= y1; ++y)
            {
                const bool inner_yz = std::abs(z - qc(2)) < ring && std::abs(y - qc(1)) < ring;
                for (int x = x0; x <= x1; ++x)
                {
                    if (inner_yz && std::abs(x - qc(0)) < ring)
                    {
                        x = std::max(x, qc(0) + ring - 1); // skip the already visited interior
                        continue;
                    }
                    const int c = (z * dims_(1) + y) * dims_(0) + x;
                    for (int k = cell_start_[c]; k < cell_start_[c + 1]; ++k)
                    {
                        const int i = cell_items_[k];
                        const double d = (points_.col(i) - q).squaredNorm();
                        if (d < best_d || (d == best_d && i < best))
                        {
                            best_d = d;
                            best = i;
                        }
                    }
                }
            }
        }
    }
    return best;
}

std::vector<int> NearestNeighborIndex::query_all(const Eigen::Matrix3Xd& queries) const
{
    std::vector<int> out(queries.cols());
    constexpr int kChunk = 256;
    const int n = static_cast<int>(queries.cols());
    parallel_for((n + kChunk - 1) / kChunk, [&](int chunk) {
        const int end = std::min(n, (chunk + 1) * kChunk);
        for (int i = chunk * kChunk; i < end; ++i)
        {
            out[i] = query(queries.col(i));
        }
    });
    return out;
}

} // namespace dfmvr
