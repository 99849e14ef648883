/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/nearest_neighbor.hpp
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

#ifndef DFMVR_NEAREST_NEIGHBOR_HPP
#define DFMVR_NEAREST_NEIGHBOR_HPP

#include "Eigen/Core"

#include <vector>

namespace dfmvr {

/// Point sets smaller than this are searched exhaustively.
inline constexpr int kBruteForceThreshold = 500;

/// Exhaustive nearest point; ties go to the lower index.
int brute_force_nearest(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& query);

/**
 * Nearest-neighbor index over a fixed point set.
 *
 * Uses a dense uniform grid with ring search, or an exhaustive scan when the
 * set has fewer than kBruteForceThreshold points or cell_size <= 0. Both paths
 * return the same index: the lowest-index point at minimal squared distance.
 */
class NearestNeighborIndex
{
public:
    NearestNeighborIndex(const Eigen::Matrix3Xd& points, double cell_size);

    int query(const Eigen::Vector3d& q) const;

    /// Nearest index for every column of queries, evaluated in parallel.
    std::vector<int> query_all(const Eigen::Matrix3Xd& queries) const;

    bool uses_grid() const { return use_grid_; }
    const Eigen::Matrix3Xd& points() const { return points_; }

private:
    Eigen::Matrix3Xd points_;
    bool use_grid_ = false;
    double cell_ = 0.0;
    Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
    Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
    std::vector<int> cell_start_; // CSR offsets, size cells + 1
    std::vector<int> cell_items_; // point indices, ascending within a cell

    Eigen::Vector3i cell_of(const Eigen::Vector3d& p) const;
};

} // namespace dfmvr

#endif // DFMVR_NEAREST_NEIGHBOR_HPP
