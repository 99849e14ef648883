/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/registration.hpp
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

#ifndef DFMVR_REGISTRATION_HPP
#define DFMVR_REGISTRATION_HPP

#include "dfmvr/mesh.hpp"
#include "dfmvr/similarity.hpp"

#include <vector>

namespace dfmvr {

struct IcpOptions
{
    int max_iterations = 100;
    double tolerance = 1e-6;
    /// Start from centroid alignment plus RMS-radius scale matching instead of the identity.
    bool prealign = true;
    /// Run the annealed soft-correspondence alignment before the nearest-vertex iterations.
    bool coarse_stage = true;
};

struct IcpResult
{
    SimilarityTransform transform;
    /// Symmetric RMS nearest-vertex distance: every transformed source vertex to the target
    /// and every target vertex to the transformed source, pooled.
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    /// Residual of every accepted iterate, starting with the initial transform and followed by
    /// the coarse-stage result when that was kept. Non-increasing.
    std::vector<double> residual_history;
};

/// Cell size used for the correspondence grid: twice the median edge length of the mesh.
double correspondence_cell_size(const Mesh& mesh);

/**
 * Similarity ICP of source onto target.
 *
 * Alternates nearest-vertex correspondences in both directions with the closed-form
 * similarity over all pairs. Matching target to source as well keeps the scale from
 * collapsing toward a shrunken copy of the source. With options.coarse_stage the
 * nearest-vertex loop starts from an annealed soft-correspondence alignment, which
 * is kept only if it does not raise the residual. `iterations` counts the
 * nearest-vertex steps. A new transform is kept only if it does not increase the residual;
 * iteration stops when the improvement drops below tolerance (converged) or after
 * max_iterations. Throws InvalidArgument on empty meshes.
 */
IcpResult icp_register(const Mesh& source, const Mesh& target, const IcpOptions& options = {});

/// Same, starting from the given transform; options.prealign is ignored.
IcpResult icp_register(const Mesh& source, const Mesh& target, const SimilarityTransform& initial,
                       const IcpOptions& options = {});

/// Centroid and RMS-radius matching similarity (identity rotation).
SimilarityTransform prealign_transform(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target);

} // namespace dfmvr

#endif // DFMVR_REGISTRATION_HPP
