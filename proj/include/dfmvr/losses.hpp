/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/losses.hpp
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

#ifndef DFMVR_LOSSES_HPP
#define DFMVR_LOSSES_HPP

#include "dfmvr/image.hpp"
#include "dfmvr/morphable_model.hpp"
#include "dfmvr/similarity.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <vector>

namespace dfmvr {

/// Per-landmark weights for the 68-point layout: 20 on the nose (27-35) and inner mouth (60-67), 1 elsewhere.
std::vector<double> default_landmark_weights();

struct LossWeights
{
    double photo = 4.0;
    double mask = 3.0;
    double landmark = 1.0;
    double reg = 3.0e-4;
    double landmark2d = 0.02;
    double landmark3d = 1.0;
    double alpha = 1.0;
    double beta = 0.8;
    double gamma = 0.017;
    /// When false the 3D landmark term gets coefficient 0 (no 3D annotations).
    bool use_3d = true;
    std::vector<double> landmark_pointwise = default_landmark_weights();
};

/// Throws InvalidArgument on negative weights or a pointwise list that is not 68 long.
void validate(const LossWeights& w);

inline constexpr double kMaskEpsilon = 1e-7;

struct PhotoLossResult
{
    double value = 0.0;
    std::vector<double> per_view;
    std::vector<std::vector<double>> d_rendered; // per view, H*W*3
};

/**
 * Mask-weighted multi-view photometric loss.
 *
 * Per view: sum over P of M_i * ||I_i - I'_i||_2 divided by sum over P of M_i,
 * where P holds pixels that are covered by the render and not background in
 * the original mask; the per-view ratios are averaged. The gradient of the norm
 * is taken as zero where the difference vanishes.
 *
 * Throws EmptyOverlapError naming the first view whose P is empty.
 */
PhotoLossResult photo_loss(const std::vector<Image>& originals, const std::vector<LabelMask>& original_masks,
                           const std::vector<Image>& rendered, const std::vector<std::vector<std::uint8_t>>& coverage,
                           const std::vector<WeightMap>& weightmaps);

struct MaskLossResult
{
    double value = 0.0;
    std::vector<std::vector<double>> d_probs; // per view, H*W*10
};

/**
 * Binary cross-entropy between one-hot labels and predicted class probabilities,
 * summed over the 10 channels, averaged over all pixels and views.
 *
 * Predictions are clamped to [1e-7, 1 - 1e-7]; clamped coordinates receive zero
 * gradient. Throws InvalidArgument on probabilities outside [0, 1].
 */
MaskLossResult mask_loss(const std::vector<LabelMask>& true_masks, const std::vector<std::vector<double>>& pred_probs);

struct Landmark2dLossResult
{
    double value = 0.0;
    std::vector<Eigen::Matrix2Xd> d_pred;
};

/// (1 / (N V)) sum_v sum_n w_n || l_n - l'_n ||_2; zero gradient on exact agreement.
Landmark2dLossResult landmark2d_loss(const std::vector<Eigen::Matrix2Xd>& gt, const std::vector<Eigen::Matrix2Xd>& pred,
                                     const std::vector<double>& weights);

struct Landmark3dLossResult
{
    double value = 0.0;
    Eigen::Matrix3Xd d_pred;
    SimilarityTransform alignment;
};

/**
 * Aligns pred onto gt with the similarity solved from the alignment subset
 * (align_idx indexes into the point lists), then averages the Euclidean
 * distances over all points. The alignment is treated as a constant in the
 * gradient.
 */
Landmark3dLossResult landmark3d_loss(const Eigen::Matrix3Xd& gt, const Eigen::Matrix3Xd& pred,
                                     const std::vector<int>& align_idx);

/**
 * The part of the exact gradient of the 3D landmark loss that flows through the
 * alignment, which landmark3d_loss holds fixed. Adding it to frozen.d_pred gives
 * the derivative with the similarity re-solved for every pred. Only the
 * alignment-subset columns are non-zero.
 */
Eigen::Matrix3Xd landmark3d_alignment_gradient(const Eigen::Matrix3Xd& gt, const Eigen::Matrix3Xd& pred,
                                               const std::vector<int>& align_idx, const Landmark3dLossResult& frozen);

struct RegularizationLossResult
{
    double value = 0.0;
    Eigen::VectorXd d_alpha, d_beta, d_gamma;
};

/// w_alpha ||alpha||^2 + w_beta ||beta||^2 + w_gamma ||gamma||^2
RegularizationLossResult regularization_loss(const FaceParams& params, const LossWeights& w);

struct LossComponents
{
    double photo = 0.0;
    double mask = 0.0;
    double landmark2d = 0.0;
    double landmark3d = 0.0;
    double reg = 0.0;
};

struct TotalLoss
{
    double value = 0.0;
    /// dL_all / dL_component for every component.
    LossComponents coefficients;
};

/// L_all = w_p L_p + w_m L_m + w_l (w_2d L_2d + w_3d L_3d) + w_reg L_reg, with w_3d := 0 when use_3d is off.
TotalLoss total_loss(const LossComponents& c, const LossWeights& w);

} // namespace dfmvr

#endif // DFMVR_LOSSES_HPP
