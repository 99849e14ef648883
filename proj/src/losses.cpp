/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/losses.cpp
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
#include "dfmvr/losses.hpp"
#include "dfmvr/errors.hpp"

#include "Eigen/Cholesky"

#include <algorithm>
#include <cmath>
#include <string>

namespace dfmvr {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
    Eigen::Matrix3d m;
    m << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
    return m;
}

constexpr double kProbabilitySlack = 1e-12;

} // namespace

std::vector<double> default_landmark_weights()
{
    std::vector<double> w(kNumLandmarks2d, 1.0);
    for (int i = 27; i <= 35; ++i)
    {
        w[i] = 20.0;
    }
    for (int i = 60; i <= 67; ++i)
    {
        w[i] = 20.0;
    }
    return w;
}

void validate(const LossWeights& w)
{
    for (const double v : {w.photo, w.mask, w.landmark, w.reg, w.landmark2d, w.landmark3d, w.alpha, w.beta, w.gamma})
    {
        if (!(v >= 0.0) || !std::isfinite(v))
        {
            throw InvalidArgument("loss weights must be finite and non-negative");
        }
    }
    if (w.landmark_pointwise.size() != kNumLandmarks2d)
    {
        throw InvalidArgument("per-landmark weights must have 68 entries");
    }
    for (const double v : w.landmark_pointwise)
    {
        if (!(v >= 0.0))
        {
            throw InvalidArgument("per-landmark weights must be non-negative");
        }
    }
}

PhotoLossResult photo_loss(const std::vector<Image>& originals, const std::vector<LabelMask>& original_masks,
                           const std::vector<Image>& rendered, const std::vector<std::vector<std::uint8_t>>& coverage,
                           const std::vector<WeightMap>& weightmaps)
{
    const std::size_t views = originals.size();
    if (views == 0 || original_masks.size() != views || rendered.size() != views || coverage.size() != views ||
        weightmaps.size() != views)
    {
        throw InvalidArgument("photo_loss: per-view inputs must be non-empty and equally many");
    }
    PhotoLossResult out;
    out.per_view.resize(views);
    out.d_rendered.resize(views);
    for (std::size_t v = 0; v < views; ++v)
    {
        const Image& orig = originals[v];
        const Image& rend = rendered[v];
        const std::size_t npix = static_cast<std::size_t>(orig.width) * orig.height;
        if (rend.width != orig.width || rend.height != orig.height || original_masks[v].labels.size() != npix ||
            coverage[v].size() != npix || weightmaps[v].weights.size() != npix)
        {
            throw InvalidArgument("photo_loss: image sizes differ in view " + std::to_string(v));
        }
        double numerator = 0.0, denominator = 0.0;
        std::vector<double> norms(npix, 0.0);
        for (std::size_t p = 0; p < npix; ++p)
        {
            if (!coverage[v][p] || original_masks[v].labels[p] == 0)
            {
                continue;
            }
            const double dr = orig.data[3 * p] - rend.data[3 * p];
            const double dg = orig.data[3 * p + 1] - rend.data[3 * p + 1];
            const double db = orig.data[3 * p + 2] - rend.data[3 * p + 2];
            norms[p] = std::sqrt(dr * dr + dg * dg + db * db);
            const double m = weightmaps[v].weights[p];
            numerator += m * norms[p];
            denominator += m;
        }
        if (!(denominator > 0.0))
        {
            throw EmptyOverlapError(static_cast<int>(v));
        }
        out.per_view[v] = numerator / denominator;
        out.value += out.per_view[v] / static_cast<double>(views);

        auto& grad = out.d_rendered[v];
        grad.assign(npix * 3, 0.0);
        const double scale = 1.0 / (denominator * static_cast<double>(views));
        for (std::size_t p = 0; p < npix; ++p)
        {
            if (norms[p] == 0.0 || !coverage[v][p] || original_masks[v].labels[p] == 0)
            {
                continue;
            }
            const double k = scale * weightmaps[v].weights[p] / norms[p];
            for (int c = 0; c < 3; ++c)
            {
                grad[3 * p + c] = k * (rend.data[3 * p + c] - orig.data[3 * p + c]);
            }
        }
    }
    return out;
}

MaskLossResult mask_loss(const std::vector<LabelMask>& true_masks, const std::vector<std::vector<double>>& pred_probs)
{
    const std::size_t views = true_masks.size();
    if (views == 0 || pred_probs.size() != views)
    {
        throw InvalidArgument("mask_loss: per-view inputs must be non-empty and equally many");
    }
    MaskLossResult out;
    out.d_probs.resize(views);
    for (std::size_t v = 0; v < views; ++v)
    {
        const auto& labels = true_masks[v].labels;
        const auto& probs = pred_probs[v];
        if (probs.size() != labels.size() * kNumClasses || labels.empty())
        {
            throw InvalidArgument("mask_loss: prediction size does not match the mask in view " + std::to_string(v));
        }
        const double norm = 1.0 / (static_cast<double>(labels.size()) * static_cast<double>(views));
        auto& grad = out.d_probs[v];
        grad.assign(probs.size(), 0.0);
        double sum = 0.0;
        for (std::size_t p = 0; p < labels.size(); ++p)
        {
            for (int c = 0; c < kNumClasses; ++c)
            {
                const double raw = probs[p * kNumClasses + c];
                // Barycentric blends may overshoot 1 by a few ulps.
                if (!(raw >= -kProbabilitySlack && raw <= 1.0 + kProbabilitySlack))
                {
                    throw InvalidArgument("mask_loss: probability outside [0, 1] in view " + std::to_string(v));
                }
                const double q = std::clamp(raw, kMaskEpsilon, 1.0 - kMaskEpsilon);
                const bool positive = labels[p] == c;
                sum += positive ? -std::log(q) : -std::log(1.0 - q);
                if (raw > kMaskEpsilon && raw < 1.0 - kMaskEpsilon)
                {
                    grad[p * kNumClasses + c] = norm * (positive ? -1.0 / q : 1.0 / (1.0 - q));
                }
            }
        }
        out.value += sum * norm;
    }
    return out;
}

Landmark2dLossResult landmark2d_loss(const std::vector<Eigen::Matrix2Xd>& gt, const std::vector<Eigen::Matrix2Xd>& pred,
                                     const std::vector<double>& weights)
{
    const std::size_t views = gt.size();
    if (views == 0 || pred.size() != views)
    {
        throw InvalidArgument("landmark2d_loss: per-view inputs must be non-empty and equally many");
    }
    const auto n = gt[0].cols();
    if (static_cast<Eigen::Index>(weights.size()) != n)
    {
        throw InvalidArgument("landmark2d_loss: one weight per landmark is required");
    }
    Landmark2dLossResult out;
    out.d_pred.resize(views);
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(views));
    for (std::size_t v = 0; v < views; ++v)
    {
        if (gt[v].cols() != n || pred[v].cols() != n)
        {
            throw InvalidArgument("landmark2d_loss: landmark counts differ in view " + std::to_string(v));
        }
        out.d_pred[v] = Eigen::Matrix2Xd::Zero(2, n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const Eigen::Vector2d d = pred[v].col(i) - gt[v].col(i);
            const double len = d.norm();
            out.value += norm * weights[i] * len;
            if (len > 0.0)
            {
                out.d_pred[v].col(i) = norm * weights[i] * d / len;
            }
        }
    }
    return out;
}

Landmark3dLossResult landmark3d_loss(const Eigen::Matrix3Xd& gt, const Eigen::Matrix3Xd& pred,
                                     const std::vector<int>& align_idx)
{
    if (gt.cols() != pred.cols() || gt.cols() == 0)
    {
        throw InvalidArgument("landmark3d_loss: landmark counts differ");
    }
    Eigen::Matrix3Xd src(3, align_idx.size()), dst(3, align_idx.size());
    for (std::size_t i = 0; i < align_idx.size(); ++i)
    {
        if (align_idx[i] < 0 || align_idx[i] >= gt.cols())
        {
            throw InvalidArgument("landmark3d_loss: alignment index out of range");
        }
        src.col(i) = pred.col(align_idx[i]);
        dst.col(i) = gt.col(align_idx[i]);
    }
    Landmark3dLossResult out;
    out.alignment = solve_similarity(src, dst);
    const double n = static_cast<double>(gt.cols());
    const Eigen::Matrix3Xd aligned = out.alignment.apply(pred);
    out.d_pred = Eigen::Matrix3Xd::Zero(3, pred.cols());
    const Eigen::Matrix3d back = out.alignment.scale * out.alignment.rotation.transpose();
    for (Eigen::Index i = 0; i < gt.cols(); ++i)
    {
        const Eigen::Vector3d d = aligned.col(i) - gt.col(i);
        const double len = d.norm();
        out.value += len / n;
        if (len > 0.0)
        {
            out.d_pred.col(i) = back * d / (len * n);
        }
    }
    return out;
}

Eigen::Matrix3Xd landmark3d_alignment_gradient(const Eigen::Matrix3Xd& gt, const Eigen::Matrix3Xd& pred,
                                               const std::vector<int>& align_idx, const Landmark3dLossResult& frozen)
{
    if (frozen.d_pred.cols() != pred.cols() || gt.cols() != pred.cols())
    {
        throw InvalidArgument("landmark3d_alignment_gradient: point counts differ");
    }
    // Perturb the solved alignment on the left, T(p) -> exp(sigma) R(omega) T(p) + tau, with
    // theta = (sigma, omega, tau) = 0 at the optimum. The implicit function theorem on the
    // alignment objective E(theta) = sum_j |f_j|^2 gives dtheta/dq_j = -H^-1 M_j.
    using Mat7 = Eigen::Matrix<double, 7, 7>;
    using Mat73 = Eigen::Matrix<double, 7, 3>;
    const auto jac = [](const Eigen::Vector3d& q) {
        Eigen::Matrix<double, 3, 7> j;
        j.col(0) = q;
        j.block<3, 3>(0, 1) = -skew(q);
        j.block<3, 3>(0, 4) = Eigen::Matrix3d::Identity();
        return j;
    };
    const Eigen::Matrix3Xd aligned = frozen.alignment.apply(pred);
    Mat7 h = Mat7::Zero();
    std::vector<Mat73> m(align_idx.size());
    for (std::size_t k = 0; k < align_idx.size(); ++k)
    {
        const Eigen::Vector3d q = aligned.col(align_idx[k]);
        const Eigen::Vector3d f = q - gt.col(align_idx[k]);
        const Eigen::Matrix<double, 3, 7> j = jac(q);
        h += j.transpose() * j;
        // Second-order terms of f: d2/dsigma2 = q, d2/dsigma domega = -[q]x, d2/domega2 from R = I + [w]x + [w]x^2 / 2.
        h(0, 0) += f.dot(q);
        const Eigen::RowVector3d so = -f.transpose() * skew(q);
        h.block<1, 3>(0, 1) += so;
        h.block<3, 1>(1, 0) += so.transpose();
        h.block<3, 3>(1, 1) += 0.5 * (f * q.transpose() + q * f.transpose()) - f.dot(q) * Eigen::Matrix3d::Identity();
        m[k] = j.transpose();
        m[k].row(0) += f.transpose();
        m[k].block<3, 3>(1, 0) -= skew(f);
    }
    // dL/dtheta through the aligned positions of every point.
    Eigen::Matrix<double, 7, 1> dl = Eigen::Matrix<double, 7, 1>::Zero();
    const double n = static_cast<double>(gt.cols());
    for (Eigen::Index i = 0; i < gt.cols(); ++i)
    {
        const Eigen::Vector3d d = aligned.col(i) - gt.col(i);
        const double len = d.norm();
        if (len > 0.0)
        {
            dl += jac(aligned.col(i)).transpose() * (d / (len * n));
        }
    }
    const Eigen::Matrix<double, 7, 1> w = h.ldlt().solve(dl);
    const Eigen::Matrix3d linear = frozen.alignment.scale * frozen.alignment.rotation;
    Eigen::Matrix3Xd out = Eigen::Matrix3Xd::Zero(3, pred.cols());
    for (std::size_t k = 0; k < align_idx.size(); ++k)
    {
        out.col(align_idx[k]) -= linear.transpose() * (m[k].transpose() * w);
    }
    return out;
}

RegularizationLossResult regularization_loss(const FaceParams& params, const LossWeights& w)
{
    RegularizationLossResult out;
    out.value = w.alpha * params.alpha.squaredNorm() + w.beta * params.beta.squaredNorm() +
                w.gamma * params.gamma.squaredNorm();
    out.d_alpha = 2.0 * w.alpha * params.alpha;
    out.d_beta = 2.0 * w.beta * params.beta;
    out.d_gamma = 2.0 * w.gamma * params.gamma;
    return out;
}

TotalLoss total_loss(const LossComponents& c, const LossWeights& w)
{
    TotalLoss t;
    t.coefficients.photo = w.photo;
    t.coefficients.mask = w.mask;
    t.coefficients.landmark2d = w.landmark * w.landmark2d;
    t.coefficients.landmark3d = w.use_3d ? w.landmark * w.landmark3d : 0.0;
    t.coefficients.reg = w.reg;
    // Neumaier summation, so unit components reproduce the decimal sum of the weights.
    double sum = 0.0, compensation = 0.0;
    for (const double term : {t.coefficients.photo * c.photo, t.coefficients.mask * c.mask,
                              t.coefficients.landmark2d * c.landmark2d, t.coefficients.landmark3d * c.landmark3d,
                              t.coefficients.reg * c.reg})
    {
        const double next = sum + term;
        compensation += std::abs(sum) >= std::abs(term) ? (sum - next) + term : (term - next) + sum;
        sum = next;
    }
    t.value = sum + compensation;
    return t;
}

} // namespace dfmvr
