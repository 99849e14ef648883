/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: tests/test_masks_losses.cpp
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
#include "test_util.hpp"

#include "dfmvr/errors.hpp"
#include "dfmvr/losses.hpp"
#include "dfmvr/mask.hpp"

#include "Eigen/Geometry"
#include "gtest/gtest.h"

#include <cmath>
#include <numbers>

using namespace dfmvr;
using dfmvr::test::numeric_gradient;
using dfmvr::test::relative_error;

namespace {

LabelMask random_mask(std::mt19937_64& rng, int w, int h, double fill)
{
    std::bernoulli_distribution on(fill);
    std::uniform_int_distribution<int> label(1, kNumClasses - 1);
    LabelMask m(w, h);
    for (auto& l : m.labels)
    {
        l = on(rng) ? static_cast<std::uint8_t>(label(rng)) : 0;
    }
    return m;
}

/// Every output pixel is the largest label within Euclidean distance radius.
LabelMask brute_force_dilate(const LabelMask& m, int radius)
{
    LabelMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
    {
        for (int x = 0; x < m.width; ++x)
        {
            std::uint8_t best = 0;
            for (int yy = 0; yy < m.height; ++yy)
            {
                for (int xx = 0; xx < m.width; ++xx)
                {
                    const int dx = xx - x, dy = yy - y;
                    if (dx * dx + dy * dy <= radius * radius)
                    {
                        best = std::max(best, m.at(xx, yy));
                    }
                }
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

} // namespace

TEST(OneHot, BackgroundMask)
{
    const LabelMask m(7, 5);
    const auto t = one_hot(m);
    for (std::size_t p = 0; p < m.labels.size(); ++p)
    {
        EXPECT_EQ(t[p * kNumClasses], 1);
        for (int c = 1; c < kNumClasses; ++c)
        {
            EXPECT_EQ(t[p * kNumClasses + c], 0);
        }
    }
}

TEST(OneHot, NosePixelAndChannelSums)
{
    LabelMask m(4, 4);
    m.at(2, 1) = 6;
    EXPECT_EQ(one_hot(m)[(1 * 4 + 2) * kNumClasses + 6], 1);

    std::mt19937_64 rng(1);
    const LabelMask r = random_mask(rng, 20, 13, 0.7);
    const auto t = one_hot(r);
    for (std::size_t p = 0; p < r.labels.size(); ++p)
    {
        int sum = 0;
        for (int c = 0; c < kNumClasses; ++c)
        {
            sum += t[p * kNumClasses + c];
        }
        EXPECT_EQ(sum, 1);
        EXPECT_EQ(t[p * kNumClasses + r.labels[p]], 1);
    }
    m.labels[0] = 10;
    EXPECT_THROW(one_hot(m), InvalidArgument);
}

TEST(Dilate, RadiusZeroIsIdentity)
{
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i)
    {
        const LabelMask m = random_mask(rng, 64, 64, 0.3);
        EXPECT_EQ(dilate(m, 0).labels, m.labels);
    }
}

TEST(Dilate, SinglePixelGrowsIntoDisk)
{
    LabelMask m(21, 21);
    m.at(10, 10) = 6;
    const LabelMask d = dilate(m, 3);
    int count = 0, oracle = 0;
    for (int y = 0; y < 21; ++y)
    {
        for (int x = 0; x < 21; ++x)
        {
            const bool in_disk = (x - 10) * (x - 10) + (y - 10) * (y - 10) <= 9;
            oracle += in_disk;
            count += d.at(x, y) == 6;
            EXPECT_EQ(d.at(x, y), in_disk ? 6 : 0);
        }
    }
    EXPECT_EQ(count, oracle);
    EXPECT_EQ(count, 29);
}

TEST(Dilate, MatchesBruteForceOnRandomMasks)
{
    std::mt19937_64 rng(3);
    for (const int radius : {1, 2, 5, 9})
    {
        const LabelMask m = random_mask(rng, 64, 64, 0.01);
        EXPECT_EQ(dilate(m, radius).labels, brute_force_dilate(m, radius).labels) << "radius " << radius;
    }
}

TEST(Dilate, FeatureBeatsSkin)
{
    LabelMask m(60, 40, 0);
    for (int y = 5; y < 35; ++y)
    {
        for (int x = 5; x < 55; ++x)
        {
            m.at(x, y) = x < 30 ? 1 : 6;
        }
    }
    const LabelMask d = dilate(m, 20);
    for (int y = 5; y < 35; ++y)
    {
        for (int x = 10; x < 30; ++x)
        {
            EXPECT_EQ(d.at(x, y), 6) << x << "," << y;
        }
    }
    EXPECT_EQ(d.at(5, 20), 1);
}

TEST(Dilate, NegativeRadiusThrows)
{
    EXPECT_THROW(dilate(LabelMask(3, 3), -1), InvalidArgument);
}

TEST(WeightMap, ClassLevels)
{
    LabelMask m(3, 1);
    m.labels = {6, 1, 0};
    EXPECT_EQ(to_weight_map(m).weights, (std::vector<std::uint8_t>{254, 128, 32}));
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i)
    {
        const WeightMap w = make_weight_map(random_mask(rng, 64, 64, 0.02), 4);
        for (const auto v : w.weights)
        {
            EXPECT_TRUE(v == 254 || v == 128 || v == 32);
        }
    }
}

namespace {

struct PhotoCase
{
    std::vector<Image> originals, rendered;
    std::vector<LabelMask> masks;
    std::vector<std::vector<std::uint8_t>> coverage;
    std::vector<WeightMap> weights;
};

PhotoCase single_view(int w, int h)
{
    PhotoCase c;
    c.originals = {Image(w, h)};
    c.rendered = {Image(w, h)};
    c.masks = {LabelMask(w, h, 1)};
    c.coverage = {std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 1)};
    c.weights = {WeightMap{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 128)}};
    return c;
}

double photo_value(const PhotoCase& c)
{
    return photo_loss(c.originals, c.masks, c.rendered, c.coverage, c.weights).value;
}

} // namespace

TEST(PhotoLoss, IdenticalImagesGiveZero)
{
    std::mt19937_64 rng(5);
    PhotoCase c = single_view(8, 8);
    for (auto& v : c.originals[0].data)
    {
        v = std::uniform_real_distribution<double>(0, 1)(rng);
    }
    c.rendered = c.originals;
    EXPECT_EQ(photo_value(c), 0.0);
}

TEST(PhotoLoss, SinglePixelWeightCancels)
{
    for (const std::uint8_t weight : {32, 128, 254})
    {
        PhotoCase c = single_view(3, 3);
        std::fill(c.coverage[0].begin(), c.coverage[0].end(), 0);
        c.coverage[0][4] = 1;
        c.weights[0].weights[4] = weight;
        c.originals[0].data[12] = 3.0;
        c.originals[0].data[13] = 4.0;
        EXPECT_DOUBLE_EQ(photo_value(c), 5.0);
    }
}

TEST(PhotoLoss, TwoPixelRatio)
{
    PhotoCase c = single_view(2, 1);
    c.weights[0].weights = {254, 32};
    c.originals[0].data[0] = 1.0;
    EXPECT_DOUBLE_EQ(photo_value(c), 254.0 / 286.0);
}

TEST(PhotoLoss, OnlyCoveredFacePixelsCount)
{
    PhotoCase c = single_view(3, 1);
    c.masks[0].labels = {1, 0, 1};
    c.coverage[0] = {1, 1, 0};
    c.originals[0].data = {1, 0, 0, 9, 9, 9, 9, 9, 9};
    EXPECT_DOUBLE_EQ(photo_value(c), 1.0);
    c.masks[0].labels = {0, 0, 1};
    EXPECT_THROW(photo_value(c), EmptyOverlapError);
}

TEST(PhotoLoss, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> lvl(0, 2);
    const std::uint8_t levels[3] = {32, 128, 254};
    for (int trial = 0; trial < 100; ++trial)
    {
        const int views = 1 + trial % 3;
        PhotoCase c;
        for (int v = 0; v < views; ++v)
        {
            PhotoCase one = single_view(4, 3);
            for (std::size_t i = 0; i < one.originals[0].data.size(); ++i)
            {
                one.originals[0].data[i] = u(rng);
                one.rendered[0].data[i] = u(rng);
            }
            for (std::size_t p = 0; p < 12; ++p)
            {
                one.coverage[0][p] = u(rng) < 0.8;
                one.masks[0].labels[p] = u(rng) < 0.8 ? 1 : 0;
                one.weights[0].weights[p] = levels[lvl(rng)];
            }
            one.coverage[0][0] = 1;
            one.masks[0].labels[0] = 3;
            c.originals.push_back(one.originals[0]);
            c.rendered.push_back(one.rendered[0]);
            c.masks.push_back(one.masks[0]);
            c.coverage.push_back(one.coverage[0]);
            c.weights.push_back(one.weights[0]);
        }
        const PhotoLossResult r = photo_loss(c.originals, c.masks, c.rendered, c.coverage, c.weights);
        Eigen::VectorXd x(views * 36), an(views * 36);
        for (int v = 0; v < views; ++v)
        {
            for (int i = 0; i < 36; ++i)
            {
                x(v * 36 + i) = c.rendered[v].data[i];
                an(v * 36 + i) = r.d_rendered[v][i];
            }
        }
        auto f = [&](const Eigen::VectorXd& q) {
            PhotoCase d = c;
            for (int v = 0; v < views; ++v)
            {
                for (int i = 0; i < 36; ++i)
                {
                    d.rendered[v].data[i] = q(v * 36 + i);
                }
            }
            return photo_value(d);
        };
        EXPECT_LT(relative_error(numeric_gradient(f, x, 1e-6), an), 1e-5) << "trial " << trial;
    }
}

namespace {

double per_pixel_bce(const std::vector<double>& probs, int label)
{
    double s = 0.0;
    for (int c = 0; c < kNumClasses; ++c)
    {
        const double q = std::clamp(probs[c], kMaskEpsilon, 1.0 - kMaskEpsilon);
        s += c == label ? -std::log(q) : -std::log(1.0 - q);
    }
    return s;
}

} // namespace

TEST(MaskLoss, PerfectPredictionIsNearZero)
{
    std::mt19937_64 rng(7);
    const LabelMask m = random_mask(rng, 9, 9, 0.6);
    std::vector<double> probs(m.labels.size() * kNumClasses, 0.0);
    for (std::size_t p = 0; p < m.labels.size(); ++p)
    {
        probs[p * kNumClasses + m.labels[p]] = 1.0;
    }
    const double eps = kMaskEpsilon;
    EXPECT_LE(mask_loss({m}, {probs}).value, 10 * eps * (1 + std::abs(std::log(eps))));
}

TEST(MaskLoss, UniformPrediction)
{
    std::mt19937_64 rng(8);
    const LabelMask m = random_mask(rng, 5, 4, 0.5);
    const std::vector<double> probs(m.labels.size() * kNumClasses, 0.1);
    const double expected = -(std::log(0.1) + 9 * std::log(0.9));
    EXPECT_NEAR(mask_loss({m}, {probs}).value, expected, 1e-12);
    EXPECT_NEAR(expected, 3.2508, 5e-5);
}

TEST(MaskLoss, MatchesDirectFormulaAcrossViews)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<LabelMask> masks;
    std::vector<std::vector<double>> probs;
    double oracle = 0.0;
    for (int v = 0; v < 3; ++v)
    {
        masks.push_back(random_mask(rng, 6, 5, 0.5));
        probs.emplace_back(masks.back().labels.size() * kNumClasses);
        double view_sum = 0.0;
        for (std::size_t p = 0; p < masks.back().labels.size(); ++p)
        {
            std::vector<double> px(kNumClasses);
            for (auto& q : px)
            {
                q = u(rng);
            }
            std::copy(px.begin(), px.end(), probs.back().begin() + p * kNumClasses);
            view_sum += per_pixel_bce(px, masks.back().labels[p]);
        }
        oracle += view_sum / (30.0 * 3.0);
    }
    EXPECT_NEAR(mask_loss(masks, probs).value, oracle, 1e-12);
}

TEST(MaskLoss, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const LabelMask m = random_mask(rng, 3, 2, 0.5);
        Eigen::VectorXd x(m.labels.size() * kNumClasses);
        for (auto& q : x)
        {
            q = u(rng);
        }
        auto f = [&](const Eigen::VectorXd& q) {
            return mask_loss({m}, {std::vector<double>(q.data(), q.data() + q.size())}).value;
        };
        const auto r = mask_loss({m}, {std::vector<double>(x.data(), x.data() + x.size())});
        const Eigen::VectorXd an = Eigen::Map<const Eigen::VectorXd>(r.d_probs[0].data(), x.size());
        worst = std::max(worst, relative_error(numeric_gradient(f, x, 1e-6), an));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(MaskLoss, ClampedCoordinatesHaveZeroGradient)
{
    const LabelMask m(1, 1, 2);
    std::vector<double> probs(kNumClasses, 0.0);
    probs[2] = 1.0;
    const auto r = mask_loss({m}, {probs});
    for (const double g : r.d_probs[0])
    {
        EXPECT_EQ(g, 0.0);
    }
    probs[3] = 1.5;
    EXPECT_THROW(mask_loss({m}, {probs}), InvalidArgument);
}

namespace {

std::vector<Eigen::Matrix2Xd> random_landmarks(std::mt19937_64& rng, int views)
{
    std::vector<Eigen::Matrix2Xd> out;
    for (int v = 0; v < views; ++v)
    {
        out.push_back(test::random_matrix(rng, 2, kNumLandmarks2d, 0, 128));
    }
    return out;
}

} // namespace

TEST(Landmark2dLoss, EqualIsZero)
{
    std::mt19937_64 rng(11);
    const auto gt = random_landmarks(rng, 3);
    EXPECT_EQ(landmark2d_loss(gt, gt, default_landmark_weights()).value, 0.0);
}

TEST(Landmark2dLoss, NoseOffset)
{
    std::mt19937_64 rng(12);
    const auto gt = random_landmarks(rng, 1);
    auto pred = gt;
    pred[0].col(30) += Eigen::Vector2d(3, 4);
    EXPECT_NEAR(landmark2d_loss(gt, pred, default_landmark_weights()).value, 20.0 * 5.0 / 68.0, 1e-12);
}

TEST(Landmark2dLoss, MatchesDoubleLoopAndFiniteDifferences)
{
    std::mt19937_64 rng(13);
    const auto w = default_landmark_weights();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const int views = 1 + trial % 3;
        const auto gt = random_landmarks(rng, views);
        auto pred = gt;
        for (auto& p : pred)
        {
            p += test::random_matrix(rng, 2, kNumLandmarks2d, -5, 5);
        }
        double oracle = 0.0;
        for (int v = 0; v < views; ++v)
        {
            for (int n = 0; n < kNumLandmarks2d; ++n)
            {
                oracle += w[n] * std::hypot(pred[v](0, n) - gt[v](0, n), pred[v](1, n) - gt[v](1, n));
            }
        }
        oracle /= 68.0 * views;
        const auto r = landmark2d_loss(gt, pred, w);
        EXPECT_NEAR(r.value, oracle, 1e-12 * oracle);

        Eigen::VectorXd x(views * 136), an(views * 136);
        for (int v = 0; v < views; ++v)
        {
            x.segment(v * 136, 136) = pred[v].reshaped();
            an.segment(v * 136, 136) = r.d_pred[v].reshaped();
        }
        auto f = [&](const Eigen::VectorXd& q) {
            auto p = pred;
            for (int v = 0; v < views; ++v)
            {
                p[v] = q.segment(v * 136, 136).reshaped(2, kNumLandmarks2d);
            }
            return landmark2d_loss(gt, p, w).value;
        };
        worst = std::max(worst, relative_error(numeric_gradient(f, x, 1e-6), an));
    }
    EXPECT_LT(worst, 1e-4);
}

namespace {

const std::vector<int> kAlign = {36, 39, 42, 45, 30, 48, 54};

Eigen::Matrix3Xd random_cloud(std::mt19937_64& rng)
{
    return test::random_matrix(rng, 3, kNumLandmarks3d, -60, 60);
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    const Eigen::Vector3d axis = test::random_vector(rng, 3).normalized();
    return Eigen::AngleAxisd(std::uniform_real_distribution<double>(-3, 3)(rng), axis).toRotationMatrix();
}

} // namespace

TEST(Landmark3dLoss, EqualIsZero)
{
    std::mt19937_64 rng(14);
    const Eigen::Matrix3Xd gt = random_cloud(rng);
    EXPECT_LT(landmark3d_loss(gt, gt, kAlign).value, 1e-12);
}

TEST(Landmark3dLoss, SimilarityIsAbsorbed)
{
    std::mt19937_64 rng(15);
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Matrix3Xd gt = random_cloud(rng);
        SimilarityTransform t;
        t.scale = std::uniform_real_distribution<double>(0.5, 2)(rng);
        t.rotation = random_rotation(rng);
        t.translation = test::random_vector(rng, 3, -50, 50);
        EXPECT_LT(landmark3d_loss(gt, t.apply(gt), kAlign).value, 1e-9);
    }
}

TEST(Landmark3dLoss, MatchesIndependentUmeyamaOracle)
{
    std::mt19937_64 rng(16);
    for (int i = 0; i < 20; ++i)
    {
        const Eigen::Matrix3Xd gt = random_cloud(rng);
        const Eigen::Matrix3Xd pred = gt + test::random_matrix(rng, 3, kNumLandmarks3d, -3, 3);
        Eigen::Matrix3Xd src(3, 7), dst(3, 7);
        for (int k = 0; k < 7; ++k)
        {
            src.col(k) = pred.col(kAlign[k]);
            dst.col(k) = gt.col(kAlign[k]);
        }
        const Eigen::Matrix4d u = Eigen::umeyama(src, dst, true);
        const Eigen::Matrix3Xd aligned = (u.topLeftCorner<3, 3>() * pred).colwise() + u.topRightCorner<3, 1>();
        const double oracle = (aligned - gt).colwise().norm().mean();
        EXPECT_NEAR(landmark3d_loss(gt, pred, kAlign).value, oracle, 1e-9);
    }
}

TEST(Landmark3dLoss, StopGradientMatchesFrozenAlignmentDifferences)
{
    std::mt19937_64 rng(17);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const Eigen::Matrix3Xd gt = random_cloud(rng);
        const Eigen::Matrix3Xd pred = gt + test::random_matrix(rng, 3, kNumLandmarks3d, -3, 3);
        const auto r = landmark3d_loss(gt, pred, kAlign);
        auto frozen = [&](const Eigen::VectorXd& q) {
            return (r.alignment.apply(Eigen::Matrix3Xd(q.reshaped(3, kNumLandmarks3d))) - gt).colwise().norm().mean();
        };
        const Eigen::VectorXd x = pred.reshaped();
        worst = std::max(worst, relative_error(numeric_gradient(frozen, x, 1e-6), r.d_pred.reshaped()));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Landmark3dLoss, AlignmentTermCompletesTheGradient)
{
    std::mt19937_64 rng(18);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const Eigen::Matrix3Xd gt = random_cloud(rng);
        const Eigen::Matrix3Xd pred = gt + test::random_matrix(rng, 3, kNumLandmarks3d, -3, 3);
        const auto r = landmark3d_loss(gt, pred, kAlign);
        const Eigen::Matrix3Xd extra = landmark3d_alignment_gradient(gt, pred, kAlign, r);
        const Eigen::Matrix3Xd g = r.d_pred + extra;

        // Full derivative with the alignment re-solved at every probe.
        auto full = [&](const Eigen::VectorXd& q) {
            return landmark3d_loss(gt, q.reshaped(3, kNumLandmarks3d), kAlign).value;
        };
        const Eigen::VectorXd exact = numeric_gradient(full, pred.reshaped(), 1e-6);
        worst = std::max(worst, relative_error(exact, g.reshaped()));

        // Only the alignment subset feeds the similarity solve.
        for (Eigen::Index i = 0; i < pred.cols(); ++i)
        {
            if (std::find(kAlign.begin(), kAlign.end(), i) == kAlign.end())
            {
                EXPECT_EQ(extra.col(i).norm(), 0.0);
            }
        }
        // The loss is blind to similarity motions of pred, so the full gradient is too.
        const Eigen::Vector3d c = pred.rowwise().mean();
        for (int k = 0; k < 7; ++k)
        {
            Eigen::Matrix3Xd motion(3, pred.cols());
            for (Eigen::Index i = 0; i < pred.cols(); ++i)
            {
                const Eigen::Vector3d p = pred.col(i) - c;
                motion.col(i) = k < 3 ? Eigen::Vector3d::Unit(k) : k < 6 ? Eigen::Vector3d::Unit(k - 3).cross(p) : p;
            }
            EXPECT_LT(std::abs((g.array() * motion.array()).sum()) / (motion.norm() * g.norm()), 1e-9);
        }
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(RegularizationLoss, PublishedWeights)
{
    FaceParams p;
    p.alpha = Eigen::VectorXd::Zero(kIdentityDims);
    p.beta = Eigen::VectorXd::Zero(kExpressionDims);
    p.gamma = Eigen::VectorXd::Zero(kTextureDims);
    const LossWeights w;
    EXPECT_EQ(regularization_loss(p, w).value, 0.0);
    p.alpha(0) = 1.0;
    EXPECT_DOUBLE_EQ(regularization_loss(p, w).value, 1.0);
    p.alpha(0) = 0.0;
    p.beta(0) = 1.0;
    EXPECT_DOUBLE_EQ(regularization_loss(p, w).value, 0.8);
    p.beta(0) = 0.0;
    p.gamma(0) = 1.0;
    EXPECT_DOUBLE_EQ(regularization_loss(p, w).value, 0.017);
}

TEST(RegularizationLoss, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(19);
    const LossWeights w;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        FaceParams p;
        p.alpha = test::random_vector(rng, kIdentityDims, -3, 3);
        p.beta = test::random_vector(rng, kExpressionDims, -3, 3);
        p.gamma = test::random_vector(rng, kTextureDims, -3, 3);
        const auto r = regularization_loss(p, w);
        Eigen::VectorXd x(224), an(224);
        x << p.alpha, p.beta, p.gamma;
        an << r.d_alpha, r.d_beta, r.d_gamma;
        auto f = [&](const Eigen::VectorXd& q) {
            FaceParams t;
            t.alpha = q.head(80);
            t.beta = q.segment(80, 80);
            t.gamma = q.tail(64);
            return regularization_loss(t, w).value;
        };
        worst = std::max(worst, relative_error(numeric_gradient(f, x, 1e-5), an));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(TotalLoss, PublishedWeights)
{
    const LossWeights w;
    EXPECT_EQ(total_loss(LossComponents{}, w).value, 0.0);
    EXPECT_EQ(total_loss(LossComponents{1, 0, 0, 0, 0}, w).value, 4.0);
    EXPECT_EQ(total_loss(LossComponents{0, 0, 1, 0, 0}, w).value, 0.02);
    EXPECT_EQ(total_loss(LossComponents{1, 1, 1, 1, 1}, w).value, 8.0203);
}

TEST(TotalLoss, DisablingThreeDZeroesItsCoefficient)
{
    LossWeights w;
    w.use_3d = false;
    const TotalLoss t = total_loss(LossComponents{0, 0, 0, 5, 0}, w);
    EXPECT_EQ(t.value, 0.0);
    EXPECT_EQ(t.coefficients.landmark3d, 0.0);
}

TEST(LossWeights, Validation)
{
    LossWeights w;
    EXPECT_NO_THROW(validate(w));
    w.photo = -1;
    EXPECT_THROW(validate(w), InvalidArgument);
    w = LossWeights{};
    w.landmark_pointwise.pop_back();
    EXPECT_THROW(validate(w), InvalidArgument);
}
