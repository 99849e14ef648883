/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/fusion.hpp
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

#ifndef DFMVR_FUSION_HPP
#define DFMVR_FUSION_HPP

#include "Eigen/Core"

#include <cstdint>
#include <random>
#include <vector>

namespace dfmvr {

/**
 * H x W x C activations, channels fastest (the pixel-major layout also reads as
 * a column-major C x (H W) matrix).
 */
class FeatureMap
{
public:
    FeatureMap() = default;
    /// Zero-filled map.
    FeatureMap(int height, int width, int channels);
    /// Takes ownership of data; throws InvalidArgument on size mismatch or non-finite values.
    FeatureMap(int height, int width, int channels, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }

    double& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c]; }
    double at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Eigen::Map<Eigen::MatrixXd> matrix() { return {data_.data(), channels_, static_cast<Eigen::Index>(height_) * width_}; }
    Eigen::Map<const Eigen::MatrixXd> matrix() const
    {
        return {data_.data(), channels_, static_cast<Eigen::Index>(height_) * width_};
    }

    bool all_finite() const;

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

bool operator==(const FeatureMap& a, const FeatureMap& b);

/// Uniform doubles in [-bound, bound] from a seeded 64-bit Mersenne Twister, rounded to float precision.
class WeightSampler
{
public:
    explicit WeightSampler(std::uint64_t seed);
    double uniform(double bound);
    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, double bound);
    Eigen::VectorXd vector(Eigen::Index n, double bound);

private:
    std::mt19937_64 engine_;
};

/**
 * Involution with a two-layer kernel generator.
 *
 * At every pixel the generator maps the C input features to K*K*G kernel values
 * through w1 (hidden x C) + b1, a rectifier, and w2 (K*K*G x hidden) + b2. Value
 * g*K*K + u*K + v is the tap at row offset u - K/2, column offset v - K/2 for
 * channel group g, where channel c belongs to group floor(c * G / C).
 */
struct InvolutionSpec
{
    int channels = 0;
    int kernel_size = 3;
    int groups = 1;
    int reduction = 4;
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    int hidden() const { return channels / reduction > 1 ? channels / reduction : 1; }
    int kernel_values() const { return kernel_size * kernel_size * groups; }

    /// Generator weights drawn uniformly in +-1/sqrt(fan_in).
    static InvolutionSpec random(int channels, int kernel_size, int groups, int reduction, std::uint64_t seed);
};

/// Throws InvalidArgument unless K is odd and positive, C is divisible by G, r >= 1 and the weights fit.
void validate(const InvolutionSpec& spec);

FeatureMap involution_forward(const FeatureMap& x, const InvolutionSpec& spec);

struct InvolutionGradients
{
    FeatureMap d_x;
    Eigen::MatrixXd d_w1;
    Eigen::VectorXd d_b1;
    Eigen::MatrixXd d_w2;
    Eigen::VectorXd d_b2;
};

/// Gradients of sum(upstream * involution_forward(x, spec)), including the kernel-generation path.
InvolutionGradients involution_backward(const FeatureMap& x, const InvolutionSpec& spec, const FeatureMap& upstream);

/**
 * Additive attention gate with 1x1 maps:
 * att = sigmoid(psi . relu(w_g gate + b_g + w_x skip + b_x) + b_psi), output = skip * att.
 */
struct AttentionGateWeights
{
    Eigen::MatrixXd w_g; // inter x gate channels
    Eigen::VectorXd b_g;
    Eigen::MatrixXd w_x; // inter x skip channels
    Eigen::VectorXd b_x;
    Eigen::VectorXd psi;
    double b_psi = 0.0;

    int inter_channels() const { return static_cast<int>(psi.size()); }

    static AttentionGateWeights random(int skip_channels, int gate_channels, int inter_channels, WeightSampler& rng);
};

struct AttentionGateOutput
{
    FeatureMap output;
    std::vector<double> attention; // H*W coefficients
};

AttentionGateOutput attention_gate(const FeatureMap& skip, const FeatureMap& gate, const AttentionGateWeights& w);

struct AttentionGateGradients
{
    FeatureMap d_skip;
    FeatureMap d_gate;
    Eigen::MatrixXd d_w_g;
    Eigen::VectorXd d_b_g;
    Eigen::MatrixXd d_w_x;
    Eigen::VectorXd d_b_x;
    Eigen::VectorXd d_psi;
    double d_b_psi = 0.0;
};

/// Gradients of sum(upstream * attention_gate(skip, gate, w).output).
AttentionGateGradients attention_gate_backward(const FeatureMap& skip, const FeatureMap& gate,
                                               const AttentionGateWeights& w, const FeatureMap& upstream);

} // namespace dfmvr

#endif // DFMVR_FUSION_HPP
