/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/mulen_unet.hpp
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

#ifndef DFMVR_MULEN_UNET_HPP
#define DFMVR_MULEN_UNET_HPP

#include "dfmvr/fusion.hpp"

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dfmvr {

inline constexpr int kUnetDepth = 4;
inline constexpr int kUnetViews = 3;

/// Convolution with per-tap out x in matrices; tap index ky * k + kx.
struct ConvWeights
{
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 0;
    std::vector<Eigen::MatrixXd> taps;
    Eigen::VectorXd bias;

    static ConvWeights zeros(int in_channels, int out_channels, int kernel_size);
};

struct DoubleConvWeights
{
    ConvWeights first;
    ConvWeights second;
};

struct EncoderWeights
{
    std::array<DoubleConvWeights, kUnetDepth> levels;
    DoubleConvWeights bottom;
};

struct DecoderLevelWeights
{
    ConvWeights up; // 2x2 stride-2 transposed convolution
    std::array<AttentionGateWeights, kUnetViews> gates;
    DoubleConvWeights merge;
};

/**
 * Multi-encoder, shared-decoder U-Net.
 *
 * Each view has its own encoder: at level l a double 3x3 convolution to
 * widths[l] channels followed by 2x2 max pooling, and a bottom double
 * convolution keeping widths[3] channels. The three bottom features are
 * concatenated into the fused map. Decoder level l (run from 3 down to 0)
 * upsamples with a transposed convolution to widths[l], gates each encoder's
 * level-l features with the upsampled map, concatenates
 * [up, gated A, gated B, gated C] and applies a double convolution. A final
 * 1x1 convolution produces out_channels. Convolutions are followed by a
 * rectifier except the head.
 */
struct MulEnUnetWeights
{
    int in_channels = 4;
    int out_channels = 64;
    std::array<int, kUnetDepth> widths = {16, 32, 64, 128};
    std::array<EncoderWeights, kUnetViews> encoders;
    std::array<DecoderLevelWeights, kUnetDepth> decoder; // indexed by level
    ConvWeights head;

    /// Correctly shaped, zero-valued weights.
    static MulEnUnetWeights zeros(int in_channels = 4, int out_channels = 64,
                                  std::array<int, kUnetDepth> widths = {16, 32, 64, 128});
    /// Uniform in +-1/sqrt(fan_in) per tensor, drawn in serialization order.
    static MulEnUnetWeights random(std::uint64_t seed, int in_channels = 4, int out_channels = 64,
                                   std::array<int, kUnetDepth> widths = {16, 32, 64, 128});

    std::size_t parameter_count() const;
};

bool operator==(const MulEnUnetWeights& a, const MulEnUnetWeights& b);

/// All intermediate results of a forward pass.
struct MulEnUnetTrace
{
    /// Per view: the level 0..3 encoder features (before pooling) followed by the bottom features.
    std::array<std::vector<FeatureMap>, kUnetViews> encoder_features;
    FeatureMap fused;
    FeatureMap output;
};

/**
 * Forward pass over exactly three equally sized views with in_channels channels
 * (RGB plus mask). Throws InvalidArgument if the sizes differ or are not
 * divisible by 2^4.
 */
MulEnUnetTrace mulen_unet_trace(std::span<const FeatureMap> views, const MulEnUnetWeights& weights);

FeatureMap mulen_unet_forward(std::span<const FeatureMap> views, const MulEnUnetWeights& weights);

/// Building blocks, exposed for testing.
FeatureMap conv2d(const FeatureMap& x, const ConvWeights& w);
FeatureMap conv_transpose2x2(const FeatureMap& x, const ConvWeights& w);
FeatureMap max_pool2x2(const FeatureMap& x);
FeatureMap concat_channels(std::span<const FeatureMap> maps);

/**
 * FUSW container: "FUSW", version, in/out channels, depth, widths, parameter
 * count, then every parameter as little-endian f32 in the fixed traversal order.
 */
std::vector<std::uint8_t> serialize_weights(const MulEnUnetWeights& weights);
MulEnUnetWeights deserialize_weights(std::span<const std::uint8_t> bytes);
void save_weights(const MulEnUnetWeights& weights, const std::filesystem::path& path);
MulEnUnetWeights load_weights(const std::filesystem::path& path);

} // namespace dfmvr

#endif // DFMVR_MULEN_UNET_HPP
