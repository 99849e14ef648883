/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/image.hpp
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

#ifndef DFMVR_IMAGE_HPP
#define DFMVR_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dfmvr {

/// RGB image with values in [0, 1], row-major, channels interleaved.
struct Image
{
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int width, int height) : width(width), height(height), data(static_cast<std::size_t>(width) * height * 3, 0.0){};

    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Per-pixel face class ids (see FaceClass).
struct LabelMask
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    LabelMask() = default;
    LabelMask(int width, int height, std::uint8_t fill = 0)
        : width(width), height(height), labels(static_cast<std::size_t>(width) * height, fill){};

    std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Photometric weights; only 254, 128 and 32 occur.
struct WeightMap
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> weights;
};

/// Binary P6, 8 bits per channel; values are clamped and rounded.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

/// 8-bit quantisation used by write_ppm, exposed so in-memory pipelines can match files exactly.
Image quantize_8bit(const Image& image);

void write_pgm8(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels);
/// Binary P5 with maxval 65535 (big-endian samples, as Netpbm requires).
void write_pgm16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> pixels);

struct GrayImage
{
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> pixels;
};
GrayImage read_pgm(const std::filesystem::path& path);

/// Mask stored as an 8-bit PGM of raw class ids. Throws IoError on ids > 9.
void write_mask(const std::filesystem::path& path, const LabelMask& mask);
LabelMask read_mask(const std::filesystem::path& path);

} // namespace dfmvr

#endif // DFMVR_IMAGE_HPP
