/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/image.cpp
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
#include "dfmvr/image.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/morphable_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace dfmvr {

namespace {

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in)
{
    std::string token;
    int c = in.get();
    while (c != EOF)
    {
        if (c == '#')
        {
            while (c != EOF && c != '\n')
            {
                c = in.get();
            }
        } else if (std::isspace(c))
        {
            if (!token.empty())
            {
                return token;
            }
        } else
        {
            token.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return token;
}

struct NetpbmHeader
{
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

NetpbmHeader read_header(std::istream& in, const std::filesystem::path& path)
{
    NetpbmHeader h;
    h.magic = header_token(in);
    try
    {
        h.width = std::stoi(header_token(in));
        h.height = std::stoi(header_token(in));
        h.maxval = std::stoi(header_token(in));
    } catch (const std::exception&)
    {
        throw IoError("malformed Netpbm header in " + path.string());
    }
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    {
        throw IoError("invalid Netpbm dimensions in " + path.string());
    }
    return h;
}

} // namespace

Image quantize_8bit(const Image& image)
{
    Image out = image;
    for (auto& v : out.data)
    {
        v = to_byte(v) / 255.0;
    }
    return out;
}

void write_ppm(const std::filesystem::path& path, const Image& image)
{
    auto out = open_out(path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<char> bytes(image.data.size());
    std::transform(image.data.begin(), image.data.end(), bytes.begin(), [](double v) { return static_cast<char>(to_byte(v)); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
    {
        throw IoError("failed writing " + path.string());
    }
}

Image read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open " + path.string());
    }
    const auto h = read_header(in, path);
    if (h.magic != "P6" || h.maxval != 255)
    {
        throw IoError(path.string() + " is not an 8-bit binary PPM");
    }
    Image img(h.width, h.height);
    std::vector<unsigned char> bytes(img.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    {
        throw IoError("truncated pixel data in " + path.string());
    }
    std::transform(bytes.begin(), bytes.end(), img.data.begin(), [](unsigned char b) { return b / 255.0; });
    return img;
}

void write_pgm8(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels)
{
    auto out = open_out(path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out)
    {
        throw IoError("failed writing " + path.string());
    }
}

void write_pgm16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> pixels)
{
    auto out = open_out(path);
    out << "P5\n" << width << " " << height << "\n65535\n";
    std::vector<char> bytes;
    bytes.reserve(pixels.size() * 2);
    for (const auto p : pixels)
    {
        bytes.push_back(static_cast<char>(p >> 8));
        bytes.push_back(static_cast<char>(p & 0xff));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
    {
        throw IoError("failed writing " + path.string());
    }
}

GrayImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open " + path.string());
    }
    const auto h = read_header(in, path);
    if (h.magic != "P5")
    {
        throw IoError(path.string() + " is not a binary PGM");
    }
    GrayImage g{h.width, h.height, h.maxval, {}};
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t sample = h.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> bytes(n * sample);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    {
        throw IoError("truncated pixel data in " + path.string());
    }
    g.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        g.pixels[i] = sample == 2 ? static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]) : bytes[i];
    }
    return g;
}

void write_mask(const std::filesystem::path& path, const LabelMask& mask)
{
    for (const std::uint8_t l : mask.labels)
    {
        if (l >= kNumClasses)
        {
            throw IoError(path.string() + ": label " + std::to_string(l) + " is not a face class");
        }
    }
    write_pgm8(path, mask.width, mask.height, mask.labels);
}

LabelMask read_mask(const std::filesystem::path& path)
{
    const auto g = read_pgm(path);
    if (g.maxval > 255)
    {
        throw IoError(path.string() + ": masks must be 8-bit");
    }
    LabelMask m(g.width, g.height);
    for (std::size_t i = 0; i < g.pixels.size(); ++i)
    {
        if (g.pixels[i] >= kNumClasses)
        {
            throw IoError(path.string() + ": label " + std::to_string(g.pixels[i]) + " is not a face class");
        }
        m.labels[i] = static_cast<std::uint8_t>(g.pixels[i]);
    }
    return m;
}

} // namespace dfmvr
