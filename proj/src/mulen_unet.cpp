/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/mulen_unet.cpp
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
#include "dfmvr/mulen_unet.hpp"
#include "dfmvr/binary_io.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dfmvr {

ConvWeights ConvWeights::zeros(int in_channels, int out_channels, int kernel_size)
{
    ConvWeights c;
    c.in_channels = in_channels;
    c.out_channels = out_channels;
    c.kernel_size = kernel_size;
    c.taps.assign(static_cast<std::size_t>(kernel_size) * kernel_size, Eigen::MatrixXd::Zero(out_channels, in_channels));
    c.bias = Eigen::VectorXd::Zero(out_channels);
    return c;
}

namespace {

DoubleConvWeights double_conv(int in, int out)
{
    return {ConvWeights::zeros(in, out, 3), ConvWeights::zeros(out, out, 3)};
}

AttentionGateWeights zero_gate(int channels)
{
    const int inter = std::max(1, channels / 2);
    AttentionGateWeights g;
    g.w_g = Eigen::MatrixXd::Zero(inter, channels);
    g.b_g = Eigen::VectorXd::Zero(inter);
    g.w_x = Eigen::MatrixXd::Zero(inter, channels);
    g.b_x = Eigen::VectorXd::Zero(inter);
    g.psi = Eigen::VectorXd::Zero(inter);
    g.b_psi = 0.0;
    return g;
}

// Calls f(data, count, fan_in) for every parameter tensor in serialization order.
template <class Weights, class F>
void visit_conv(Weights& c, F&& f)
{
    const int fan_in = c.in_channels * c.kernel_size * c.kernel_size;
    for (auto& t : c.taps)
    {
        f(t.data(), static_cast<std::size_t>(t.size()), fan_in);
    }
    f(c.bias.data(), static_cast<std::size_t>(c.bias.size()), fan_in);
}

template <class Weights, class F>
void visit_double(Weights& d, F&& f)
{
    visit_conv(d.first, f);
    visit_conv(d.second, f);
}

template <class Weights, class F>
void visit_gate(Weights& g, F&& f)
{
    const int fan_g = static_cast<int>(g.w_g.cols()), fan_x = static_cast<int>(g.w_x.cols());
    const int fan_psi = static_cast<int>(g.psi.size());
    f(g.w_g.data(), static_cast<std::size_t>(g.w_g.size()), fan_g);
    f(g.b_g.data(), static_cast<std::size_t>(g.b_g.size()), fan_g);
    f(g.w_x.data(), static_cast<std::size_t>(g.w_x.size()), fan_x);
    f(g.b_x.data(), static_cast<std::size_t>(g.b_x.size()), fan_x);
    f(g.psi.data(), static_cast<std::size_t>(g.psi.size()), fan_psi);
    f(&g.b_psi, std::size_t{1}, fan_psi);
}

template <class Weights, class F>
void visit_all(Weights& w, F&& f)
{
    for (auto& e : w.encoders)
    {
        for (auto& l : e.levels)
        {
            visit_double(l, f);
        }
        visit_double(e.bottom, f);
    }
    for (int l = kUnetDepth - 1; l >= 0; --l)
    {
        auto& d = w.decoder[l];
        visit_conv(d.up, f);
        for (auto& g : d.gates)
        {
            visit_gate(g, f);
        }
        visit_double(d.merge, f);
    }
    visit_conv(w.head, f);
}

} // namespace

MulEnUnetWeights MulEnUnetWeights::zeros(int in_channels, int out_channels, std::array<int, kUnetDepth> widths)
{
    if (in_channels <= 0 || out_channels <= 0 || std::any_of(widths.begin(), widths.end(), [](int v) { return v <= 0; }))
    {
        throw InvalidArgument("MulEn-Unet channel counts must be positive");
    }
    MulEnUnetWeights w;
    w.in_channels = in_channels;
    w.out_channels = out_channels;
    w.widths = widths;
    for (auto& e : w.encoders)
    {
        int in = in_channels;
        for (int l = 0; l < kUnetDepth; ++l)
        {
            e.levels[l] = double_conv(in, widths[l]);
            in = widths[l];
        }
        e.bottom = double_conv(in, in);
    }
    int below = kUnetViews * widths[kUnetDepth - 1];
    for (int l = kUnetDepth - 1; l >= 0; --l)
    {
        auto& d = w.decoder[l];
        d.up = ConvWeights::zeros(below, widths[l], 2);
        for (auto& g : d.gates)
        {
            g = zero_gate(widths[l]);
        }
        d.merge = double_conv((1 + kUnetViews) * widths[l], widths[l]);
        below = widths[l];
    }
    w.head = ConvWeights::zeros(widths[0], out_channels, 1);
    return w;
}

MulEnUnetWeights MulEnUnetWeights::random(std::uint64_t seed, int in_channels, int out_channels,
                                          std::array<int, kUnetDepth> widths)
{
    MulEnUnetWeights w = zeros(in_channels, out_channels, widths);
    WeightSampler rng(seed);
    visit_all(w, [&rng](double* data, std::size_t n, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
        for (std::size_t i = 0; i < n; ++i)
        {
            data[i] = rng.uniform(bound);
        }
    });
    return w;
}

std::size_t MulEnUnetWeights::parameter_count() const
{
    std::size_t n = 0;
    visit_all(*this, [&n](const double*, std::size_t count, int) { n += count; });
    return n;
}

bool operator==(const MulEnUnetWeights& a, const MulEnUnetWeights& b)
{
    if (a.in_channels != b.in_channels || a.out_channels != b.out_channels || a.widths != b.widths)
    {
        return false;
    }
    std::vector<double> va, vb;
    visit_all(a, [&va](const double* d, std::size_t n, int) { va.insert(va.end(), d, d + n); });
    visit_all(b, [&vb](const double* d, std::size_t n, int) { vb.insert(vb.end(), d, d + n); });
    return va == vb;
}

FeatureMap conv2d(const FeatureMap& x, const ConvWeights& w)
{
    if (x.channels() != w.in_channels || w.kernel_size % 2 == 0)
    {
        throw InvalidArgument("conv2d: expected " + std::to_string(w.in_channels) + " input channels with an odd kernel");
    }
    const int h = x.height(), wd = x.width(), half = w.kernel_size / 2;
    const Eigen::Index npix = static_cast<Eigen::Index>(h) * wd;
    FeatureMap out(h, wd, w.out_channels);
    auto o = out.matrix();
    o.colwise() = w.bias;
    Eigen::MatrixXd shifted(w.in_channels, npix);
    const auto src = x.matrix();
    for (int ky = 0; ky < w.kernel_size; ++ky)
    {
        for (int kx = 0; kx < w.kernel_size; ++kx)
        {
            const int dy = ky - half, dx = kx - half;
            parallel_for(h, [&](int y) {
                const int sy = y + dy;
                for (int xx = 0; xx < wd; ++xx)
                {
                    const int sx = xx + dx;
                    const Eigen::Index p = static_cast<Eigen::Index>(y) * wd + xx;
                    if (sy < 0 || sy >= h || sx < 0 || sx >= wd)
                    {
                        shifted.col(p).setZero();
                    } else
                    {
                        shifted.col(p) = src.col(static_cast<Eigen::Index>(sy) * wd + sx);
                    }
                }
            });
            o.noalias() += w.taps[static_cast<std::size_t>(ky) * w.kernel_size + kx] * shifted;
        }
    }
    return out;
}

FeatureMap conv_transpose2x2(const FeatureMap& x, const ConvWeights& w)
{
    if (x.channels() != w.in_channels || w.kernel_size != 2)
    {
        throw InvalidArgument("conv_transpose2x2: weight shape does not match the input");
    }
    const int h = x.height(), wd = x.width();
    FeatureMap out(2 * h, 2 * wd, w.out_channels);
    for (int ky = 0; ky < 2; ++ky)
    {
        for (int kx = 0; kx < 2; ++kx)
        {
            Eigen::MatrixXd y = w.taps[ky * 2 + kx] * x.matrix();
            y.colwise() += w.bias;
            for (int r = 0; r < h; ++r)
            {
                for (int c = 0; c < wd; ++c)
                {
                    out.matrix().col(static_cast<Eigen::Index>(2 * r + ky) * (2 * wd) + 2 * c + kx) =
                        y.col(static_cast<Eigen::Index>(r) * wd + c);
                }
            }
        }
    }
    return out;
}

FeatureMap max_pool2x2(const FeatureMap& x)
{
    if (x.height() % 2 != 0 || x.width() % 2 != 0)
    {
        throw InvalidArgument("max_pool2x2 needs even spatial dimensions");
    }
    FeatureMap out(x.height() / 2, x.width() / 2, x.channels());
    for (int y = 0; y < out.height(); ++y)
    {
        for (int xx = 0; xx < out.width(); ++xx)
        {
            for (int c = 0; c < x.channels(); ++c)
            {
                out.at(y, xx, c) = std::max({x.at(2 * y, 2 * xx, c), x.at(2 * y, 2 * xx + 1, c),
                                             x.at(2 * y + 1, 2 * xx, c), x.at(2 * y + 1, 2 * xx + 1, c)});
            }
        }
    }
    return out;
}

FeatureMap concat_channels(std::span<const FeatureMap> maps)
{
    if (maps.empty())
    {
        throw InvalidArgument("concat_channels needs at least one map");
    }
    int channels = 0;
    for (const auto& m : maps)
    {
        if (m.height() != maps[0].height() || m.width() != maps[0].width())
        {
            throw InvalidArgument("concat_channels: spatial sizes differ");
        }
        channels += m.channels();
    }
    FeatureMap out(maps[0].height(), maps[0].width(), channels);
    int offset = 0;
    for (const auto& m : maps)
    {
        out.matrix().middleRows(offset, m.channels()) = m.matrix();
        offset += m.channels();
    }
    return out;
}

namespace {

FeatureMap relu(FeatureMap x)
{
    for (auto& v : x.data())
    {
        v = std::max(v, 0.0);
    }
    return x;
}

FeatureMap apply_double(const FeatureMap& x, const DoubleConvWeights& w)
{
    return relu(conv2d(relu(conv2d(x, w.first)), w.second));
}

} // namespace

MulEnUnetTrace mulen_unet_trace(std::span<const FeatureMap> views, const MulEnUnetWeights& weights)
{
    if (views.size() != kUnetViews)
    {
        throw InvalidArgument("MulEn-Unet takes exactly three views");
    }
    const int h = views[0].height(), w = views[0].width();
    constexpr int factor = 1 << kUnetDepth;
    for (const auto& v : views)
    {
        if (v.height() != h || v.width() != w || v.channels() != weights.in_channels)
        {
            throw InvalidArgument("MulEn-Unet views must share size and have " + std::to_string(weights.in_channels) +
                                  " channels");
        }
    }
    if (h <= 0 || w <= 0 || h % factor != 0 || w % factor != 0)
    {
        throw InvalidArgument("MulEn-Unet input size must be a positive multiple of 16, got " + std::to_string(h) +
                              "x" + std::to_string(w));
    }

    MulEnUnetTrace t;
    std::vector<FeatureMap> bottoms;
    for (int e = 0; e < kUnetViews; ++e)
    {
        FeatureMap cur = views[e];
        for (int l = 0; l < kUnetDepth; ++l)
        {
            cur = apply_double(cur, weights.encoders[e].levels[l]);
            t.encoder_features[e].push_back(cur);
            cur = max_pool2x2(cur);
        }
        cur = apply_double(cur, weights.encoders[e].bottom);
        t.encoder_features[e].push_back(cur);
        bottoms.push_back(std::move(cur));
    }
    t.fused = concat_channels(bottoms);

    FeatureMap cur = t.fused;
    for (int l = kUnetDepth - 1; l >= 0; --l)
    {
        const auto& d = weights.decoder[l];
        std::vector<FeatureMap> parts;
        parts.push_back(relu(conv_transpose2x2(cur, d.up)));
        for (int e = 0; e < kUnetViews; ++e)
        {
            parts.push_back(attention_gate(t.encoder_features[e][l], parts[0], d.gates[e]).output);
        }
        cur = apply_double(concat_channels(parts), d.merge);
    }
    t.output = conv2d(cur, weights.head);
    return t;
}

FeatureMap mulen_unet_forward(std::span<const FeatureMap> views, const MulEnUnetWeights& weights)
{
    return mulen_unet_trace(views, weights).output;
}

namespace {

constexpr std::uint32_t kFuswVersion = 1;

} // namespace

std::vector<std::uint8_t> serialize_weights(const MulEnUnetWeights& weights)
{
    ByteWriter w;
    w.tag("FUSW");
    w.u32(kFuswVersion);
    w.u32(static_cast<std::uint32_t>(weights.in_channels));
    w.u32(static_cast<std::uint32_t>(weights.out_channels));
    w.u32(kUnetDepth);
    for (const int c : weights.widths)
    {
        w.u32(static_cast<std::uint32_t>(c));
    }
    w.u32(static_cast<std::uint32_t>(weights.parameter_count()));
    visit_all(weights, [&w](const double* d, std::size_t n, int) {
        for (std::size_t i = 0; i < n; ++i)
        {
            w.f32(static_cast<float>(d[i]));
        }
    });
    return w.take();
}

MulEnUnetWeights deserialize_weights(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    if (r.tag() != "FUSW")
    {
        throw IoError("not a FUSW weight container");
    }
    if (const auto version = r.u32(); version != kFuswVersion)
    {
        throw IoError("unsupported FUSW version " + std::to_string(version));
    }
    const int in = static_cast<int>(r.u32());
    const int out = static_cast<int>(r.u32());
    if (r.u32() != kUnetDepth)
    {
        throw IoError("FUSW depth does not match this build");
    }
    std::array<int, kUnetDepth> widths{};
    for (auto& c : widths)
    {
        c = static_cast<int>(r.u32());
    }
    if (in <= 0 || out <= 0 || in > 4096 || out > 4096 ||
        std::any_of(widths.begin(), widths.end(), [](int c) { return c <= 0 || c > 4096; }))
    {
        throw IoError("FUSW header has invalid channel counts");
    }
    MulEnUnetWeights weights = MulEnUnetWeights::zeros(in, out, widths);
    const std::size_t count = r.u32();
    if (count != weights.parameter_count() || r.remaining() != 4 * count)
    {
        throw IoError("FUSW parameter block does not match the declared architecture");
    }
    visit_all(weights, [&r](double* d, std::size_t n, int) {
        for (std::size_t i = 0; i < n; ++i)
        {
            d[i] = r.f32();
        }
    });
    return weights;
}

void save_weights(const MulEnUnetWeights& weights, const std::filesystem::path& path)
{
    write_file_bytes(path, serialize_weights(weights));
}

MulEnUnetWeights load_weights(const std::filesystem::path& path)
{
    return deserialize_weights(read_file_bytes(path));
}

} // namespace dfmvr
