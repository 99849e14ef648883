/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/fusion.cpp
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
#include "dfmvr/fusion.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dfmvr {

FeatureMap::FeatureMap(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels),
      data_(static_cast<std::size_t>(std::max(0, height)) * std::max(0, width) * std::max(0, channels), 0.0)
{
    if (height < 0 || width < 0 || channels < 0)
    {
        throw InvalidArgument("feature map dimensions must be non-negative");
    }
}

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data))
{
    if (height < 0 || width < 0 || channels < 0 ||
        data_.size() != static_cast<std::size_t>(height) * width * channels)
    {
        throw InvalidArgument("feature map data does not match its dimensions");
    }
    if (!all_finite())
    {
        throw InvalidArgument("feature map contains NaN or Inf");
    }
}

bool FeatureMap::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool operator==(const FeatureMap& a, const FeatureMap& b)
{
    return a.height() == b.height() && a.width() == b.width() && a.channels() == b.channels() &&
           a.data() == b.data();
}

WeightSampler::WeightSampler(std::uint64_t seed) : engine_(seed) {}

double WeightSampler::uniform(double bound)
{
    // 53 random mantissa bits; independent of the standard library's distributions.
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return static_cast<double>(static_cast<float>((2.0 * u - 1.0) * bound));
}

Eigen::MatrixXd WeightSampler::matrix(Eigen::Index rows, Eigen::Index cols, double bound)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        m.data()[i] = uniform(bound);
    }
    return m;
}

Eigen::VectorXd WeightSampler::vector(Eigen::Index n, double bound)
{
    return matrix(n, 1, bound);
}

InvolutionSpec InvolutionSpec::random(int channels, int kernel_size, int groups, int reduction, std::uint64_t seed)
{
    InvolutionSpec s;
    s.channels = channels;
    s.kernel_size = kernel_size;
    s.groups = groups;
    s.reduction = reduction;
    if (channels <= 0 || reduction < 1 || kernel_size <= 0 || groups <= 0)
    {
        throw InvalidArgument("involution dimensions must be positive");
    }
    WeightSampler rng(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(channels));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(s.hidden()));
    s.w1 = rng.matrix(s.hidden(), channels, bound1);
    s.b1 = rng.vector(s.hidden(), bound1);
    s.w2 = rng.matrix(s.kernel_values(), s.hidden(), bound2);
    s.b2 = rng.vector(s.kernel_values(), bound2);
    validate(s);
    return s;
}

void validate(const InvolutionSpec& s)
{
    if (s.kernel_size <= 0 || s.kernel_size % 2 == 0)
    {
        throw InvalidArgument("involution kernel size must be odd, got " + std::to_string(s.kernel_size));
    }
    if (s.channels <= 0 || s.groups <= 0 || s.channels % s.groups != 0)
    {
        throw InvalidArgument("involution channels must be a positive multiple of the group count");
    }
    if (s.reduction < 1)
    {
        throw InvalidArgument("involution reduction ratio must be >= 1");
    }
    if (s.w1.rows() != s.hidden() || s.w1.cols() != s.channels || s.b1.size() != s.hidden() ||
        s.w2.rows() != s.kernel_values() || s.w2.cols() != s.hidden() || s.b2.size() != s.kernel_values())
    {
        throw InvalidArgument("involution generator weights do not match the declared dimensions");
    }
}

namespace {

void check_involution_input(const FeatureMap& x, const InvolutionSpec& spec)
{
    validate(spec);
    if (x.channels() != spec.channels)
    {
        throw InvalidArgument("involution expects " + std::to_string(spec.channels) + " channels, got " +
                              std::to_string(x.channels()));
    }
}

// Pre-activation and kernel values at every pixel: hidden x HW and KKG x HW.
void generate_kernels(const FeatureMap& x, const InvolutionSpec& spec, Eigen::MatrixXd& pre, Eigen::MatrixXd& kern)
{
    pre = (spec.w1 * x.matrix()).colwise() + spec.b1;
    kern = (spec.w2 * pre.cwiseMax(0.0)).colwise() + spec.b2;
}

} // namespace

FeatureMap involution_forward(const FeatureMap& x, const InvolutionSpec& spec)
{
    check_involution_input(x, spec);
    Eigen::MatrixXd pre, kern;
    generate_kernels(x, spec, pre, kern);
    const int h = x.height(), w = x.width(), c_n = x.channels(), k = spec.kernel_size, half = k / 2;
    FeatureMap out(h, w, c_n);
    parallel_for(h, [&](int i) {
        for (int j = 0; j < w; ++j)
        {
            const auto kv = kern.col(static_cast<Eigen::Index>(i) * w + j);
            for (int c = 0; c < c_n; ++c)
            {
                const int g = c * spec.groups / c_n;
                double acc = 0.0;
                for (int u = 0; u < k; ++u)
                {
                    const int y = i + u - half;
                    if (y < 0 || y >= h)
                    {
                        continue;
                    }
                    for (int v = 0; v < k; ++v)
                    {
                        const int xx = j + v - half;
                        if (xx >= 0 && xx < w)
                        {
                            acc += kv(g * k * k + u * k + v) * x.at(y, xx, c);
                        }
                    }
                }
                out.at(i, j, c) = acc;
            }
        }
    });
    return out;
}

InvolutionGradients involution_backward(const FeatureMap& x, const InvolutionSpec& spec, const FeatureMap& upstream)
{
    check_involution_input(x, spec);
    if (upstream.height() != x.height() || upstream.width() != x.width() || upstream.channels() != x.channels())
    {
        throw InvalidArgument("involution upstream gradient has the wrong shape");
    }
    Eigen::MatrixXd pre, kern;
    generate_kernels(x, spec, pre, kern);
    const int h = x.height(), w = x.width(), c_n = x.channels(), k = spec.kernel_size, half = k / 2;
    const Eigen::Index npix = static_cast<Eigen::Index>(h) * w;

    // d(kernel value) at every pixel.
    Eigen::MatrixXd d_kern = Eigen::MatrixXd::Zero(spec.kernel_values(), npix);
    InvolutionGradients g;
    g.d_x = FeatureMap(h, w, c_n);
    parallel_for(h, [&](int i) {
        for (int j = 0; j < w; ++j)
        {
            const Eigen::Index p = static_cast<Eigen::Index>(i) * w + j;
            for (int c = 0; c < c_n; ++c)
            {
                const int grp = c * spec.groups / c_n;
                const double up = upstream.at(i, j, c);
                for (int u = 0; u < k; ++u)
                {
                    const int y = i + u - half;
                    if (y < 0 || y >= h)
                    {
                        continue;
                    }
                    for (int v = 0; v < k; ++v)
                    {
                        const int xx = j + v - half;
                        if (xx >= 0 && xx < w)
                        {
                            d_kern(grp * k * k + u * k + v, p) += up * x.at(y, xx, c);
                        }
                    }
                }
            }
            // Neighborhood path in gather form: pixel (i, j) is tap (u, v) of center (i - u + half, j - v + half).
            for (int c = 0; c < c_n; ++c)
            {
                const int grp = c * spec.groups / c_n;
                double acc = 0.0;
                for (int u = 0; u < k; ++u)
                {
                    const int cy = i - u + half;
                    if (cy < 0 || cy >= h)
                    {
                        continue;
                    }
                    for (int v = 0; v < k; ++v)
                    {
                        const int cx = j - v + half;
                        if (cx >= 0 && cx < w)
                        {
                            acc += kern(grp * k * k + u * k + v, static_cast<Eigen::Index>(cy) * w + cx) *
                                   upstream.at(cy, cx, c);
                        }
                    }
                }
                g.d_x.at(i, j, c) = acc;
            }
        }
    });

    const Eigen::MatrixXd act = pre.cwiseMax(0.0);
    g.d_b2 = d_kern.rowwise().sum();
    g.d_w2 = d_kern * act.transpose();
    const Eigen::MatrixXd d_pre = (spec.w2.transpose() * d_kern).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.d_b1 = d_pre.rowwise().sum();
    g.d_w1 = d_pre * x.matrix().transpose();
    g.d_x.matrix() += spec.w1.transpose() * d_pre;
    return g;
}

AttentionGateWeights AttentionGateWeights::random(int skip_channels, int gate_channels, int inter_channels,
                                                  WeightSampler& rng)
{
    if (skip_channels <= 0 || gate_channels <= 0 || inter_channels <= 0)
    {
        throw InvalidArgument("attention gate dimensions must be positive");
    }
    AttentionGateWeights a;
    const double bg = 1.0 / std::sqrt(static_cast<double>(gate_channels));
    const double bx = 1.0 / std::sqrt(static_cast<double>(skip_channels));
    const double bp = 1.0 / std::sqrt(static_cast<double>(inter_channels));
    a.w_g = rng.matrix(inter_channels, gate_channels, bg);
    a.b_g = rng.vector(inter_channels, bg);
    a.w_x = rng.matrix(inter_channels, skip_channels, bx);
    a.b_x = rng.vector(inter_channels, bx);
    a.psi = rng.vector(inter_channels, bp);
    a.b_psi = rng.uniform(bp);
    return a;
}

namespace {

void check_gate_input(const FeatureMap& skip, const FeatureMap& gate, const AttentionGateWeights& w)
{
    if (skip.height() != gate.height() || skip.width() != gate.width())
    {
        throw InvalidArgument("attention gate: skip and gate sizes differ");
    }
    const auto f = w.psi.size();
    if (w.w_g.rows() != f || w.w_x.rows() != f || w.b_g.size() != f || w.b_x.size() != f ||
        w.w_g.cols() != gate.channels() || w.w_x.cols() != skip.channels())
    {
        throw InvalidArgument("attention gate weights do not match the input channels");
    }
}

Eigen::MatrixXd gate_preactivation(const FeatureMap& skip, const FeatureMap& gate, const AttentionGateWeights& w)
{
    Eigen::MatrixXd pre = w.w_g * gate.matrix() + w.w_x * skip.matrix();
    pre.colwise() += w.b_g + w.b_x;
    return pre;
}

} // namespace

AttentionGateOutput attention_gate(const FeatureMap& skip, const FeatureMap& gate, const AttentionGateWeights& w)
{
    check_gate_input(skip, gate, w);
    const Eigen::MatrixXd q = gate_preactivation(skip, gate, w).cwiseMax(0.0);
    const Eigen::RowVectorXd z = (w.psi.transpose() * q).array() + w.b_psi;
    AttentionGateOutput out;
    out.attention.resize(z.size());
    out.output = FeatureMap(skip.height(), skip.width(), skip.channels());
    for (Eigen::Index p = 0; p < z.size(); ++p)
    {
        out.attention[p] = 1.0 / (1.0 + std::exp(-z(p)));
        out.output.matrix().col(p) = skip.matrix().col(p) * out.attention[p];
    }
    return out;
}

AttentionGateGradients attention_gate_backward(const FeatureMap& skip, const FeatureMap& gate,
                                               const AttentionGateWeights& w, const FeatureMap& upstream)
{
    check_gate_input(skip, gate, w);
    if (upstream.height() != skip.height() || upstream.width() != skip.width() ||
        upstream.channels() != skip.channels())
    {
        throw InvalidArgument("attention gate upstream gradient has the wrong shape");
    }
    const Eigen::MatrixXd pre = gate_preactivation(skip, gate, w);
    const Eigen::MatrixXd q = pre.cwiseMax(0.0);
    const Eigen::RowVectorXd z = (w.psi.transpose() * q).array() + w.b_psi;
    const Eigen::Index npix = z.size();

    AttentionGateGradients g;
    g.d_skip = FeatureMap(skip.height(), skip.width(), skip.channels());
    Eigen::RowVectorXd dz(npix);
    for (Eigen::Index p = 0; p < npix; ++p)
    {
        const double a = 1.0 / (1.0 + std::exp(-z(p)));
        const double da = upstream.matrix().col(p).dot(skip.matrix().col(p));
        dz(p) = da * a * (1.0 - a);
        g.d_skip.matrix().col(p) = upstream.matrix().col(p) * a;
    }
    g.d_b_psi = dz.sum();
    g.d_psi = q * dz.transpose();
    const Eigen::MatrixXd dq = (w.psi * dz).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.d_b_g = dq.rowwise().sum();
    g.d_b_x = g.d_b_g;
    g.d_w_g = dq * gate.matrix().transpose();
    g.d_w_x = dq * skip.matrix().transpose();
    g.d_gate = FeatureMap(gate.height(), gate.width(), gate.channels());
    g.d_gate.matrix() = w.w_g.transpose() * dq;
    g.d_skip.matrix() += w.w_x.transpose() * dq;
    return g;
}

} // namespace dfmvr
