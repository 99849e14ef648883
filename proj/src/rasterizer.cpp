/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/rasterizer.cpp
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
#include "dfmvr/rasterizer.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dfmvr {

namespace {

// Fixed row partition, independent of the worker count, so reductions are reproducible.
constexpr int kBands = 16;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

struct TriangleSetup
{
    double area2 = 0.0; // signed, twice the projected area
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    bool valid = false;
};

int band_begin(int band, int bands, int height)
{
    return static_cast<int>(static_cast<long long>(height) * band / bands);
}

} // namespace

Image RenderedFrame::image() const
{
    Image img(width, height);
    img.data = color;
    return img;
}

LabelMask RenderedFrame::label_mask() const
{
    LabelMask m(width, height);
    for (std::size_t p = 0; p < m.labels.size(); ++p)
    {
        const double* probs = &class_probs[p * kNumClasses];
        m.labels[p] = static_cast<std::uint8_t>(std::max_element(probs, probs + kNumClasses) - probs);
    }
    return m;
}

RenderedFrame rasterize(std::span<const Triangle> triangles, std::span<const std::uint8_t> labels,
                        const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& colors, const ViewPose& pose,
                        const CameraIntrinsics& cam, const RenderOptions& options)
{
    validate(cam);
    const auto nv = points.cols();
    if (colors.cols() != nv || static_cast<Eigen::Index>(labels.size()) != nv)
    {
        throw InvalidArgument("rasterize: points, colors and labels disagree on the vertex count");
    }
    for (const auto& tri : triangles)
    {
        for (const int i : tri)
        {
            if (i < 0 || i >= nv)
            {
                throw InvalidArgument("rasterize: triangle index out of range");
            }
        }
    }

    auto scene = std::make_shared<RasterScene>();
    scene->triangles.assign(triangles.begin(), triangles.end());
    scene->labels.assign(labels.begin(), labels.end());
    scene->model_points = points;
    scene->camera_points = to_camera(points, pose);
    scene->screen_points = project(scene->camera_points, cam);
    scene->colors = colors;
    scene->pose = pose;
    scene->camera = cam;

    const int w = cam.width, h = cam.height;
    const std::size_t npix = static_cast<std::size_t>(w) * h;
    RenderedFrame frame;
    frame.width = w;
    frame.height = h;
    frame.color.assign(npix * 3, 0.0);
    frame.coverage.assign(npix, 0);
    frame.class_probs.assign(npix * kNumClasses, 0.0);
    frame.triangle_id.assign(npix, -1);
    frame.barycentric.assign(npix * 3, 0.0);
    frame.depth.assign(npix, 0.0);

    const auto& sp = scene->screen_points;
    const auto& cp = scene->camera_points;
    std::vector<TriangleSetup> setup(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t)
    {
        const auto& tri = triangles[t];
        const Eigen::Vector2d p0 = sp.col(tri[0]), p1 = sp.col(tri[1]), p2 = sp.col(tri[2]);
        auto& s = setup[t];
        s.area2 = cross2(p1 - p0, p2 - p0);
        if (!(0.5 * std::abs(s.area2) >= 1e-12))
        {
            ++frame.degenerate_triangles;
            continue;
        }
        const double min_x = std::min({p0.x(), p1.x(), p2.x()}), max_x = std::max({p0.x(), p1.x(), p2.x()});
        const double min_y = std::min({p0.y(), p1.y(), p2.y()}), max_y = std::max({p0.y(), p1.y(), p2.y()});
        s.x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
        s.x1 = std::min(w - 1, static_cast<int>(std::floor(max_x - 0.5)));
        s.y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
        s.y1 = std::min(h - 1, static_cast<int>(std::floor(max_y - 0.5)));
        s.valid = s.x0 <= s.x1 && s.y0 <= s.y1;
    }

    const int bands = std::min(kBands, std::max(1, h));
    parallel_for(bands, [&](int band) {
        const int row0 = band_begin(band, bands, h), row1 = band_begin(band + 1, bands, h);
        std::vector<double> zbuf(static_cast<std::size_t>(row1 - row0) * w, std::numeric_limits<double>::infinity());
        for (std::size_t t = 0; t < triangles.size(); ++t)
        {
            const auto& s = setup[t];
            if (!s.valid || s.y1 < row0 || s.y0 >= row1)
            {
                continue;
            }
            const auto& tri = triangles[t];
            const Eigen::Vector2d p0 = sp.col(tri[0]), p1 = sp.col(tri[1]), p2 = sp.col(tri[2]);
            const double inv_z0 = 1.0 / cp(2, tri[0]), inv_z1 = 1.0 / cp(2, tri[1]), inv_z2 = 1.0 / cp(2, tri[2]);
            const double sign = s.area2 > 0.0 ? 1.0 : -1.0;
            for (int y = std::max(s.y0, row0); y <= std::min(s.y1, row1 - 1); ++y)
            {
                for (int x = s.x0; x <= s.x1; ++x)
                {
                    const Eigen::Vector2d q(x + 0.5, y + 0.5);
                    const double w0 = cross2(p1 - q, p2 - q);
                    const double w1 = cross2(p2 - q, p0 - q);
                    const double w2 = cross2(p0 - q, p1 - q);
                    if (w0 * sign < 0.0 || w1 * sign < 0.0 || w2 * sign < 0.0)
                    {
                        continue;
                    }
                    const double b0 = w0 / s.area2, b1 = w1 / s.area2, b2 = w2 / s.area2;
                    const double depth = 1.0 / (b0 * inv_z0 + b1 * inv_z1 + b2 * inv_z2);
                    double& z = zbuf[static_cast<std::size_t>(y - row0) * w + x];
                    if (depth < z)
                    {
                        z = depth;
                        const std::size_t p = frame.pixel(x, y);
                        frame.triangle_id[p] = static_cast<std::int32_t>(t);
                        frame.barycentric[3 * p] = b0;
                        frame.barycentric[3 * p + 1] = b1;
                        frame.barycentric[3 * p + 2] = b2;
                        frame.depth[p] = depth;
                    }
                }
            }
        }
    });

    for (std::size_t p = 0; p < npix; ++p)
    {
        const int t = frame.triangle_id[p];
        if (t < 0)
        {
            for (int c = 0; c < 3; ++c)
            {
                frame.color[3 * p + c] = options.background[c];
            }
            frame.class_probs[p * kNumClasses + static_cast<int>(FaceClass::background)] = 1.0;
            continue;
        }
        frame.coverage[p] = 1;
        const auto& tri = triangles[t];
        // Blend relative to corner 0 so that equal corner values reproduce exactly.
        const double b1 = frame.barycentric[3 * p + 1], b2 = frame.barycentric[3 * p + 2];
        for (int c = 0; c < 3; ++c)
        {
            const double c0 = colors(c, tri[0]);
            frame.color[3 * p + c] = c0 + b1 * (colors(c, tri[1]) - c0) + b2 * (colors(c, tri[2]) - c0);
        }
        double* probs = &frame.class_probs[p * kNumClasses];
        const std::uint8_t l0 = labels[tri[0]];
        probs[l0] = 1.0;
        for (const int k : {1, 2})
        {
            if (labels[tri[k]] != l0)
            {
                const double b = frame.barycentric[3 * p + k];
                probs[labels[tri[k]]] += b;
                probs[l0] -= b;
            }
        }
    }
    frame.scene = std::move(scene);
    return frame;
}

RenderedFrame rasterize(const MorphableModel& model, const Eigen::VectorXd& shape, const Eigen::VectorXd& colors,
                        const ViewPose& pose, const CameraIntrinsics& cam, const RenderOptions& options)
{
    if (shape.size() != model.mean_shape.size() || colors.size() != model.mean_shape.size())
    {
        throw InvalidArgument("rasterize: shape/color length does not match the model");
    }
    return rasterize(model.triangles, model.region_labels, as_points(shape), as_points(colors), pose, cam, options);
}

RasterGradients rasterize_backward(const RenderedFrame& frame, std::span<const double> d_color,
                                   std::span<const double> d_class)
{
    if (!frame.scene)
    {
        throw InvalidArgument("rasterize_backward: frame carries no scene");
    }
    const std::size_t npix = static_cast<std::size_t>(frame.width) * frame.height;
    if (!d_color.empty() && d_color.size() != npix * 3)
    {
        throw InvalidArgument("rasterize_backward: d_color must be H*W*3");
    }
    if (!d_class.empty() && d_class.size() != npix * kNumClasses)
    {
        throw InvalidArgument("rasterize_backward: d_class must be H*W*10");
    }
    const RasterScene& scene = *frame.scene;
    const auto nv = scene.model_points.cols();
    const auto& sp = scene.screen_points;

    struct Bucket
    {
        Eigen::Matrix2Xd d_screen;
        Eigen::Matrix3Xd d_colors;
        Eigen::MatrixXd d_codes;
    };
    const int bands = std::min(kBands, std::max(1, frame.height));
    std::vector<Bucket> buckets(bands);
    parallel_for(bands, [&](int band) {
        Bucket& b = buckets[band];
        b.d_screen = Eigen::Matrix2Xd::Zero(2, nv);
        b.d_colors = Eigen::Matrix3Xd::Zero(3, nv);
        b.d_codes = Eigen::MatrixXd::Zero(kNumClasses, nv);
        const int row0 = band_begin(band, bands, frame.height), row1 = band_begin(band + 1, bands, frame.height);
        for (int y = row0; y < row1; ++y)
        {
            for (int x = 0; x < frame.width; ++x)
            {
                const std::size_t p = frame.pixel(x, y);
                const int t = frame.triangle_id[p];
                if (t < 0)
                {
                    continue;
                }
                const auto& tri = scene.triangles[t];
                const double* bary = &frame.barycentric[3 * p];
                std::array<double, 3> g{0.0, 0.0, 0.0};
                bool any = false;
                if (!d_color.empty())
                {
                    const Eigen::Vector3d dc(d_color[3 * p], d_color[3 * p + 1], d_color[3 * p + 2]);
                    if (dc.squaredNorm() > 0.0)
                    {
                        any = true;
                        for (int k = 0; k < 3; ++k)
                        {
                            g[k] += dc.dot(scene.colors.col(tri[k]));
                            b.d_colors.col(tri[k]) += bary[k] * dc;
                        }
                    }
                }
                if (!d_class.empty())
                {
                    const double* dk = &d_class[p * kNumClasses];
                    for (int k = 0; k < 3; ++k)
                    {
                        g[k] += dk[scene.labels[tri[k]]];
                        for (int c = 0; c < kNumClasses; ++c)
                        {
                            if (dk[c] != 0.0)
                            {
                                any = true;
                                b.d_codes(c, tri[k]) += bary[k] * dk[c];
                            }
                        }
                    }
                }
                if (!any)
                {
                    continue;
                }
                const Eigen::Vector2d q(x + 0.5, y + 0.5);
                const Eigen::Vector2d a0 = sp.col(tri[0]) - q, a1 = sp.col(tri[1]) - q, a2 = sp.col(tri[2]) - q;
                const double area2 = cross2(a1 - a0, a2 - a0);
                const double g_mean = bary[0] * g[0] + bary[1] * g[1] + bary[2] * g[2];
                const double e0 = (g[0] - g_mean) / area2, e1 = (g[1] - g_mean) / area2, e2 = (g[2] - g_mean) / area2;
                // d w_k / d p_j for w0 = a1 x a2, w1 = a2 x a0, w2 = a0 x a1.
                b.d_screen.col(tri[0]) += e1 * Eigen::Vector2d(-a2.y(), a2.x()) + e2 * Eigen::Vector2d(a1.y(), -a1.x());
                b.d_screen.col(tri[1]) += e0 * Eigen::Vector2d(a2.y(), -a2.x()) + e2 * Eigen::Vector2d(-a0.y(), a0.x());
                b.d_screen.col(tri[2]) += e0 * Eigen::Vector2d(-a1.y(), a1.x()) + e1 * Eigen::Vector2d(a0.y(), -a0.x());
            }
        }
    });

    RasterGradients out;
    Eigen::Matrix2Xd d_screen = Eigen::Matrix2Xd::Zero(2, nv);
    out.d_colors = Eigen::Matrix3Xd::Zero(3, nv);
    out.d_class_codes = Eigen::MatrixXd::Zero(kNumClasses, nv);
    for (const auto& b : buckets)
    {
        d_screen += b.d_screen;
        out.d_colors += b.d_colors;
        out.d_class_codes += b.d_codes;
    }

    const RigidTransform rt = pose_to_matrix(scene.pose);
    const auto jac = rotation_jacobians(scene.pose);
    out.d_points = Eigen::Matrix3Xd::Zero(3, nv);
    Eigen::Matrix3d d_rotation = Eigen::Matrix3d::Zero();
    Eigen::Vector3d d_translation = Eigen::Vector3d::Zero();
    for (Eigen::Index v = 0; v < nv; ++v)
    {
        const Eigen::Vector2d ds = d_screen.col(v);
        if (ds.x() == 0.0 && ds.y() == 0.0)
        {
            continue;
        }
        const Eigen::Vector3d d_cam = projection_jacobian(scene.camera_points.col(v), scene.camera).transpose() * ds;
        out.d_points.col(v) = rt.rotation.transpose() * d_cam;
        d_translation += d_cam;
        d_rotation += d_cam * scene.model_points.col(v).transpose();
    }
    for (int i = 0; i < 3; ++i)
    {
        out.d_pose(i) = d_rotation.cwiseProduct(jac[i]).sum();
    }
    out.d_pose.tail<3>() = d_translation;
    return out;
}

} // namespace dfmvr
