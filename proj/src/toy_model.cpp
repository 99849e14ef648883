/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/toy_model.cpp
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
#include "dfmvr/errors.hpp"
#include "dfmvr/morphable_model.hpp"

#include "Eigen/QR"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>

namespace dfmvr {

namespace {

constexpr double kHalfWidth = 75.0;
constexpr double kHalfHeight = 95.0;
constexpr double kRimRadius = 0.8;

double gauss2(double u, double v, double cu, double cv, double su, double sv)
{
    const double a = (u - cu) / su;
    const double b = (v - cv) / sv;
    return std::exp(-(a * a + b * b));
}

/// Protrusion towards the viewer, in millimetres.
double face_depth(double u, double v)
{
    const double cap = 50.0 * std::sqrt(std::max(0.0, 1.0 - 0.55 * u * u - 0.35 * v * v));
    const double nose = 24.0 * gauss2(u, v, 0.0, -0.08, 0.12, 0.22);
    const double sockets = -6.0 * (gauss2(u, v, -0.35, 0.22, 0.15, 0.08) + gauss2(u, v, 0.35, 0.22, 0.15, 0.08));
    const double lips = 4.0 * gauss2(u, v, 0.0, -0.5, 0.25, 0.08);
    return cap + nose + sockets + lips;
}

struct Ellipse
{
    double cu, cv, ru, rv;

    bool contains(double u, double v) const
    {
        const double a = (u - cu) / ru;
        const double b = (v - cv) / rv;
        return a * a + b * b <= 1.0;
    }
};

FaceClass classify(double u, double v)
{
    if (u * u + v * v > kRimRadius * kRimRadius)
    {
        return FaceClass::background;
    }
    if (Ellipse{0.0, -0.5, 0.20, 0.04}.contains(u, v))
    {
        return FaceClass::mouth;
    }
    if (v > -0.5 && Ellipse{0.0, -0.45, 0.25, 0.07}.contains(u, v))
    {
        return FaceClass::upper_lip;
    }
    if (v <= -0.5 && Ellipse{0.0, -0.56, 0.23, 0.08}.contains(u, v))
    {
        return FaceClass::lower_lip;
    }
    if (Ellipse{-0.35, 0.42, 0.20, 0.06}.contains(u, v))
    {
        return FaceClass::left_brow;
    }
    if (Ellipse{0.35, 0.42, 0.20, 0.06}.contains(u, v))
    {
        return FaceClass::right_brow;
    }
    if (Ellipse{-0.35, 0.22, 0.14, 0.07}.contains(u, v))
    {
        return FaceClass::left_eye;
    }
    if (Ellipse{0.35, 0.22, 0.14, 0.07}.contains(u, v))
    {
        return FaceClass::right_eye;
    }
    if (Ellipse{0.0, -0.05, 0.13, 0.27}.contains(u, v))
    {
        return FaceClass::nose;
    }
    return FaceClass::skin;
}

// Representative (u, v) per class, used to force every class to appear on coarse grids.
constexpr std::array<std::array<double, 2>, kNumClasses> kClassCenters = {{
    {0.0, 0.9},    // background
    {-0.5, -0.1},  // skin
    {-0.35, 0.42}, // left brow
    {0.35, 0.42},  // right brow
    {-0.35, 0.22}, // left eye
    {0.35, 0.22},  // right eye
    {0.0, -0.05},  // nose
    {0.0, -0.5},   // mouth
    {0.0, -0.43},  // upper lip
    {0.0, -0.58},  // lower lip
}};

Eigen::Vector3d mix(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double w)
{
    w = std::clamp(w, 0.0, 1.0);
    return (1.0 - w) * a + w * b;
}

Eigen::Vector3d albedo(double u, double v, const std::array<double, 6>& phases)
{
    Eigen::Vector3d c(0.86, 0.67, 0.56);
    const double pattern = 0.05 * std::sin(5.1 * u + phases[0]) * std::cos(4.3 * v + phases[1]) +
                           0.04 * std::sin(9.7 * v + phases[2]) * std::cos(7.9 * u + phases[3]) +
                           0.03 * std::sin(13.1 * (u + v) + phases[4]);
    c += Eigen::Vector3d(pattern, 0.8 * pattern, 0.7 * pattern);
    c = mix(c, {0.92, 0.55, 0.50}, 0.5 * gauss2(u, v, 0.0, -0.2, 0.08, 0.08));
    for (const double side : {-1.0, 1.0})
    {
        c = mix(c, {0.25, 0.17, 0.12}, 1.2 * gauss2(u, v, side * 0.35, 0.42, 0.17, 0.05));
        c = mix(c, {0.95, 0.95, 0.93}, 1.1 * gauss2(u, v, side * 0.35, 0.22, 0.11, 0.05));
        c = mix(c, {0.20, 0.25, 0.35}, 1.0 * gauss2(u, v, side * 0.35, 0.22, 0.045, 0.04));
    }
    c = mix(c, {0.75, 0.32, 0.35}, 1.1 * gauss2(u, v, 0.0, -0.5, 0.24, 0.09));
    c = mix(c, {0.25, 0.08, 0.08}, 1.0 * gauss2(u, v, 0.0, -0.5, 0.17, 0.03));
    const double r = std::sqrt(u * u + v * v);
    const double t = std::clamp((r - 0.76) / 0.1, 0.0, 1.0);
    c = mix(c, Eigen::Vector3d(0.35 + 0.3 * phases[5] / (2.0 * std::numbers::pi), 0.28, 0.22), t * t * (3.0 - 2.0 * t));
    return c.cwiseMax(0.0).cwiseMin(1.0);
}

struct Grid
{
    int n = 0;
    std::vector<std::array<double, 2>> uv;          // per grid point
    std::vector<Triangle> grid_triangles;           // grid point ids
    std::vector<FaceClass> classes;                 // per triangle
    std::vector<int> vertex_grid;                   // grid point of every model vertex
    std::vector<std::uint8_t> vertex_labels;
    std::vector<Triangle> triangles;                // model vertex ids
    std::unordered_map<int, int> first_vertex;      // grid point -> first model vertex
};

Grid build_grid(int n)
{
    Grid g;
    g.n = n;
    const int side = n + 1;
    g.uv.resize(side * side);
    for (int j = 0; j < side; ++j)
    {
        for (int i = 0; i < side; ++i)
        {
            g.uv[j * side + i] = {-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n};
        }
    }
    const auto inside = [&](int id) {
        const auto& p = g.uv[id];
        return p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12;
    };
    for (int j = 0; j < n; ++j)
    {
        for (int i = 0; i < n; ++i)
        {
            const int p00 = j * side + i, p10 = p00 + 1, p01 = p00 + side, p11 = p01 + 1;
            if (!(inside(p00) && inside(p10) && inside(p01) && inside(p11)))
            {
                continue;
            }
            g.grid_triangles.push_back({p00, p10, p11});
            g.grid_triangles.push_back({p00, p11, p01});
        }
    }
    g.classes.resize(g.grid_triangles.size());
    std::vector<int> class_count(kNumClasses, 0);
    std::vector<std::array<double, 2>> centroids(g.grid_triangles.size());
    for (std::size_t t = 0; t < g.grid_triangles.size(); ++t)
    {
        double cu = 0.0, cv = 0.0;
        for (const int id : g.grid_triangles[t])
        {
            cu += g.uv[id][0] / 3.0;
            cv += g.uv[id][1] / 3.0;
        }
        centroids[t] = {cu, cv};
        g.classes[t] = classify(cu, cv);
        ++class_count[static_cast<int>(g.classes[t])];
    }
    // Coarse grids can miss the small regions entirely; claim the closest triangle.
    for (int c = 0; c < kNumClasses; ++c)
    {
        if (class_count[c] > 0 || g.grid_triangles.empty())
        {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_t = 0;
        for (std::size_t t = 0; t < centroids.size(); ++t)
        {
            if (class_count[static_cast<int>(g.classes[t])] <= 1)
            {
                continue;
            }
            const double du = centroids[t][0] - kClassCenters[c][0];
            const double dv = centroids[t][1] - kClassCenters[c][1];
            const double d = du * du + dv * dv;
            if (d < best)
            {
                best = d;
                best_t = t;
            }
        }
        if (std::isfinite(best))
        {
            --class_count[static_cast<int>(g.classes[best_t])];
            g.classes[best_t] = static_cast<FaceClass>(c);
            ++class_count[c];
        }
    }
    // Seam duplication: one model vertex per (grid point, class) pair.
    std::unordered_map<long long, int> key_to_vertex;
    g.triangles.reserve(g.grid_triangles.size());
    for (std::size_t t = 0; t < g.grid_triangles.size(); ++t)
    {
        const int label = static_cast<int>(g.classes[t]);
        Triangle tri{};
        for (int k = 0; k < 3; ++k)
        {
            const int gp = g.grid_triangles[t][k];
            const long long key = static_cast<long long>(gp) * kNumClasses + label;
            auto it = key_to_vertex.find(key);
            if (it == key_to_vertex.end())
            {
                const int vid = static_cast<int>(g.vertex_grid.size());
                it = key_to_vertex.emplace(key, vid).first;
                g.vertex_grid.push_back(gp);
                g.vertex_labels.push_back(static_cast<std::uint8_t>(label));
                g.first_vertex.emplace(gp, vid);
            }
            tri[k] = it->second;
        }
        g.triangles.push_back(tri);
    }
    return g;
}

/// Nearest used grid point to (u, v), returned as its first model vertex.
int nearest_vertex(const Grid& g, double u, double v)
{
    double best = std::numeric_limits<double>::infinity();
    int best_vertex = 0;
    for (std::size_t vid = 0; vid < g.vertex_grid.size(); ++vid)
    {
        const auto& p = g.uv[g.vertex_grid[vid]];
        const double d = (p[0] - u) * (p[0] - u) + (p[1] - v) * (p[1] - v);
        if (d < best)
        {
            best = d;
            best_vertex = g.first_vertex.at(g.vertex_grid[vid]);
        }
    }
    return best_vertex;
}

/// Conventional 68-point layout in (u, v) face coordinates.
std::vector<std::array<double, 2>> landmark_layout_68()
{
    std::vector<std::array<double, 2>> pts;
    const double pi = std::numbers::pi;
    for (int t = 0; t <= 16; ++t) // jaw
    {
        const double a = pi * (1.0 + t / 16.0);
        pts.push_back({0.74 * std::cos(a), 0.05 + 0.74 * std::sin(a)});
    }
    for (int t = 0; t < 5; ++t) // brow, image left
    {
        const double u = -0.52 + 0.085 * t;
        pts.push_back({u, 0.40 + 0.04 * std::sin(pi * t / 4.0)});
    }
    for (int t = 0; t < 5; ++t) // brow, image right
    {
        const double u = 0.18 + 0.085 * t;
        pts.push_back({u, 0.40 + 0.04 * std::sin(pi * t / 4.0)});
    }
    for (const double v : {0.22, 0.12, 0.02, -0.08}) // nose bridge, 30 = tip
    {
        pts.push_back({0.0, v});
    }
    for (const double u : {-0.1, -0.05, 0.0, 0.05, 0.1}) // lower nose
    {
        pts.push_back({u, -0.2});
    }
    const std::array<std::array<double, 2>, 6> eye = {{{-0.12, 0}, {-0.04, 0.04}, {0.04, 0.04}, {0.12, 0}, {0.04, -0.04}, {-0.04, -0.04}}};
    for (const double cu : {-0.35, 0.35})
    {
        for (const auto& e : eye)
        {
            pts.push_back({cu + e[0], 0.22 + e[1]});
        }
    }
    for (int k = 0; k < 12; ++k) // outer lip
    {
        const double a = pi - k * (2.0 * pi / 12.0);
        pts.push_back({0.24 * std::cos(a), -0.5 + 0.1 * std::sin(a)});
    }
    for (int k = 0; k < 8; ++k) // inner lip
    {
        const double a = pi - k * (2.0 * pi / 8.0);
        pts.push_back({0.16 * std::cos(a), -0.5 + 0.035 * std::sin(a)});
    }
    return pts;
}

std::vector<std::array<double, 2>> extra_landmark_layout_33()
{
    std::vector<std::array<double, 2>> pts;
    for (int t = 0; t < 11; ++t) // forehead arc
    {
        const double u = -0.45 + 0.09 * t;
        pts.push_back({u, 0.6 - 0.25 * u * u});
    }
    for (const double side : {-1.0, 1.0}) // cheeks
    {
        for (int k = 0; k < 11; ++k)
        {
            pts.push_back({side * (0.45 + 0.1 * (k % 3)), -0.05 - 0.1 * (k / 3)});
        }
    }
    return pts;
}

/// Smooth random fields evaluated on grid points: (3 * num_points) x num_fields.
Eigen::MatrixXd smooth_fields(const Grid& g, int num_fields, int offset, int total, bool localized, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto np = static_cast<Eigen::Index>(g.uv.size());
    Eigen::MatrixXd fields(3 * np, num_fields);
    for (int k = 0; k < num_fields; ++k)
    {
        const double fmax = 0.6 + 2.5 * static_cast<double>(offset + k) / total;
        struct Term
        {
            double a, p, q, phi;
        };
        std::array<std::array<Term, 4>, 3> terms{};
        for (auto& per_dim : terms)
        {
            for (auto& t : per_dim)
            {
                t = {unit(rng), fmax * 0.5 * (unit(rng) + 1.0), fmax * 0.5 * (unit(rng) + 1.0), phase(rng)};
            }
        }
        for (Eigen::Index p = 0; p < np; ++p)
        {
            const double u = g.uv[p][0], v = g.uv[p][1];
            double w = 1.0;
            if (localized)
            {
                w = 0.3 + gauss2(u, v, 0.0, -0.45, 0.3, 0.25) + 0.6 * gauss2(std::abs(u), v, 0.35, 0.3, 0.18, 0.15);
            }
            for (int d = 0; d < 3; ++d)
            {
                double f = 0.0;
                for (const auto& t : terms[d])
                {
                    f += t.a * std::cos(std::numbers::pi * (t.p * u + t.q * v) + t.phi);
                }
                fields(3 * p + d, k) = w * f;
            }
        }
    }
    return fields;
}

/// Expands per-grid-point rows to per-vertex rows.
Eigen::MatrixXd expand_rows(const Grid& g, const Eigen::MatrixXd& per_point)
{
    const auto nv = static_cast<Eigen::Index>(g.vertex_grid.size());
    Eigen::MatrixXd out(3 * nv, per_point.cols());
    for (Eigen::Index v = 0; v < nv; ++v)
    {
        out.middleRows(3 * v, 3) = per_point.middleRows(3 * g.vertex_grid[v], 3);
    }
    return out;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

/// Largest per-vertex displacement norm of a column.
double max_vertex_norm(const Eigen::VectorXd& col)
{
    double best = 0.0;
    for (Eigen::Index v = 0; v < col.size() / 3; ++v)
    {
        best = std::max(best, col.segment<3>(3 * v).norm());
    }
    return best;
}

} // namespace

MorphableModel generate_toy_model(std::uint64_t seed, int target_vertices)
{
    if (target_vertices < 200)
    {
        throw InvalidArgument("toy model needs at least 200 vertices, got " + std::to_string(target_vertices));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::array<double, 6> phases{};
    for (auto& p : phases)
    {
        p = phase(rng);
    }

    int n = std::max(8, static_cast<int>(std::sqrt(target_vertices * 4.0 / std::numbers::pi)) - 4);
    Grid g = build_grid(n);
    while (static_cast<int>(g.vertex_grid.size()) < target_vertices)
    {
        g = build_grid(++n);
    }

    MorphableModel model;
    const auto nv = static_cast<Eigen::Index>(g.vertex_grid.size());
    model.mean_shape.resize(3 * nv);
    model.mean_texture.resize(3 * nv);
    for (Eigen::Index v = 0; v < nv; ++v)
    {
        const auto& p = g.uv[g.vertex_grid[v]];
        model.mean_shape.segment<3>(3 * v) = Eigen::Vector3d(kHalfWidth * p[0], kHalfHeight * p[1], -face_depth(p[0], p[1]));
        model.mean_texture.segment<3>(3 * v) = albedo(p[0], p[1], phases);
    }
    model.triangles = g.triangles;
    model.region_labels = g.vertex_labels;

    const auto pts = as_points(model.mean_shape);
    const double diagonal = (pts.rowwise().maxCoeff() - pts.rowwise().minCoeff()).norm();

    const int k_shape = kIdentityDims + kExpressionDims;
    Eigen::MatrixXd shape_fields(3 * static_cast<Eigen::Index>(g.uv.size()), k_shape);
    shape_fields.leftCols(kIdentityDims) = smooth_fields(g, kIdentityDims, 0, k_shape, false, rng);
    shape_fields.rightCols(kExpressionDims) = smooth_fields(g, kExpressionDims, 0, k_shape, true, rng);
    Eigen::MatrixXd shape_basis = orthonormal_columns(expand_rows(g, shape_fields));
    for (int k = 0; k < k_shape; ++k)
    {
        const int rank = k < kIdentityDims ? k : k - kIdentityDims;
        const double decay = 1.0 / (1.0 + rank / 10.0);
        shape_basis.col(k) *= 0.15 * diagonal * decay / (3.0 * max_vertex_norm(shape_basis.col(k)));
    }
    model.basis_id = shape_basis.leftCols(kIdentityDims);
    model.basis_exp = shape_basis.rightCols(kExpressionDims);

    Eigen::MatrixXd tex_basis = orthonormal_columns(expand_rows(g, smooth_fields(g, kTextureDims, 0, kTextureDims, false, rng)));
    for (int k = 0; k < kTextureDims; ++k)
    {
        const double decay = 1.0 / (1.0 + k / 10.0);
        tex_basis.col(k) *= 0.25 * decay / (3.0 * tex_basis.col(k).cwiseAbs().maxCoeff());
    }
    model.basis_tex = tex_basis;

    for (const auto& uv : landmark_layout_68())
    {
        model.landmarks_68.push_back(nearest_vertex(g, uv[0], uv[1]));
    }
    model.landmarks_101 = model.landmarks_68;
    for (const auto& uv : extra_landmark_layout_33())
    {
        model.landmarks_101.push_back(nearest_vertex(g, uv[0], uv[1]));
    }
    for (const int i : {36, 39, 42, 45, 30, 48, 54})
    {
        model.align_7.push_back(model.landmarks_68[i]);
    }

    // Nose tip: the most protruding grid point.
    double best_depth = -std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < nv; ++v)
    {
        const double depth = -model.mean_shape(3 * v + 2);
        if (depth > best_depth)
        {
            best_depth = depth;
            model.crop_center = g.first_vertex.at(g.vertex_grid[v]);
        }
    }
    return model;
}

} // namespace dfmvr
