/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/params_io.cpp
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
#include "dfmvr/params_io.hpp"
#include "dfmvr/binary_io.hpp"
#include "dfmvr/errors.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace dfmvr {

std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

double parse_double(const std::string& token, const std::string& context)
{
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    {
        throw InvalidArgument(context + ": cannot parse '" + token + "' as a number");
    }
    return v;
}

std::string read_text_file(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

void append_vector(std::string& out, const char* name, const Eigen::VectorXd& v)
{
    out += name;
    out += ' ' + std::to_string(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        out += ' ' + format_double(v(i));
    }
    out += '\n';
}

Eigen::VectorXd read_vector(std::istringstream& line, const std::string& name)
{
    long long n = -1;
    if (!(line >> n) || n < 0)
    {
        throw InvalidArgument("parameter file: bad length for " + name);
    }
    Eigen::VectorXd v(n);
    std::string tok;
    for (long long i = 0; i < n; ++i)
    {
        if (!(line >> tok))
        {
            throw InvalidArgument("parameter file: " + name + " has fewer than " + std::to_string(n) + " values");
        }
        v(i) = parse_double(tok, "parameter file " + name);
    }
    if (line >> tok)
    {
        throw InvalidArgument("parameter file: " + name + " has more than " + std::to_string(n) + " values");
    }
    return v;
}

} // namespace

std::string format_params(const FaceParams& params)
{
    std::string out;
    append_vector(out, "alpha", params.alpha);
    append_vector(out, "beta", params.beta);
    append_vector(out, "gamma", params.gamma);
    out += "views " + std::to_string(params.poses.size()) + "\n";
    for (std::size_t v = 0; v < params.poses.size(); ++v)
    {
        const auto& p = params.poses[v];
        out += "pose " + std::to_string(v);
        for (const double x : {p.pitch, p.yaw, p.roll, p.translation.x(), p.translation.y(), p.translation.z()})
        {
            out += ' ' + format_double(x);
        }
        out += '\n';
    }
    return out;
}

FaceParams parse_params(const std::string& text)
{
    FaceParams params;
    std::istringstream in(text);
    std::string raw;
    bool seen[4] = {false, false, false, false};
    std::vector<bool> pose_seen;
    while (std::getline(in, raw))
    {
        std::istringstream line(raw);
        std::string key;
        if (!(line >> key) || key[0] == '#')
        {
            continue;
        }
        if (key == "alpha" || key == "beta" || key == "gamma")
        {
            const int slot = key == "alpha" ? 0 : key == "beta" ? 1 : 2;
            (slot == 0 ? params.alpha : slot == 1 ? params.beta : params.gamma) = read_vector(line, key);
            seen[slot] = true;
        } else if (key == "views")
        {
            int n = -1;
            if (!(line >> n) || n < 1)
            {
                throw InvalidArgument("parameter file: bad view count");
            }
            params.poses.assign(n, ViewPose{});
            pose_seen.assign(n, false);
            seen[3] = true;
        } else if (key == "pose")
        {
            int v = -1;
            if (!(line >> v) || v < 0 || v >= static_cast<int>(params.poses.size()))
            {
                throw InvalidArgument("parameter file: pose line before 'views' or with a bad view index");
            }
            double x[6];
            std::string tok;
            for (double& value : x)
            {
                if (!(line >> tok))
                {
                    throw InvalidArgument("parameter file: pose " + std::to_string(v) + " needs 6 values");
                }
                value = parse_double(tok, "parameter file pose " + std::to_string(v));
            }
            params.poses[v] = ViewPose{x[0], x[1], x[2], Eigen::Vector3d(x[3], x[4], x[5])};
            pose_seen[v] = true;
        } else
        {
            throw InvalidArgument("parameter file: unknown key '" + key + "'");
        }
    }
    for (int k = 0; k < 4; ++k)
    {
        if (!seen[k])
        {
            static const char* names[4] = {"alpha", "beta", "gamma", "views"};
            throw InvalidArgument(std::string("parameter file: missing ") + names[k]);
        }
    }
    for (std::size_t v = 0; v < pose_seen.size(); ++v)
    {
        if (!pose_seen[v])
        {
            throw InvalidArgument("parameter file: missing pose for view " + std::to_string(v));
        }
    }
    return params;
}

void write_params(const std::filesystem::path& path, const FaceParams& params)
{
    write_text_file(path, format_params(params));
}

FaceParams read_params(const std::filesystem::path& path)
{
    try
    {
        return parse_params(read_text_file(path));
    } catch (const InvalidArgument& e)
    {
        throw IoError(path.string() + ": " + e.what());
    }
}

namespace {

template <int Rows>
void write_points(const std::filesystem::path& path, const Eigen::Matrix<double, Rows, Eigen::Dynamic>& points)
{
    std::string out;
    for (Eigen::Index i = 0; i < points.cols(); ++i)
    {
        for (int r = 0; r < Rows; ++r)
        {
            out += (r ? " " : "") + format_double(points(r, i));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

template <int Rows>
Eigen::Matrix<double, Rows, Eigen::Dynamic> read_points(const std::filesystem::path& path)
{
    std::istringstream in(read_text_file(path));
    std::vector<double> values;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw))
    {
        ++lineno;
        std::istringstream line(raw);
        std::vector<std::string> tok;
        for (std::string t; line >> t;)
        {
            tok.push_back(t);
        }
        if (tok.empty())
        {
            continue;
        }
        if (static_cast<int>(tok.size()) != Rows)
        {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(Rows) +
                          " coordinates");
        }
        for (const auto& t : tok)
        {
            try
            {
                values.push_back(parse_double(t, path.string() + ":" + std::to_string(lineno)));
            } catch (const InvalidArgument& e)
            {
                throw IoError(e.what());
            }
        }
    }
    return Eigen::Map<const Eigen::Matrix<double, Rows, Eigen::Dynamic>>(values.data(), Rows,
                                                                         static_cast<Eigen::Index>(values.size() / Rows));
}

} // namespace

void write_landmarks(const std::filesystem::path& path, const Eigen::Matrix2Xd& points)
{
    write_points<2>(path, points);
}

Eigen::Matrix2Xd read_landmarks2d(const std::filesystem::path& path)
{
    return read_points<2>(path);
}

void write_landmarks(const std::filesystem::path& path, const Eigen::Matrix3Xd& points)
{
    write_points<3>(path, points);
}

Eigen::Matrix3Xd read_landmarks3d(const std::filesystem::path& path)
{
    return read_points<3>(path);
}

void write_camera(const std::filesystem::path& path, const CameraIntrinsics& cam)
{
    std::string out;
    out += "focal=" + format_double(cam.focal) + "\n";
    out += "cx=" + format_double(cam.cx) + "\n";
    out += "cy=" + format_double(cam.cy) + "\n";
    out += "width=" + std::to_string(cam.width) + "\n";
    out += "height=" + std::to_string(cam.height) + "\n";
    out += "near=" + format_double(cam.near) + "\n";
    write_text_file(path, out);
}

CameraIntrinsics read_camera(const std::filesystem::path& path)
{
    std::istringstream in(read_text_file(path));
    CameraIntrinsics cam;
    std::string raw;
    try
    {
        while (std::getline(in, raw))
        {
            if (raw.empty() || raw[0] == '#')
            {
                continue;
            }
            const auto eq = raw.find('=');
            if (eq == std::string::npos)
            {
                throw InvalidArgument("expected key=value, got '" + raw + "'");
            }
            const std::string key = raw.substr(0, eq), value = raw.substr(eq + 1);
            const double v = parse_double(value, key);
            if (key == "focal")
                cam.focal = v;
            else if (key == "cx")
                cam.cx = v;
            else if (key == "cy")
                cam.cy = v;
            else if (key == "width")
                cam.width = static_cast<int>(v);
            else if (key == "height")
                cam.height = static_cast<int>(v);
            else if (key == "near")
                cam.near = v;
            else
                throw InvalidArgument("unknown camera key '" + key + "'");
        }
        validate(cam);
    } catch (const InvalidArgument& e)
    {
        throw IoError(path.string() + ": " + e.what());
    }
    return cam;
}

} // namespace dfmvr
