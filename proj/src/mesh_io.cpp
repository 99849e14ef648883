/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/mesh_io.cpp
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
#include "dfmvr/binary_io.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/mesh.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace dfmvr {

namespace {

static_assert(std::endian::native == std::endian::little, "PLY I/O copies little-endian scalars directly");

// Shortest representation that parses back to the same double.
void put_double(std::string& out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(std::string_view s, const std::filesystem::path& path, int line)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    {
        throw IoError(path.string() + ":" + std::to_string(line) + ": malformed number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size())
    {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
        {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
        {
            ++i;
        }
        if (i > start)
        {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

std::uint8_t to_byte(double c)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

} // namespace

void write_obj(const std::filesystem::path& path, const Mesh& mesh)
{
    validate(mesh);
    const bool colored = mesh.colors.cols() == mesh.num_vertices() && mesh.num_vertices() > 0;
    std::string out;
    out.reserve(static_cast<std::size_t>(mesh.num_vertices()) * 64 + mesh.triangles.size() * 24);
    for (int v = 0; v < mesh.num_vertices(); ++v)
    {
        out += "v";
        for (int k = 0; k < 3; ++k)
        {
            out += ' ';
            put_double(out, mesh.vertices(k, v));
        }
        if (colored)
        {
            for (int k = 0; k < 3; ++k)
            {
                out += ' ';
                put_double(out, mesh.colors(k, v));
            }
        }
        out += '\n';
    }
    for (const auto& t : mesh.triangles)
    {
        out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    }
    write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(out.data()), out.size()));
}

Mesh read_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open " + path.string());
    }
    std::vector<double> pos, col;
    bool any_plain = false;
    Mesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0][0] == '#')
        {
            continue;
        }
        if (tok[0] == "v")
        {
            if (tok.size() != 4 && tok.size() != 7)
            {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": vertex needs 3 or 6 values");
            }
            for (int k = 1; k <= 3; ++k)
            {
                pos.push_back(parse_double(tok[k], path, lineno));
            }
            if (tok.size() == 7)
            {
                for (int k = 4; k <= 6; ++k)
                {
                    col.push_back(parse_double(tok[k], path, lineno));
                }
            } else
            {
                any_plain = true;
            }
        } else if (tok[0] == "f")
        {
            if (tok.size() < 4)
            {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": face needs at least 3 corners");
            }
            std::vector<int> idx;
            const int nv = static_cast<int>(pos.size() / 3);
            for (std::size_t k = 1; k < tok.size(); ++k)
            {
                const auto corner = tok[k].substr(0, tok[k].find('/'));
                int i = 0;
                const auto res = std::from_chars(corner.data(), corner.data() + corner.size(), i);
                if (res.ec != std::errc() || res.ptr != corner.data() + corner.size() || i == 0)
                {
                    throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed face index");
                }
                idx.push_back(i > 0 ? i - 1 : nv + i);
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k)
            {
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    mesh.vertices = Eigen::Map<const Eigen::Matrix3Xd>(pos.data(), 3, static_cast<Eigen::Index>(pos.size() / 3));
    if (!col.empty())
    {
        if (any_plain)
        {
            throw IoError(path.string() + ": vertex colors present on only some vertices");
        }
        mesh.colors = Eigen::Map<const Eigen::Matrix3Xd>(col.data(), 3, static_cast<Eigen::Index>(col.size() / 3));
    }
    try
    {
        validate(mesh);
    } catch (const InvalidMeshError& e)
    {
        throw IoError(path.string() + ": " + e.what());
    }
    return mesh;
}

void write_ply(const std::filesystem::path& path, const Mesh& mesh)
{
    validate(mesh);
    const bool colored = mesh.colors.cols() == mesh.num_vertices() && mesh.num_vertices() > 0;
    const bool with_normals = mesh.normals.cols() == mesh.num_vertices() && mesh.num_vertices() > 0;
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << mesh.num_vertices()
           << "\nproperty double x\nproperty double y\nproperty double z\n";
    if (with_normals)
    {
        header << "property double nx\nproperty double ny\nproperty double nz\n";
    }
    if (colored)
    {
        header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    header << "element face " << mesh.num_triangles() << "\nproperty list uchar int vertex_indices\nend_header\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    auto put = [&bytes](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    };
    for (int v = 0; v < mesh.num_vertices(); ++v)
    {
        for (int k = 0; k < 3; ++k)
        {
            put(&mesh.vertices(k, v), 8);
        }
        if (with_normals)
        {
            for (int k = 0; k < 3; ++k)
            {
                put(&mesh.normals(k, v), 8);
            }
        }
        if (colored)
        {
            for (int k = 0; k < 3; ++k)
            {
                bytes.push_back(to_byte(mesh.colors(k, v)));
            }
        }
    }
    for (const auto& t : mesh.triangles)
    {
        bytes.push_back(3);
        for (const int i : t)
        {
            const std::int32_t i32 = i;
            put(&i32, 4);
        }
    }
    write_file_bytes(path, bytes);
}

namespace {

struct PlyProperty
{
    std::string name;
    std::string type;
    bool is_list = false;
    std::string count_type;
};

struct PlyElement
{
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

std::size_t type_size(const std::string& t)
{
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8")
        return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16")
        return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32")
        return 4;
    if (t == "double" || t == "float64")
        return 8;
    return 0;
}

double read_scalar(const std::uint8_t* p, const std::string& t)
{
    auto load = [p](auto v) {
        std::memcpy(&v, p, sizeof(v));
        return static_cast<double>(v);
    };
    if (t == "char" || t == "int8")
        return load(std::int8_t{});
    if (t == "uchar" || t == "uint8")
        return load(std::uint8_t{});
    if (t == "short" || t == "int16")
        return load(std::int16_t{});
    if (t == "ushort" || t == "uint16")
        return load(std::uint16_t{});
    if (t == "int" || t == "int32")
        return load(std::int32_t{});
    if (t == "uint" || t == "uint32")
        return load(std::uint32_t{});
    if (t == "float" || t == "float32")
        return load(float{});
    return load(double{});
}

} // namespace

Mesh read_ply(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    const std::string marker = "end_header\n";
    const auto it = std::search(bytes.begin(), bytes.end(), marker.begin(), marker.end());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "ply\n", 4) != 0 || it == bytes.end())
    {
        throw IoError(path.string() + ": not a PLY file");
    }
    std::istringstream header(std::string(bytes.begin(), it));
    std::vector<PlyElement> elements;
    std::string line;
    while (std::getline(header, line))
    {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format")
        {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
            {
                throw IoError(path.string() + ": only binary_little_endian PLY is supported");
            }
        } else if (key == "element")
        {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (key == "property")
        {
            if (elements.empty())
            {
                throw IoError(path.string() + ": property before element");
            }
            PlyProperty p;
            ls >> p.type;
            if (p.type == "list")
            {
                p.is_list = true;
                ls >> p.count_type >> p.type;
            }
            ls >> p.name;
            if (type_size(p.type) == 0 || (p.is_list && type_size(p.count_type) == 0))
            {
                throw IoError(path.string() + ": unknown PLY type in '" + line + "'");
            }
            elements.back().props.push_back(p);
        }
    }

    Mesh mesh;
    std::size_t pos = static_cast<std::size_t>(it - bytes.begin()) + marker.size();
    auto need = [&](std::size_t n) {
        if (pos + n > bytes.size())
        {
            throw IoError(path.string() + ": truncated PLY body");
        }
    };
    for (const auto& e : elements)
    {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        std::vector<double> xyz, nrm, rgb;
        bool has_n = false, has_c = false;
        for (std::size_t i = 0; i < e.count; ++i)
        {
            double v[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (const auto& p : e.props)
            {
                if (p.is_list)
                {
                    const std::size_t cs = type_size(p.count_type), ts = type_size(p.type);
                    need(cs);
                    const auto n = static_cast<std::size_t>(read_scalar(&bytes[pos], p.count_type));
                    pos += cs;
                    need(n * ts);
                    std::vector<int> idx(n);
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        idx[k] = static_cast<int>(read_scalar(&bytes[pos + k * ts], p.type));
                    }
                    pos += n * ts;
                    if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index"))
                    {
                        for (std::size_t k = 1; k + 1 < n; ++k)
                        {
                            mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
                        }
                    }
                    continue;
                }
                const std::size_t ts = type_size(p.type);
                need(ts);
                const double value = read_scalar(&bytes[pos], p.type);
                pos += ts;
                if (!is_vertex)
                {
                    continue;
                }
                static const char* names[9] = {"x", "y", "z", "nx", "ny", "nz", "red", "green", "blue"};
                for (int k = 0; k < 9; ++k)
                {
                    if (p.name == names[k])
                    {
                        v[k] = value;
                        has_n = has_n || (k >= 3 && k < 6);
                        has_c = has_c || k >= 6;
                    }
                }
                if (p.type == "uchar" || p.type == "uint8")
                {
                    for (int k = 6; k < 9; ++k)
                    {
                        if (p.name == names[k])
                        {
                            v[k] /= 255.0;
                        }
                    }
                }
            }
            if (is_vertex)
            {
                xyz.insert(xyz.end(), v, v + 3);
                nrm.insert(nrm.end(), v + 3, v + 6);
                rgb.insert(rgb.end(), v + 6, v + 9);
            }
        }
        if (is_vertex)
        {
            const auto n = static_cast<Eigen::Index>(e.count);
            mesh.vertices = Eigen::Map<const Eigen::Matrix3Xd>(xyz.data(), 3, n);
            if (has_n)
            {
                mesh.normals = Eigen::Map<const Eigen::Matrix3Xd>(nrm.data(), 3, n);
            }
            if (has_c)
            {
                mesh.colors = Eigen::Map<const Eigen::Matrix3Xd>(rgb.data(), 3, n);
            }
        }
    }
    try
    {
        validate(mesh);
    } catch (const InvalidMeshError& e)
    {
        throw IoError(path.string() + ": " + e.what());
    }
    return mesh;
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh)
{
    const auto ext = path.extension().string();
    if (ext == ".obj")
    {
        write_obj(path, mesh);
    } else if (ext == ".ply")
    {
        write_ply(path, mesh);
    } else
    {
        throw IoError(path.string() + ": unsupported mesh extension (use .obj or .ply)");
    }
}

Mesh read_mesh(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".obj")
    {
        return read_obj(path);
    }
    if (ext == ".ply")
    {
        return read_ply(path);
    }
    throw IoError(path.string() + ": unsupported mesh extension (use .obj or .ply)");
}

} // namespace dfmvr
