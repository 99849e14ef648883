/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/model_io.cpp
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
#include "dfmvr/model_io.hpp"
#include "dfmvr/binary_io.hpp"
#include "dfmvr/errors.hpp"

#include <fstream>
#include <iterator>

namespace dfmvr {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
    {
        throw IoError("failed writing " + path.string());
    }
}

namespace {

constexpr std::uint32_t kVersion = 1;

void write_floats(ByteWriter& w, const Eigen::MatrixXd& m)
{
    // Eigen default storage is column-major, which is the container's order.
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        w.f32(static_cast<float>(m.data()[i]));
    }
}

Eigen::MatrixXd read_floats(ByteReader& r, Eigen::Index rows, Eigen::Index cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
    {
        m.data()[i] = r.f32();
    }
    return m;
}

std::vector<int> read_indices(ByteReader& r, std::size_t n)
{
    std::vector<int> out(n);
    for (auto& v : out)
    {
        v = static_cast<int>(r.u32());
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> serialize_model(const MorphableModel& model)
{
    ByteWriter w;
    w.tag("DFM1");
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(model.num_vertices()));
    w.u32(static_cast<std::uint32_t>(model.num_triangles()));
    w.u32(static_cast<std::uint32_t>(model.basis_id.cols()));
    w.u32(static_cast<std::uint32_t>(model.basis_exp.cols()));
    w.u32(static_cast<std::uint32_t>(model.basis_tex.cols()));
    w.u32(static_cast<std::uint32_t>(model.landmarks_68.size()));
    w.u32(static_cast<std::uint32_t>(model.landmarks_101.size()));
    w.u32(static_cast<std::uint32_t>(model.align_7.size()));
    write_floats(w, model.mean_shape);
    write_floats(w, model.mean_texture);
    write_floats(w, model.basis_id);
    write_floats(w, model.basis_exp);
    write_floats(w, model.basis_tex);
    for (const auto& tri : model.triangles)
    {
        for (const int i : tri)
        {
            w.u32(static_cast<std::uint32_t>(i));
        }
    }
    for (const auto* list : {&model.landmarks_68, &model.landmarks_101, &model.align_7})
    {
        for (const int i : *list)
        {
            w.u32(static_cast<std::uint32_t>(i));
        }
    }
    w.u32(static_cast<std::uint32_t>(model.crop_center));
    for (const auto label : model.region_labels)
    {
        w.u8(label);
    }
    return w.take();
}

MorphableModel deserialize_model(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    if (r.tag() != "DFM1")
    {
        throw IoError("not a DFM1 model container");
    }
    if (const auto version = r.u32(); version != kVersion)
    {
        throw IoError("unsupported DFM1 version " + std::to_string(version));
    }
    const std::uint32_t nv = r.u32(), nf = r.u32(), k_id = r.u32(), k_exp = r.u32(), k_tex = r.u32();
    const std::uint32_t n68 = r.u32(), n101 = r.u32(), n_align = r.u32();
    const std::size_t expected = 4ull * (6ull * nv + 3ull * nv * (k_id + k_exp + k_tex)) +
                                 4ull * (3ull * nf + n68 + n101 + n_align + 1) + nv;
    if (r.remaining() != expected)
    {
        throw IoError("DFM1 payload size does not match its header");
    }
    MorphableModel m;
    const Eigen::Index rows = 3 * static_cast<Eigen::Index>(nv);
    m.mean_shape = read_floats(r, rows, 1);
    m.mean_texture = read_floats(r, rows, 1);
    m.basis_id = read_floats(r, rows, k_id);
    m.basis_exp = read_floats(r, rows, k_exp);
    m.basis_tex = read_floats(r, rows, k_tex);
    m.triangles.resize(nf);
    for (auto& tri : m.triangles)
    {
        for (auto& i : tri)
        {
            i = static_cast<int>(r.u32());
        }
    }
    m.landmarks_68 = read_indices(r, n68);
    m.landmarks_101 = read_indices(r, n101);
    m.align_7 = read_indices(r, n_align);
    m.crop_center = static_cast<int>(r.u32());
    m.region_labels.resize(nv);
    for (auto& label : m.region_labels)
    {
        label = r.u8();
    }
    validate(m);
    return m;
}

void save_model(const MorphableModel& model, const std::filesystem::path& path)
{
    write_file_bytes(path, serialize_model(model));
}

MorphableModel load_model(const std::filesystem::path& path)
{
    return deserialize_model(read_file_bytes(path));
}

} // namespace dfmvr
