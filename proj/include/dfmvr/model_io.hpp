/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/model_io.hpp
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

#ifndef DFMVR_MODEL_IO_HPP
#define DFMVR_MODEL_IO_HPP

#include "dfmvr/morphable_model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dfmvr {

/**
 * Encodes a model in the DFM1 container.
 *
 * Little-endian layout: magic "DFM1", u32 version (1), u32 V, F, K_id, K_exp,
 * K_tex, n_lm68, n_lm101, n_align; f32 mean_shape, mean_texture, basis_id,
 * basis_exp, basis_tex (bases column-major); u32 triangles (F x 3), landmarks_68,
 * landmarks_101, align_7, crop_center; u8 region labels (V).
 *
 * Float fields are narrowed to f32.
 */
std::vector<std::uint8_t> serialize_model(const MorphableModel& model);

/// Throws IoError on a malformed container and InvalidArgument if the decoded model is invalid.
MorphableModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_model(const std::filesystem::path& path);

} // namespace dfmvr

#endif // DFMVR_MODEL_IO_HPP
