/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/config.hpp
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

#ifndef DFMVR_CONFIG_HPP
#define DFMVR_CONFIG_HPP

#include "dfmvr/fitter.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dfmvr {

/**
 * Applies one key=value setting to a fit configuration.
 *
 * Keys: iterations, step_size, beta1, beta2, epsilon, clip_norm, tolerance,
 * seed, translation_scale, decay_start, dilation_radius, pose_iterations,
 * pose_step_size, stage_order (landmarks-first | joint-first), use_3d, and the
 * loss weights w_photo, w_mask, w_landmark, w_2d, w_3d, w_reg, w_alpha,
 * w_beta, w_gamma. Throws InvalidArgument on unknown keys or bad values.
 */
void apply_setting(FitConfig& cfg, const std::string& key, const std::string& value);

/// Splits "key=value"; throws InvalidArgument without '='.
std::pair<std::string, std::string> split_setting(const std::string& line);

/// key=value lines; blank lines and '#' comments are skipped. source names the origin in errors.
void apply_config_text(FitConfig& cfg, const std::string& text, const std::string& source);
void apply_config_file(FitConfig& cfg, const std::filesystem::path& path);

/// Every key with its current value, in apply_setting syntax.
std::string format_fit_config(const FitConfig& cfg);

} // namespace dfmvr

#endif // DFMVR_CONFIG_HPP
