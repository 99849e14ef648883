/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/params_io.hpp
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

#ifndef DFMVR_PARAMS_IO_HPP
#define DFMVR_PARAMS_IO_HPP

#include "dfmvr/camera.hpp"
#include "dfmvr/morphable_model.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <string>

namespace dfmvr {

/**
 * Text parameter file:
 *
 *   alpha <n> v...
 *   beta <n> v...
 *   gamma <n> v...
 *   views <V>
 *   pose <i> pitch yaw roll tx ty tz     (one line per view, angles in radians)
 *
 * Numbers use the shortest round-trip decimal form, so write then read is exact.
 */
std::string format_params(const FaceParams& params);
FaceParams parse_params(const std::string& text);
void write_params(const std::filesystem::path& path, const FaceParams& params);
FaceParams read_params(const std::filesystem::path& path);

/// One "x y" (or "x y z") line per landmark.
void write_landmarks(const std::filesystem::path& path, const Eigen::Matrix2Xd& points);
Eigen::Matrix2Xd read_landmarks2d(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, const Eigen::Matrix3Xd& points);
Eigen::Matrix3Xd read_landmarks3d(const std::filesystem::path& path);

/// key=value lines: focal, cx, cy, width, height, near.
void write_camera(const std::filesystem::path& path, const CameraIntrinsics& cam);
CameraIntrinsics read_camera(const std::filesystem::path& path);

/// Shortest decimal that parses back to v.
std::string format_double(double v);
/// Strict parse of a whole token; throws InvalidArgument naming the context.
double parse_double(const std::string& token, const std::string& context);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace dfmvr

#endif // DFMVR_PARAMS_IO_HPP
