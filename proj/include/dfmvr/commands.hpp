/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/commands.hpp
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

#ifndef DFMVR_COMMANDS_HPP
#define DFMVR_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dfmvr {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct GenToyArgs
{
    std::uint64_t seed = 1;
    int vertices = 2000;
    int image_size = 128;
    std::filesystem::path out;
};

/**
 * Writes model.dfm, the observation bundle (camera.txt, view<i>.ppm, mask<i>.pgm,
 * landmarks<i>.txt, landmarks3d.txt), gt_params.txt, init_params.txt and
 * gt_mesh.obj into out. Views are rendered from the model as stored on disk.
 */
int cmd_gen_toy(const GenToyArgs& args, std::ostream& out, std::ostream& err);

struct FitArgs
{
    std::filesystem::path model;
    std::filesystem::path observation;
    std::filesystem::path out;
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> init;
    /// key=value settings applied after the config file.
    std::vector<std::string> settings;
    bool no_3d = false;
};

/**
 * staged_fit on a bundle; writes params.txt, fitted.obj, trace.csv and
 * pose_trace.csv into out. Returns 0 when the fit converged and 2 otherwise.
 */
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);

struct RenderArgs
{
    std::filesystem::path model;
    std::filesystem::path params;
    int view = 0;
    std::filesystem::path out;
    /// Camera file; defaults to the conventional camera at image_size.
    std::optional<std::filesystem::path> camera;
    int image_size = 128;
};

/// Writes render.ppm, coverage.pgm (0/255), depth.pgm (16-bit, model units, 0 where uncovered) and mask.pgm.
int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err);

struct EvaluateArgs
{
    std::filesystem::path pred;
    std::filesystem::path gt;
    double radius = 95.0;
    /// gt crop center vertex; defaults to the gt vertex with the smallest z.
    std::optional<int> center;
    bool register_first = true;
    std::optional<std::filesystem::path> errmap;
    double scale_max = 5.0;
};

/// Prints icp_residual_mm=<v> and rmse_mm=<v> lines (6 decimals).
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

struct ErrmapArgs
{
    std::filesystem::path pred;
    std::filesystem::path gt;
    std::filesystem::path out;
    double scale_max = 5.0;
    bool register_first = true;
};

/// Writes the registered prediction colored by point-to-plane error; prints max_error_mm=<v>.
int cmd_errmap(const ErrmapArgs& args, std::ostream& out, std::ostream& err);

} // namespace dfmvr

#endif // DFMVR_COMMANDS_HPP
