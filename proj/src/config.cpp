/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/config.cpp
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
#include "dfmvr/config.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/params_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace dfmvr {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
    {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value)
{
    Int v{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    {
        throw InvalidArgument("setting " + key + ": '" + value + "' is not an integer");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "1" || value == "true" || value == "yes" || value == "on")
    {
        return true;
    }
    if (value == "0" || value == "false" || value == "no" || value == "off")
    {
        return false;
    }
    throw InvalidArgument("setting " + key + ": '" + value + "' is not a boolean");
}

} // namespace

std::pair<std::string, std::string> split_setting(const std::string& line)
{
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
        throw InvalidArgument("expected key=value, got '" + line + "'");
    }
    return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

void apply_setting(FitConfig& cfg, const std::string& key, const std::string& value)
{
    auto real = [&] { return parse_double(value, "setting " + key); };
    LossWeights& w = cfg.weights;
    if (key == "iterations")
        cfg.iterations = parse_int<int>(key, value);
    else if (key == "step_size")
        cfg.step_size = real();
    else if (key == "beta1")
        cfg.beta1 = real();
    else if (key == "beta2")
        cfg.beta2 = real();
    else if (key == "epsilon")
        cfg.epsilon = real();
    else if (key == "clip_norm")
        cfg.clip_norm = real();
    else if (key == "tolerance")
        cfg.tolerance = real();
    else if (key == "seed")
        cfg.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "translation_scale")
        cfg.translation_scale = real();
    else if (key == "decay_start")
        cfg.decay_start = real();
    else if (key == "dilation_radius")
        cfg.dilation_radius = parse_int<int>(key, value);
    else if (key == "pose_iterations")
        cfg.pose_iterations = parse_int<int>(key, value);
    else if (key == "pose_step_size")
        cfg.pose_step_size = real();
    else if (key == "stage_order")
    {
        if (value == "landmarks-first")
            cfg.stage_order = StageOrder::landmarks_first;
        else if (value == "joint-first")
            cfg.stage_order = StageOrder::joint_first;
        else
            throw InvalidArgument("setting stage_order: expected landmarks-first or joint-first, got '" + value + "'");
    }
    else if (key == "use_3d")
        w.use_3d = parse_bool(key, value);
    else if (key == "w_photo")
        w.photo = real();
    else if (key == "w_mask")
        w.mask = real();
    else if (key == "w_landmark")
        w.landmark = real();
    else if (key == "w_2d")
        w.landmark2d = real();
    else if (key == "w_3d")
        w.landmark3d = real();
    else if (key == "w_reg")
        w.reg = real();
    else if (key == "w_alpha")
        w.alpha = real();
    else if (key == "w_beta")
        w.beta = real();
    else if (key == "w_gamma")
        w.gamma = real();
    else
        throw InvalidArgument("unknown setting '" + key + "'");
}

void apply_config_text(FitConfig& cfg, const std::string& text, const std::string& source)
{
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw))
    {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#')
        {
            continue;
        }
        try
        {
            const auto [key, value] = split_setting(line);
            apply_setting(cfg, key, value);
        } catch (const InvalidArgument& e)
        {
            throw InvalidArgument(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(FitConfig& cfg, const std::filesystem::path& path)
{
    apply_config_text(cfg, read_text_file(path), path.string());
}

std::string format_fit_config(const FitConfig& cfg)
{
    const LossWeights& w = cfg.weights;
    std::string out;
    auto put = [&out](const char* key, const std::string& value) { out += std::string(key) + "=" + value + "\n"; };
    put("iterations", std::to_string(cfg.iterations));
    put("step_size", format_double(cfg.step_size));
    put("beta1", format_double(cfg.beta1));
    put("beta2", format_double(cfg.beta2));
    put("epsilon", format_double(cfg.epsilon));
    put("clip_norm", format_double(cfg.clip_norm));
    put("tolerance", format_double(cfg.tolerance));
    put("seed", std::to_string(cfg.seed));
    put("translation_scale", format_double(cfg.translation_scale));
    put("decay_start", format_double(cfg.decay_start));
    put("dilation_radius", std::to_string(cfg.dilation_radius));
    put("pose_iterations", std::to_string(cfg.pose_iterations));
    put("pose_step_size", format_double(cfg.pose_step_size));
    put("stage_order", cfg.stage_order == StageOrder::landmarks_first ? "landmarks-first" : "joint-first");
    put("use_3d", w.use_3d ? "true" : "false");
    put("w_photo", format_double(w.photo));
    put("w_mask", format_double(w.mask));
    put("w_landmark", format_double(w.landmark));
    put("w_2d", format_double(w.landmark2d));
    put("w_3d", format_double(w.landmark3d));
    put("w_reg", format_double(w.reg));
    put("w_alpha", format_double(w.alpha));
    put("w_beta", format_double(w.beta));
    put("w_gamma", format_double(w.gamma));
    return out;
}

} // namespace dfmvr
