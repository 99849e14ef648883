/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: tools/dfmvr_main.cpp
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
#include "dfmvr/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    using namespace dfmvr;
    CLI::App app{"dfmvr - multi-view 3D face reconstruction toolkit"};
    app.require_subcommand(1);

    GenToyArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-toy", "Generate a toy model and a synthetic 3-view observation bundle");
    gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--vertices,-V", gen.vertices, "Minimum number of model vertices")->capture_default_str();
    gen_cmd->add_option("--size", gen.image_size, "Image width and height in pixels")->capture_default_str();
    gen_cmd->add_option("--out,-o", gen.out, "Output directory")->required();

    FitArgs fit;
    std::string config_path, init_path;
    auto* fit_cmd = app.add_subcommand("fit", "Fit model parameters to an observation bundle");
    fit_cmd->add_option("--model,-m", fit.model, "DFM1 model file")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--obs", fit.observation, "Observation bundle directory")->required()->check(CLI::ExistingDirectory);
    fit_cmd->add_option("--out,-o", fit.out, "Output directory")->required();
    fit_cmd->add_option("--config,-c", config_path, "key=value configuration file")->check(CLI::ExistingFile);
    fit_cmd->add_option("--init", init_path, "Initial parameter file")->check(CLI::ExistingFile);
    fit_cmd->add_option("--set", fit.settings, "Override a configuration key (key=value), repeatable");
    fit_cmd->add_flag("--no-3d", fit.no_3d, "Disable the 3D landmark loss");

    RenderArgs render;
    std::string camera_path;
    auto* render_cmd = app.add_subcommand("render", "Render one view of a parameter file");
    render_cmd->add_option("--model,-m", render.model, "DFM1 model file")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--params,-p", render.params, "Parameter file")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--view", render.view, "View index")->capture_default_str();
    render_cmd->add_option("--camera", camera_path, "Camera file (default: conventional camera)")->check(CLI::ExistingFile);
    render_cmd->add_option("--size", render.image_size, "Image size when no camera file is given")->capture_default_str();
    render_cmd->add_option("--out,-o", render.out, "Output directory")->required();

    EvaluateArgs eval;
    std::string errmap_path;
    int center = -1;
    bool no_icp = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Register a prediction to ground truth and report point-to-plane RMSE");
    eval_cmd->add_option("pred", eval.pred, "Predicted mesh (.obj or .ply)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("gt", eval.gt, "Ground-truth mesh (.obj or .ply)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--radius", eval.radius, "Crop radius in model units")->capture_default_str();
    eval_cmd->add_option("--center", center, "Ground-truth crop center vertex (default: smallest z)");
    eval_cmd->add_flag("--no-icp", no_icp, "Meshes are already registered");
    eval_cmd->add_option("--errmap", errmap_path, "Also write an error-colored mesh");
    eval_cmd->add_option("--scale-max", eval.scale_max, "Error that maps to red")->capture_default_str();

    ErrmapArgs errmap;
    bool errmap_no_icp = false;
    auto* errmap_cmd = app.add_subcommand("errmap", "Write a per-vertex error-colored mesh");
    errmap_cmd->add_option("pred", errmap.pred, "Predicted mesh")->required()->check(CLI::ExistingFile);
    errmap_cmd->add_option("gt", errmap.gt, "Ground-truth mesh")->required()->check(CLI::ExistingFile);
    errmap_cmd->add_option("--out,-o", errmap.out, "Output mesh (.obj or .ply)")->required();
    errmap_cmd->add_option("--scale-max", errmap.scale_max, "Error that maps to red")->capture_default_str();
    errmap_cmd->add_flag("--no-icp", errmap_no_icp, "Meshes are already registered");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    if (*gen_cmd)
    {
        return cmd_gen_toy(gen, std::cout, std::cerr);
    }
    if (*fit_cmd)
    {
        if (!config_path.empty())
            fit.config = config_path;
        if (!init_path.empty())
            fit.init = init_path;
        return cmd_fit(fit, std::cout, std::cerr);
    }
    if (*render_cmd)
    {
        if (!camera_path.empty())
            render.camera = camera_path;
        return cmd_render(render, std::cout, std::cerr);
    }
    if (*eval_cmd)
    {
        if (center >= 0)
            eval.center = center;
        if (!errmap_path.empty())
            eval.errmap = errmap_path;
        eval.register_first = !no_icp;
        return cmd_evaluate(eval, std::cout, std::cerr);
    }
    errmap.register_first = !errmap_no_icp;
    return cmd_errmap(errmap, std::cout, std::cerr);
}
