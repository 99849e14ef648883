/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: tests/test_cli_io.cpp
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
#include "test_util.hpp"

#include "dfmvr/commands.hpp"
#include "dfmvr/config.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/fitter.hpp"
#include "dfmvr/mesh.hpp"
#include "dfmvr/metrics.hpp"
#include "dfmvr/model_io.hpp"
#include "dfmvr/observation.hpp"
#include "dfmvr/params_io.hpp"
#include "dfmvr/rasterizer.hpp"

#include "gtest/gtest.h"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace dfmvr;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

/// Value of a "key=value" line in command output.
std::string output_value(const std::string& text, const std::string& key)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
    {
        if (line.rfind(key + "=", 0) == 0)
        {
            return line.substr(key.size() + 1);
        }
    }
    return {};
}

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct CmdRun
{
    int code;
    std::string out;
    std::string err;
};

template <class Args, class Fn>
CmdRun run(Fn fn, const Args& args)
{
    std::ostringstream out, err;
    const int code = fn(args, out, err);
    return {code, out.str(), err.str()};
}

GenToyArgs small_bundle_args(const fs::path& dir, std::uint64_t seed = 3)
{
    GenToyArgs a;
    a.seed = seed;
    a.vertices = 600;
    a.image_size = 64;
    a.out = dir;
    return a;
}

/// Bundle shared by the read-only tests.
const fs::path& shared_bundle()
{
    static const fs::path dir = [] {
        const fs::path d = test::scratch_dir("cli_bundle");
        const CmdRun r = run(cmd_gen_toy, small_bundle_args(d));
        if (r.code != kExitOk)
        {
            throw std::runtime_error("gen-toy failed: " + r.err);
        }
        return d;
    }();
    return dir;
}

Mesh plane_grid(int n)
{
    Mesh mesh;
    mesh.vertices.resize(3, n * n);
    for (int y = 0; y < n; ++y)
    {
        for (int x = 0; x < n; ++x)
        {
            mesh.vertices.col(y * n + x) = Eigen::Vector3d(x, y, 0);
        }
    }
    for (int y = 0; y + 1 < n; ++y)
    {
        for (int x = 0; x + 1 < n; ++x)
        {
            const int a = y * n + x;
            mesh.triangles.push_back({a, a + 1, a + n + 1});
            mesh.triangles.push_back({a, a + n + 1, a + n});
        }
    }
    return mesh;
}

} // namespace

TEST(GenToy, SameSeedIsByteIdentical)
{
    const fs::path a = test::scratch_dir("cli_gen_a"), b = test::scratch_dir("cli_gen_b");
    ASSERT_EQ(run(cmd_gen_toy, small_bundle_args(a)).code, kExitOk);
    ASSERT_EQ(run(cmd_gen_toy, small_bundle_args(b)).code, kExitOk);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a))
    {
        const fs::path other = b / entry.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(file_bytes(entry.path()), file_bytes(other)) << entry.path().filename();
        ++files;
    }
    EXPECT_EQ(files, static_cast<int>(std::distance(fs::directory_iterator(b), fs::directory_iterator{})));
    for (const char* name : {"model.dfm", "camera.txt", "gt_params.txt", "init_params.txt", "gt_mesh.obj",
                             "landmarks3d.txt", "view0.ppm", "mask2.pgm", "landmarks1.txt"})
    {
        EXPECT_TRUE(fs::exists(a / name)) << name;
    }

    const fs::path c = test::scratch_dir("cli_gen_c");
    ASSERT_EQ(run(cmd_gen_toy, small_bundle_args(c, 4)).code, kExitOk);
    EXPECT_NE(file_bytes(a / "view0.ppm"), file_bytes(c / "view0.ppm"));
}

TEST(GenToy, MasksContainAllClasses)
{
    const fs::path dir = shared_bundle();
    for (int v = 0; v < 3; ++v)
    {
        const LabelMask mask = read_mask(dir / ("mask" + std::to_string(v) + ".pgm"));
        std::array<int, 10> histogram{};
        for (const std::uint8_t l : mask.labels)
        {
            ASSERT_LT(l, 10);
            ++histogram[l];
        }
        for (int c = 0; c < 10; ++c)
        {
            EXPECT_GT(histogram[c], 0) << "view " << v << " class " << c;
        }
    }
}

TEST(GenToy, LandmarksAreProjectedModelVertices)
{
    const fs::path dir = shared_bundle();
    const MorphableModel model = load_model(dir / "model.dfm");
    const FaceParams gt = read_params(dir / "gt_params.txt");
    const CameraIntrinsics cam = read_camera(dir / "camera.txt");
    const Eigen::VectorXd shape = evaluate_shape(model, gt.alpha, gt.beta);
    const Eigen::Matrix3Xd lm = gather_points(shape, model.landmarks_68);
    for (int v = 0; v < 3; ++v)
    {
        const Eigen::Matrix2Xd stored = read_landmarks2d(dir / ("landmarks" + std::to_string(v) + ".txt"));
        ASSERT_EQ(stored.cols(), 68);
        // Independent projection: u = f x / z + cx, v = cy - f y / z.
        const RigidTransform T = pose_to_matrix(gt.poses[v]);
        for (int k = 0; k < 68; ++k)
        {
            const Eigen::Vector3d p = T.rotation * lm.col(k) + T.translation;
            const Eigen::Vector2d uv(cam.focal * p.x() / p.z() + cam.cx, cam.cy - cam.focal * p.y() / p.z());
            EXPECT_LT((stored.col(k) - uv).norm(), 1e-6) << "view " << v << " landmark " << k;
        }
    }
    EXPECT_EQ(read_landmarks3d(dir / "landmarks3d.txt"), gather_points(shape, model.landmarks_101));
}

TEST(GenToy, UnwritableOutputNamesPath)
{
    const fs::path dir = test::scratch_dir("cli_gen_bad");
    std::ofstream(dir / "blocker") << "x";
    const CmdRun r = run(cmd_gen_toy, small_bundle_args(dir / "blocker" / "sub"));
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("blocker"), std::string::npos) << r.err;
}

TEST(Fit, ToyBundleEndToEnd)
{
    const fs::path out = test::scratch_dir("cli_fit_out");
    FitArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.observation = shared_bundle();
    args.out = out;
    // The default 400 iterations end while every term is still falling; this budget settles.
    args.settings = {"iterations=1000"};
    const CmdRun r = run(cmd_fit, args);
    EXPECT_EQ(r.code, kExitOk) << r.err;
    for (const char* name : {"params.txt", "fitted.obj", "trace.csv", "pose_trace.csv"})
    {
        EXPECT_TRUE(fs::exists(out / name)) << name;
    }
    const double initial = std::stod(output_value(r.out, "initial_loss"));
    const double final_loss = std::stod(output_value(r.out, "final_loss"));
    EXPECT_LE(final_loss, initial / 10);
    EXPECT_EQ(output_value(r.out, "converged"), "true");

    // The CLI reproduces the library call exactly.
    const MorphableModel model = load_model(args.model);
    const Observation obs = read_observation(args.observation);
    const CameraIntrinsics cam = read_camera(args.observation / "camera.txt");
    FitConfig cfg;
    cfg.iterations = 1000;
    const FitResult lib = staged_fit(model, obs, cam, cfg, read_params(args.observation / "init_params.txt"));
    EXPECT_EQ(read_text_file(out / "params.txt"), format_params(lib.params));
    EXPECT_EQ(output_value(r.out, "final_loss"), format_double(lib.best_loss));

    // evaluate on the fitted mesh matches evaluate_reconstruction.
    EvaluateArgs ev;
    ev.pred = out / "fitted.obj";
    ev.gt = args.observation / "gt_mesh.obj";
    const CmdRun e = run(cmd_evaluate, ev);
    ASSERT_EQ(e.code, kExitOk) << e.err;
    const Mesh gt = read_mesh(ev.gt);
    const Evaluation want = evaluate_reconstruction(read_mesh(ev.pred), gt, default_crop_center(gt), ev.radius, true);
    EXPECT_EQ(output_value(e.out, "rmse_mm"), fixed6(want.rmse));
    EXPECT_EQ(output_value(e.out, "icp_residual_mm"), fixed6(want.registration.residual));
}

TEST(Fit, MissingMaskNamesTheView)
{
    const fs::path dir = test::scratch_dir("cli_fit_nomask");
    fs::copy(shared_bundle(), dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    fs::remove(dir / "mask1.pgm");
    FitArgs args;
    args.model = dir / "model.dfm";
    args.observation = dir;
    args.out = dir / "out";
    const CmdRun r = run(cmd_fit, args);
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("view 1"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out" / "params.txt"));
}

TEST(Fit, NoThreeDFlagZeroesTheColumn)
{
    FitArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.observation = shared_bundle();
    args.out = test::scratch_dir("cli_fit_no3d");
    args.settings = {"iterations=20", "pose_iterations=5"};
    args.no_3d = true;
    const CmdRun r = run(cmd_fit, args);
    ASSERT_NE(r.code, kExitError) << r.err;
    std::istringstream csv(read_text_file(args.out / "trace.csv"));
    std::string line;
    std::getline(csv, line);
    ASSERT_EQ(line, "iteration,L_p,L_m,L_2d,L_3d,L_reg,L_all");
    int rows = 0;
    while (std::getline(csv, line))
    {
        std::vector<std::string> cells;
        std::istringstream s(line);
        for (std::string c; std::getline(s, c, ',');)
        {
            cells.push_back(c);
        }
        ASSERT_EQ(cells.size(), 7u);
        EXPECT_EQ(std::stod(cells[4]), 0.0) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 20);

    args.no_3d = false;
    args.out = test::scratch_dir("cli_fit_with3d");
    ASSERT_NE(run(cmd_fit, args).code, kExitError);
    std::istringstream with3d(read_text_file(args.out / "trace.csv"));
    std::getline(with3d, line);
    std::getline(with3d, line);
    for (int k = 0; k < 4; ++k)
    {
        line = line.substr(line.find(',') + 1);
    }
    EXPECT_GT(std::stod(line.substr(0, line.find(','))), 0.0);
}

TEST(Fit, NonConvergenceExitsTwo)
{
    FitArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.observation = shared_bundle();
    args.out = test::scratch_dir("cli_fit_short");
    args.settings = {"iterations=3", "pose_iterations=3"};
    const CmdRun r = run(cmd_fit, args);
    EXPECT_EQ(r.code, kExitNotConverged) << r.err;
    EXPECT_EQ(output_value(r.out, "converged"), "false");
    EXPECT_TRUE(fs::exists(args.out / "params.txt"));
}

TEST(Fit, MalformedInputsExitOne)
{
    FitArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.observation = shared_bundle();
    args.out = test::scratch_dir("cli_fit_bad");
    args.settings = {"no_such_key=1"};
    CmdRun r = run(cmd_fit, args);
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("no_such_key"), std::string::npos) << r.err;

    args.settings = {"iterations=-4"};
    EXPECT_EQ(run(cmd_fit, args).code, kExitError);

    args.settings.clear();
    args.config = args.out / "cfg.txt";
    write_text_file(*args.config, "# comment\n\nstep_size=oops\n");
    r = run(cmd_fit, args);
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("step_size"), std::string::npos) << r.err;

    args.config.reset();
    args.model = args.out / "missing.dfm";
    EXPECT_EQ(run(cmd_fit, args).code, kExitError);
}

TEST(Config, FlagsOverrideFileOverrideDefaults)
{
    const fs::path dir = test::scratch_dir("cli_cfg");
    write_text_file(dir / "cfg.txt", "iterations=7\nstep_size=0.25\n");
    FitConfig cfg;
    apply_config_file(cfg, dir / "cfg.txt");
    const auto [key, value] = split_setting("iterations=9");
    apply_setting(cfg, key, value);
    EXPECT_EQ(cfg.iterations, 9);
    EXPECT_EQ(cfg.step_size, 0.25);
    EXPECT_EQ(cfg.clip_norm, FitConfig{}.clip_norm);

    FitConfig back;
    apply_config_text(back, format_fit_config(cfg), "round trip");
    EXPECT_EQ(format_fit_config(back), format_fit_config(cfg));
}

TEST(Render, GroundTruthMatchesStoredView)
{
    const fs::path dir = shared_bundle();
    for (int v = 0; v < 3; ++v)
    {
        RenderArgs args;
        args.model = dir / "model.dfm";
        args.params = dir / "gt_params.txt";
        args.view = v;
        args.camera = dir / "camera.txt";
        args.out = test::scratch_dir("cli_render_" + std::to_string(v));
        const CmdRun r = run(cmd_render, args);
        ASSERT_EQ(r.code, kExitOk) << r.err;
        const std::string stored = "view" + std::to_string(v) + ".ppm";
        EXPECT_EQ(file_bytes(args.out / "render.ppm"), file_bytes(dir / stored)) << "view " << v;
        EXPECT_EQ(file_bytes(args.out / "mask.pgm"), file_bytes(dir / ("mask" + std::to_string(v) + ".pgm")));
        for (const char* name : {"coverage.pgm", "depth.pgm"})
        {
            EXPECT_TRUE(fs::exists(args.out / name)) << name;
        }
    }
}

TEST(Render, ZeroParamsRenderTheMeanFace)
{
    const fs::path dir = test::scratch_dir("cli_render_mean");
    const MorphableModel model = load_model(shared_bundle() / "model.dfm");
    FaceParams zero = FaceParams::zeros(model, 3);
    zero.poses = nominal_rig(3);
    write_params(dir / "zero.txt", zero);
    RenderArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.params = dir / "zero.txt";
    args.view = 2;
    args.image_size = 64;
    args.out = dir / "out";
    ASSERT_EQ(run(cmd_render, args).code, kExitOk);

    const RenderedFrame frame = rasterize(model, model.mean_shape, evaluate_texture(model, zero.gamma),
                                          zero.poses[2], CameraIntrinsics::for_image(64, 64));
    write_ppm(dir / "want.ppm", frame.image());
    EXPECT_EQ(file_bytes(dir / "out" / "render.ppm"), file_bytes(dir / "want.ppm"));
}

TEST(Render, InvalidViewsExitOne)
{
    const fs::path dir = test::scratch_dir("cli_render_bad");
    RenderArgs args;
    args.model = shared_bundle() / "model.dfm";
    args.params = shared_bundle() / "gt_params.txt";
    args.out = dir / "out";
    args.view = 3;
    CmdRun r = run(cmd_render, args);
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("out of range"), std::string::npos) << r.err;
    args.view = -1;
    EXPECT_EQ(run(cmd_render, args).code, kExitError);

    FaceParams behind = read_params(args.params);
    behind.poses[0].translation = Eigen::Vector3d(0, 0, -1000);
    write_params(dir / "behind.txt", behind);
    args.params = dir / "behind.txt";
    args.view = 0;
    r = run(cmd_render, args);
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("near plane"), std::string::npos) << r.err;
}

TEST(Evaluate, IdenticalMeshesGiveZero)
{
    EvaluateArgs args;
    args.pred = shared_bundle() / "gt_mesh.obj";
    args.gt = shared_bundle() / "gt_mesh.obj";
    const CmdRun r = run(cmd_evaluate, args);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(output_value(r.out, "rmse_mm"), "0.000000");
}

TEST(Evaluate, PlaneOffset)
{
    const fs::path dir = test::scratch_dir("cli_eval_plane");
    const Mesh gt = plane_grid(20);
    Mesh pred = gt;
    pred.vertices.row(2).array() += 0.5;
    write_obj(dir / "gt.obj", gt);
    write_obj(dir / "pred.obj", pred);
    EvaluateArgs args;
    args.pred = dir / "pred.obj";
    args.gt = dir / "gt.obj";
    args.center = 0;
    args.radius = 1e3;
    args.register_first = false;
    args.errmap = dir / "err.ply";
    const CmdRun r = run(cmd_evaluate, args);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(output_value(r.out, "rmse_mm"), "0.500000");
    EXPECT_EQ(read_mesh(dir / "err.ply").num_vertices(), pred.num_vertices());
}

TEST(Evaluate, EmptyCropExitsOne)
{
    const fs::path dir = test::scratch_dir("cli_eval_empty");
    Mesh pred = plane_grid(5);
    pred.vertices.array() += 1e5;
    write_obj(dir / "pred.obj", pred);
    write_obj(dir / "gt.obj", plane_grid(5));
    EvaluateArgs args;
    args.pred = dir / "pred.obj";
    args.gt = dir / "gt.obj";
    args.center = 0;
    args.radius = 1.0;
    args.register_first = false;
    EXPECT_EQ(run(cmd_evaluate, args).code, kExitError);
}

TEST(Errmap, WritesColoredMesh)
{
    const fs::path dir = test::scratch_dir("cli_errmap");
    ErrmapArgs args;
    args.pred = shared_bundle() / "gt_mesh.obj";
    args.gt = shared_bundle() / "gt_mesh.obj";
    args.out = dir / "err.obj";
    const CmdRun r = run(cmd_errmap, args);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(output_value(r.out, "max_error_mm"), "0.000000");
    const Mesh m = read_mesh(args.out);
    ASSERT_EQ(m.colors.cols(), m.num_vertices());
    EXPECT_EQ(m.colors.col(0), Eigen::Vector3d(0, 0, 1));
}

TEST(RoundTrip, ParamsLandmarksCamera)
{
    const fs::path dir = test::scratch_dir("cli_round_trip");
    std::mt19937_64 rng(21);
    const MorphableModel& model = test::small_model();
    FaceParams p = FaceParams::zeros(model, 4);
    p.alpha = test::random_vector(rng, p.alpha.size(), -3, 3);
    p.beta = test::random_vector(rng, p.beta.size(), -3, 3);
    p.gamma = test::random_vector(rng, p.gamma.size(), -3, 3);
    for (auto& pose : p.poses)
    {
        pose.pitch = 0.1 + 0.2;
        pose.yaw = -1.0 / 3.0;
        pose.roll = 1e-300;
        pose.translation = test::random_vector(rng, 3, -2000, 2000);
    }
    write_params(dir / "p.txt", p);
    const FaceParams q = read_params(dir / "p.txt");
    EXPECT_EQ(q.alpha, p.alpha);
    EXPECT_EQ(q.beta, p.beta);
    EXPECT_EQ(q.gamma, p.gamma);
    ASSERT_EQ(q.poses.size(), p.poses.size());
    for (std::size_t v = 0; v < p.poses.size(); ++v)
    {
        EXPECT_EQ(q.poses[v].pitch, p.poses[v].pitch);
        EXPECT_EQ(q.poses[v].yaw, p.poses[v].yaw);
        EXPECT_EQ(q.poses[v].roll, p.poses[v].roll);
        EXPECT_EQ(q.poses[v].translation, p.poses[v].translation);
    }

    const Eigen::Matrix2Xd lm2 = test::random_matrix(rng, 2, 68, -100, 300);
    write_landmarks(dir / "l2.txt", lm2);
    EXPECT_EQ(read_landmarks2d(dir / "l2.txt"), lm2);
    const Eigen::Matrix3Xd lm3 = test::random_matrix(rng, 3, 101, -100, 100);
    write_landmarks(dir / "l3.txt", lm3);
    EXPECT_EQ(read_landmarks3d(dir / "l3.txt"), lm3);

    CameraIntrinsics cam = CameraIntrinsics::for_image(97, 53);
    cam.near = 0.7;
    write_camera(dir / "cam.txt", cam);
    const CameraIntrinsics c = read_camera(dir / "cam.txt");
    EXPECT_EQ(c.focal, cam.focal);
    EXPECT_EQ(c.cx, cam.cx);
    EXPECT_EQ(c.cy, cam.cy);
    EXPECT_EQ(c.width, cam.width);
    EXPECT_EQ(c.height, cam.height);
    EXPECT_EQ(c.near, cam.near);

    for (const double v : {0.0, -0.0, 1e-310, 1.0 / 3.0, 6.02214076e23, -2.5})
    {
        EXPECT_EQ(std::signbit(parse_double(format_double(v), "x")), std::signbit(v));
        EXPECT_EQ(parse_double(format_double(v), "x"), v);
    }
    EXPECT_THROW(parse_double("1.5x", "ctx"), InvalidArgument);
    write_text_file(dir / "bad.txt", "alpha 2 1\n");
    EXPECT_THROW(read_params(dir / "bad.txt"), std::exception);
}

TEST(RoundTrip, ImagesAndMasks)
{
    const fs::path dir = test::scratch_dir("cli_images");
    std::mt19937_64 rng(22);
    Image img(17, 9);
    for (auto& x : img.data)
    {
        x = std::uniform_real_distribution<double>(0, 1)(rng);
    }
    const Image q = quantize_8bit(img);
    write_ppm(dir / "a.ppm", img);
    EXPECT_EQ(read_ppm(dir / "a.ppm").data, q.data);
    write_ppm(dir / "b.ppm", q);
    EXPECT_EQ(file_bytes(dir / "a.ppm"), file_bytes(dir / "b.ppm"));

    LabelMask mask(13, 11);
    for (auto& l : mask.labels)
    {
        l = static_cast<std::uint8_t>(rng() % 10);
    }
    write_mask(dir / "m.pgm", mask);
    const LabelMask back = read_mask(dir / "m.pgm");
    EXPECT_EQ(back.width, 13);
    EXPECT_EQ(back.height, 11);
    EXPECT_EQ(back.labels, mask.labels);

    std::vector<std::uint16_t> depth(6 * 4);
    for (auto& d : depth)
    {
        d = static_cast<std::uint16_t>(rng());
    }
    write_pgm16(dir / "d.pgm", 6, 4, depth);
    const GrayImage g = read_pgm(dir / "d.pgm");
    EXPECT_EQ(g.maxval, 65535);
    EXPECT_EQ(g.pixels, depth);

    mask.labels[0] = 10;
    EXPECT_THROW(write_mask(dir / "bad.pgm", mask), IoError);
}
