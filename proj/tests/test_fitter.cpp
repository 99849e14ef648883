/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: tests/test_fitter.cpp
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

#include "dfmvr/config.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/fitter.hpp"
#include "dfmvr/observation.hpp"

#include "gtest/gtest.h"

#include <numbers>

using namespace dfmvr;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Scene
{
    FaceParams truth;
    Observation obs;
    CameraIntrinsics cam;
};

Scene make_scene(const MorphableModel& model, std::uint64_t seed, int image_size, bool quantize = true)
{
    ToySceneOptions opt;
    opt.image_size = image_size;
    Scene s;
    s.cam = CameraIntrinsics::for_image(image_size, image_size);
    s.truth = sample_ground_truth(model, seed, opt);
    s.obs = synthesize_observation(model, s.truth, s.cam, quantize);
    return s;
}

FaceParams coarse_init(const MorphableModel& model, int views)
{
    FaceParams p = FaceParams::zeros(model, views);
    p.poses = nominal_rig(views);
    return p;
}

Eigen::VectorXd flatten(const FaceParams& p)
{
    Eigen::VectorXd v(p.alpha.size() + p.beta.size() + p.gamma.size() + 6 * static_cast<Eigen::Index>(p.poses.size()));
    v.head(p.alpha.size()) = p.alpha;
    v.segment(p.alpha.size(), p.beta.size()) = p.beta;
    v.segment(p.alpha.size() + p.beta.size(), p.gamma.size()) = p.gamma;
    Eigen::Index k = p.alpha.size() + p.beta.size() + p.gamma.size();
    for (const auto& pose : p.poses)
    {
        v.segment<6>(k) << pose.pitch, pose.yaw, pose.roll, pose.translation;
        k += 6;
    }
    return v;
}

FaceParams unflatten(const Eigen::VectorXd& v, FaceParams p)
{
    p.alpha = v.head(p.alpha.size());
    p.beta = v.segment(p.alpha.size(), p.beta.size());
    p.gamma = v.segment(p.alpha.size() + p.beta.size(), p.gamma.size());
    Eigen::Index k = p.alpha.size() + p.beta.size() + p.gamma.size();
    for (auto& pose : p.poses)
    {
        pose.pitch = v(k);
        pose.yaw = v(k + 1);
        pose.roll = v(k + 2);
        pose.translation = v.segment<3>(k + 3);
        k += 6;
    }
    return p;
}

Eigen::VectorXd flatten(const ParamsGradient& g)
{
    Eigen::VectorXd v(g.d_alpha.size() + g.d_beta.size() + g.d_gamma.size() + 6 * static_cast<Eigen::Index>(g.d_poses.size()));
    v << g.d_alpha, g.d_beta, g.d_gamma, Eigen::VectorXd::Zero(6 * static_cast<Eigen::Index>(g.d_poses.size()));
    Eigen::Index k = g.d_alpha.size() + g.d_beta.size() + g.d_gamma.size();
    for (const auto& d : g.d_poses)
    {
        v.segment<6>(k) = d;
        k += 6;
    }
    return v;
}

void expect_same_trace(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].loss.total, b[i].loss.total) << "row " << i;
        EXPECT_EQ(a[i].loss.components.landmark3d, b[i].loss.components.landmark3d) << "row " << i;
    }
}

} // namespace

TEST(FitConfig, DefaultsAndValidation)
{
    const FitConfig cfg;
    EXPECT_EQ(cfg.iterations, 400);
    EXPECT_EQ(cfg.step_size, 5e-3);
    EXPECT_EQ(cfg.beta1, 0.9);
    EXPECT_EQ(cfg.beta2, 0.999);
    EXPECT_EQ(cfg.clip_norm, 10.0);
    EXPECT_NO_THROW(validate(cfg));
    for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
             {"iterations", "0"}, {"step_size", "-1"}, {"beta1", "1"}, {"beta2", "0"}, {"decay_start", "1.5"},
             {"pose_iterations", "-3"}, {"w_photo", "-1"}})
    {
        FitConfig c;
        EXPECT_THROW(
            {
                apply_setting(c, key, value);
                validate(c);
            },
            InvalidArgument)
            << key;
    }
}

TEST(FitConfig, ParsesSettingsAndRoundTrips)
{
    FitConfig cfg;
    apply_config_text(cfg,
                      "# comment\n\niterations=120\nstep_size=0.01\ndecay_start=1\nstage_order=joint-first\n"
                      "use_3d=false\nw_photo=2.5\nw_gamma=0.5\n",
                      "inline");
    EXPECT_EQ(cfg.iterations, 120);
    EXPECT_EQ(cfg.step_size, 0.01);
    EXPECT_EQ(cfg.decay_start, 1.0);
    EXPECT_EQ(cfg.stage_order, StageOrder::joint_first);
    EXPECT_FALSE(cfg.weights.use_3d);
    EXPECT_EQ(cfg.weights.photo, 2.5);
    EXPECT_EQ(cfg.weights.gamma, 0.5);

    FitConfig back;
    apply_config_text(back, format_fit_config(cfg), "formatted");
    EXPECT_EQ(format_fit_config(back), format_fit_config(cfg));

    EXPECT_THROW(apply_setting(cfg, "unknown_key", "1"), InvalidArgument);
    EXPECT_THROW(apply_setting(cfg, "iterations", "many"), InvalidArgument);
    EXPECT_THROW(split_setting("no equals sign"), InvalidArgument);
}

TEST(Fit, FixedPointStaysPut)
{
    const MorphableModel& model = test::small_model();
    const CameraIntrinsics cam = CameraIntrinsics::for_image(64, 64);
    ToySceneOptions opt;
    opt.image_size = 64;
    FaceParams init = sample_ground_truth(model, 3, opt);
    init.alpha.setZero();
    init.beta.setZero();
    init.gamma.setZero();
    const Observation obs = synthesize_observation(model, init, cam, false);
    FitConfig cfg;
    cfg.iterations = 50;
    const FitResult r = fit(model, obs, cam, cfg, init);
    EXPECT_LT(r.initial_loss, 1e-3);
    EXPECT_LT(r.trace.front().loss.total, 1e-3);
    EXPECT_LT((flatten(r.params) - flatten(init)).norm(), 1e-3);
}

TEST(Fit, BitIdenticalRepeats)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 4, 48);
    FitConfig cfg;
    cfg.iterations = 30;
    cfg.pose_iterations = 20;
    const FaceParams init = coarse_init(model, 3);
    const FitResult a = staged_fit(model, s.obs, s.cam, cfg, init);
    const FitResult b = staged_fit(model, s.obs, s.cam, cfg, init);
    expect_same_trace(a.trace, b.trace);
    expect_same_trace(a.pose_trace, b.pose_trace);
    EXPECT_EQ(flatten(a.params), flatten(b.params));
}

TEST(Fit, BestLossNeverRises)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 5, 48);
    FitConfig cfg;
    cfg.iterations = 60;
    const FitResult r = fit(model, s.obs, s.cam, cfg, coarse_init(model, 3));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : r.trace)
    {
        best = std::min(best, row.loss.total);
    }
    EXPECT_EQ(r.best_loss, best);
    EXPECT_LE(r.best_loss, r.initial_loss);
    EXPECT_EQ(r.trace.size(), 60u);
}

TEST(Fit, UnusedThreeDLandmarksDoNotMatter)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 6, 48);
    Observation without = s.obs;
    without.landmarks3d.reset();
    FitConfig cfg;
    cfg.iterations = 25;
    cfg.pose_iterations = 10;
    cfg.weights.landmark3d = 0.0;
    const FaceParams init = coarse_init(model, 3);
    const FitResult a = staged_fit(model, s.obs, s.cam, cfg, init);
    const FitResult b = staged_fit(model, without, s.cam, cfg, init);
    expect_same_trace(a.trace, b.trace);
    expect_same_trace(a.pose_trace, b.pose_trace);
    EXPECT_EQ(flatten(a.params), flatten(b.params));
}

TEST(Fit, GradientMatchesFiniteDifferences)
{
    const MorphableModel& model = test::small_model();
    std::mt19937_64 rng(7);
    int probes = 0;
    for (std::uint64_t seed = 10; probes < 3; ++seed)
    {
        const Scene s = make_scene(model, seed, 32);
        const FitProblem problem(model, s.obs, s.cam);
        // Halfway between the truth and the coarse initialization so every term is active.
        const Eigen::VectorXd x0 = 0.5 * (flatten(s.truth) + flatten(coarse_init(model, 3)));
        const FaceParams p0 = unflatten(x0, s.truth);
        ParamsGradient grad;
        problem.evaluate(p0, LossWeights{}, &grad);
        const Eigen::VectorXd analytic = flatten(grad);
        const auto f = [&](const Eigen::VectorXd& x) { return problem.evaluate(unflatten(x, p0), LossWeights{}).total; };

        std::uniform_int_distribution<Eigen::Index> pick(0, x0.size() - 1);
        Eigen::VectorXd an(10), fd(10);
        int n = 0;
        for (int attempt = 0; attempt < 200 && n < 10; ++attempt)
        {
            const Eigen::Index i = pick(rng);
            const bool angle = i >= x0.size() - 6 * 3 && (i - (x0.size() - 18)) % 6 < 3;
            const double h = angle ? 1e-7 : 1e-5;
            const auto central = [&](double step) {
                Eigen::VectorXd xp = x0, xm = x0;
                xp(i) += step;
                xm(i) -= step;
                return (f(xp) - f(xm)) / (2 * step);
            };
            const double d1 = central(h), d2 = central(h / 2);
            // A visibility change inside the probe shows up as step-size dependence; skip those coordinates.
            if (std::abs(d1 - d2) > 1e-3 * std::max({std::abs(d1), std::abs(d2), 1e-8}))
            {
                continue;
            }
            an(n) = analytic(i);
            fd(n) = d2;
            ++n;
        }
        ASSERT_EQ(n, 10);
        EXPECT_LT(test::relative_error(an, fd), 1e-2) << "seed " << seed << "\n" << an.transpose() << "\n" << fd.transpose();
        ++probes;
    }
}

TEST(StagedFit, PoseStageRecoversPerturbedPose)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 8, 128, false);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(-3.0 * kDeg, 3.0 * kDeg), lat(-10.0, 10.0);
    FaceParams init = s.truth;
    for (auto& pose : init.poses)
    {
        pose.pitch += ang(rng);
        pose.yaw += ang(rng);
        pose.roll += ang(rng);
        pose.translation += Eigen::Vector3d(lat(rng), lat(rng), 3 * lat(rng));
    }
    const FitResult r = fit_pose(model, s.obs, s.cam, FitConfig{}, init);
    for (std::size_t v = 0; v < init.poses.size(); ++v)
    {
        const ViewPose& got = r.params.poses[v];
        const ViewPose& want = s.truth.poses[v];
        EXPECT_LT(std::abs(got.pitch - want.pitch), 0.5 * kDeg) << "view " << v;
        EXPECT_LT(std::abs(got.yaw - want.yaw), 0.5 * kDeg) << "view " << v;
        EXPECT_LT(std::abs(got.roll - want.roll), 0.5 * kDeg) << "view " << v;
        EXPECT_LT((got.translation - want.translation).norm(), 0.01 * want.translation.norm()) << "view " << v;
    }
    const Eigen::Index coeffs = model.basis_id.cols() + model.basis_exp.cols() + model.basis_tex.cols();
    EXPECT_EQ(flatten(r.params).head(coeffs), flatten(init).head(coeffs));
}

TEST(StagedFit, SwappedOrderWarns)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 9, 32);
    FitConfig cfg;
    cfg.iterations = 5;
    cfg.pose_iterations = 5;
    cfg.stage_order = StageOrder::joint_first;
    const FitResult r = staged_fit(model, s.obs, s.cam, cfg, coarse_init(model, 3));
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_NE(r.warnings.front().find("joint-first"), std::string::npos);
    EXPECT_EQ(r.trace.size(), 5u);
    EXPECT_EQ(r.pose_trace.size(), 5u);
}

TEST(StagedFit, NoWorseThanPlainFitOnBenchmark)
{
    const MorphableModel model = generate_toy_model(1, 2000);
    for (const std::uint64_t seed : {1u, 2u})
    {
        const Scene s = make_scene(model, seed, 128);
        const FaceParams init = coarse_init(model, 3);
        const FitConfig cfg;
        const FitResult plain = fit(model, s.obs, s.cam, cfg, init);
        const FitResult staged = staged_fit(model, s.obs, s.cam, cfg, init);
        EXPECT_LE(staged.best_loss, plain.best_loss) << "seed " << seed;
        EXPECT_LE(staged.best_loss, staged.initial_loss / 10) << "seed " << seed;
    }
}

TEST(StagedFit, WiderBasinThanPlainFit)
{
    const MorphableModel model = generate_toy_model(1, 2000);
    const Scene s = make_scene(model, 1, 128);
    FaceParams init = coarse_init(model, 3);
    for (auto& pose : init.poses)
    {
        pose.yaw += 25.0 * kDeg;
        pose.translation.x() += 80.0;
    }
    const FitConfig cfg;
    const FitResult plain = fit(model, s.obs, s.cam, cfg, init);
    const FitResult staged = staged_fit(model, s.obs, s.cam, cfg, init);
    EXPECT_LT(landmark_reprojection_error(model, s.obs, s.cam, staged.params), 0.5);
    EXPECT_LT(staged.best_loss, 0.5 * plain.best_loss);
}

TEST(Fit, BadInitializationIsReported)
{
    const MorphableModel& model = test::small_model();
    const Scene s = make_scene(model, 11, 32);
    FaceParams init = coarse_init(model, 3);
    init.poses[1].translation = Eigen::Vector3d(0, 0, -500); // behind the camera
    EXPECT_THROW(fit(model, s.obs, s.cam, FitConfig{}, init), BadInitializationError);
    init.poses[1].translation = Eigen::Vector3d(5000, 0, 1100); // far off screen
    EXPECT_THROW(fit(model, s.obs, s.cam, FitConfig{}, init), BadInitializationError);
}

TEST(Fit, TraceCsv)
{
    std::vector<TraceRow> rows(2);
    rows[1].iteration = 1;
    rows[1].loss.components.photo = 0.5;
    rows[1].loss.total = 2.0;
    const std::string csv = format_trace_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,L_p,L_m,L_2d,L_3d,L_reg,L_all");
    EXPECT_NE(csv.find("\n1,0.5,"), std::string::npos);
}
