/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/fitter.cpp
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
#include "dfmvr/fitter.hpp"
#include "dfmvr/errors.hpp"
#include "dfmvr/parallel.hpp"
#include "dfmvr/params_io.hpp"
#include "dfmvr/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dfmvr {

void validate(const FitConfig& cfg)
{
    if (cfg.iterations <= 0 || cfg.pose_iterations <= 0)
    {
        throw InvalidArgument("iteration counts must be positive");
    }
    if (!(cfg.step_size > 0.0) || !(cfg.pose_step_size > 0.0))
    {
        throw InvalidArgument("step sizes must be positive");
    }
    if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    {
        throw InvalidArgument("moment decay rates must lie in (0, 1)");
    }
    if (!(cfg.decay_start >= 0.0 && cfg.decay_start <= 1.0))
    {
        throw InvalidArgument("decay_start must lie in [0, 1]");
    }
    if (!(cfg.epsilon > 0.0) || !(cfg.clip_norm > 0.0) || !(cfg.tolerance >= 0.0) || !(cfg.translation_scale > 0.0))
    {
        throw InvalidArgument("epsilon, clip norm and translation scale must be positive, tolerance non-negative");
    }
    if (cfg.dilation_radius < 0)
    {
        throw InvalidArgument("dilation radius must be non-negative");
    }
    validate(cfg.weights);
}

namespace {

double step_schedule(double base, double decay_start, int it, int iterations)
{
    const double begin = decay_start * iterations;
    if (it <= begin)
    {
        return base;
    }
    const double phase = (it - begin) / (iterations - begin);
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

void check_finite(double value, const char* term)
{
    if (!std::isfinite(value))
    {
        throw NumericalError(std::string("non-finite value in the ") + term + " term");
    }
}

template <class Container>
void check_finite_all(const Container& c, const char* term)
{
    for (const auto& v : c)
    {
        if (!std::isfinite(v))
        {
            throw NumericalError(std::string("non-finite gradient in the ") + term + " term");
        }
    }
}

void check_finite_matrix(const Eigen::MatrixXd& m, const char* term)
{
    if (!m.allFinite())
    {
        throw NumericalError(std::string("non-finite gradient in the ") + term + " term");
    }
}

} // namespace

FitProblem::FitProblem(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                       int dilation_radius)
    : model_(model), obs_(obs), cam_(cam)
{
    validate(model);
    validate(obs);
    validate(cam);
    if (obs.views[0].image.width != cam.width || obs.views[0].image.height != cam.height)
    {
        throw InvalidArgument("observation images do not match the camera resolution");
    }
    for (const auto& v : obs.views)
    {
        weight_maps_.push_back(make_weight_map(v.mask, dilation_radius));
        originals_.push_back(v.image);
        masks_.push_back(v.mask);
        landmarks_.push_back(v.landmarks);
    }
    for (const int a : model.align_7)
    {
        const auto it = std::find(model.landmarks_101.begin(), model.landmarks_101.end(), a);
        if (it == model.landmarks_101.end())
        {
            throw InvalidArgument("alignment vertex " + std::to_string(a) + " is not among the 101 landmarks");
        }
        align_in_101_.push_back(static_cast<int>(it - model.landmarks_101.begin()));
    }
}

LossBreakdown FitProblem::evaluate(const FaceParams& params, const LossWeights& weights, ParamsGradient* grad) const
{
    const int views = obs_.num_views();
    validate(params, model_, views);
    const TotalLoss coef = total_loss(LossComponents{}, weights);
    const bool use_3d = coef.coefficients.landmark3d > 0.0 && obs_.landmarks3d.has_value();
    const bool render = coef.coefficients.photo > 0.0 || coef.coefficients.mask > 0.0;

    const Eigen::VectorXd shape = evaluate_shape(model_, params.alpha, params.beta);
    const Eigen::VectorXd tex_raw = evaluate_texture_unclamped(model_, params.gamma);
    const Eigen::VectorXd tex = tex_raw.cwiseMax(0.0).cwiseMin(1.0);

    LossComponents c;
    std::vector<RenderedFrame> frames(render ? views : 0);
    PhotoLossResult photo;
    MaskLossResult mask;
    if (render)
    {
        parallel_for(views, [&](int v) { frames[v] = rasterize(model_, shape, tex, params.poses[v], cam_); });
        if (coef.coefficients.photo > 0.0)
        {
            std::vector<Image> rendered;
            std::vector<std::vector<std::uint8_t>> coverage;
            for (const auto& f : frames)
            {
                rendered.push_back(f.image());
                coverage.push_back(f.coverage);
            }
            photo = photo_loss(originals_, masks_, rendered, coverage, weight_maps_);
            c.photo = photo.value;
            check_finite(c.photo, "photo");
        }
        if (coef.coefficients.mask > 0.0)
        {
            std::vector<std::vector<double>> probs;
            for (const auto& f : frames)
            {
                probs.push_back(f.class_probs);
            }
            mask = mask_loss(masks_, probs);
            c.mask = mask.value;
            check_finite(c.mask, "mask");
        }
    }

    const Eigen::Matrix3Xd lm68 = gather_points(shape, model_.landmarks_68);
    std::vector<Eigen::Matrix2Xd> projected(views);
    std::vector<Eigen::Matrix3Xd> cam_points(views);
    Landmark2dLossResult lm2d;
    if (coef.coefficients.landmark2d > 0.0)
    {
        for (int v = 0; v < views; ++v)
        {
            cam_points[v] = to_camera(lm68, params.poses[v]);
            projected[v] = project(cam_points[v], cam_);
        }
        lm2d = landmark2d_loss(landmarks_, projected, weights.landmark_pointwise);
        c.landmark2d = lm2d.value;
        check_finite(c.landmark2d, "2D landmark");
    }
    Landmark3dLossResult lm3d;
    if (use_3d)
    {
        const Eigen::Matrix3Xd pred3d = gather_points(shape, model_.landmarks_101);
        lm3d = landmark3d_loss(*obs_.landmarks3d, pred3d, align_in_101_);
        c.landmark3d = lm3d.value;
        lm3d.d_pred += landmark3d_alignment_gradient(*obs_.landmarks3d, pred3d, align_in_101_, lm3d);
        check_finite(c.landmark3d, "3D landmark");
    }
    const RegularizationLossResult reg = regularization_loss(params, weights);
    c.reg = reg.value;
    check_finite(c.reg, "regularization");

    LossBreakdown out;
    out.components = c;
    out.total = total_loss(c, weights).value;
    if (!grad)
    {
        return out;
    }

    const int nv = model_.num_vertices();
    Eigen::Matrix3Xd d_shape = Eigen::Matrix3Xd::Zero(3, nv);
    Eigen::Matrix3Xd d_tex = Eigen::Matrix3Xd::Zero(3, nv);
    grad->d_poses.assign(views, Eigen::Matrix<double, 6, 1>::Zero());

    if (render)
    {
        std::vector<RasterGradients> rg(views);
        if (coef.coefficients.photo > 0.0)
        {
            for (const auto& g : photo.d_rendered)
            {
                check_finite_all(g, "photo");
            }
        }
        if (coef.coefficients.mask > 0.0)
        {
            for (const auto& g : mask.d_probs)
            {
                check_finite_all(g, "mask");
            }
        }
        parallel_for(views, [&](int v) {
            const std::size_t npix = static_cast<std::size_t>(frames[v].width) * frames[v].height;
            std::vector<double> d_color, d_class;
            if (coef.coefficients.photo > 0.0)
            {
                d_color.resize(npix * 3);
                for (std::size_t i = 0; i < d_color.size(); ++i)
                {
                    d_color[i] = coef.coefficients.photo * photo.d_rendered[v][i];
                }
            }
            if (coef.coefficients.mask > 0.0)
            {
                d_class.resize(npix * kNumClasses);
                for (std::size_t i = 0; i < d_class.size(); ++i)
                {
                    d_class[i] = coef.coefficients.mask * mask.d_probs[v][i];
                }
            }
            rg[v] = rasterize_backward(frames[v], d_color, d_class);
        });
        for (int v = 0; v < views; ++v)
        {
            d_shape += rg[v].d_points;
            d_tex += rg[v].d_colors;
            grad->d_poses[v] += rg[v].d_pose;
        }
        check_finite_matrix(d_shape, "rendering (photo and mask)");
        check_finite_matrix(d_tex, "rendering (photo and mask)");
    }

    if (coef.coefficients.landmark2d > 0.0)
    {
        for (int v = 0; v < views; ++v)
        {
            check_finite_matrix(lm2d.d_pred[v], "2D landmark");
            const RigidTransform rt = pose_to_matrix(params.poses[v]);
            const auto dr = rotation_jacobians(params.poses[v]);
            for (int n = 0; n < kNumLandmarks2d; ++n)
            {
                const Eigen::Vector3d d_cam = projection_jacobian(cam_points[v].col(n), cam_).transpose() *
                                              (coef.coefficients.landmark2d * lm2d.d_pred[v].col(n));
                d_shape.col(model_.landmarks_68[n]) += rt.rotation.transpose() * d_cam;
                for (int k = 0; k < 3; ++k)
                {
                    grad->d_poses[v](k) += d_cam.dot(dr[k] * lm68.col(n));
                }
                grad->d_poses[v].tail<3>() += d_cam;
            }
        }
    }
    if (use_3d)
    {
        check_finite_matrix(lm3d.d_pred, "3D landmark");
        for (int i = 0; i < kNumLandmarks3d; ++i)
        {
            d_shape.col(model_.landmarks_101[i]) += coef.coefficients.landmark3d * lm3d.d_pred.col(i);
        }
    }

    // Clamped texture components pass no gradient.
    for (Eigen::Index i = 0; i < tex_raw.size(); ++i)
    {
        if (tex_raw(i) < 0.0 || tex_raw(i) > 1.0)
        {
            d_tex.data()[i] = 0.0;
        }
    }
    const Eigen::Map<const Eigen::VectorXd> ds(d_shape.data(), 3 * nv), dt(d_tex.data(), 3 * nv);
    grad->d_alpha = model_.basis_id.transpose() * ds + coef.coefficients.reg * reg.d_alpha;
    grad->d_beta = model_.basis_exp.transpose() * ds + coef.coefficients.reg * reg.d_beta;
    grad->d_gamma = model_.basis_tex.transpose() * dt + coef.coefficients.reg * reg.d_gamma;
    return out;
}

namespace {

struct Layout
{
    Eigen::Index na, nb, ng;
    int views;
    Eigen::Index size() const { return na + nb + ng + 6 * views; }
};

Eigen::VectorXd pack(const FaceParams& p, const Layout& l, double ts)
{
    Eigen::VectorXd x(l.size());
    x << p.alpha, p.beta, p.gamma, Eigen::VectorXd::Zero(6 * l.views);
    for (int v = 0; v < l.views; ++v)
    {
        const auto& pose = p.poses[v];
        x.segment<6>(l.na + l.nb + l.ng + 6 * v) << pose.pitch, pose.yaw, pose.roll, pose.translation / ts;
    }
    return x;
}

FaceParams unpack(const Eigen::VectorXd& x, const Layout& l, double ts)
{
    FaceParams p;
    p.alpha = x.segment(0, l.na);
    p.beta = x.segment(l.na, l.nb);
    p.gamma = x.segment(l.na + l.nb, l.ng);
    p.poses.resize(l.views);
    for (int v = 0; v < l.views; ++v)
    {
        const auto s = x.segment<6>(l.na + l.nb + l.ng + 6 * v);
        p.poses[v] = ViewPose{s(0), s(1), s(2), ts * s.tail<3>()};
    }
    return p;
}

Eigen::VectorXd pack_gradient(const ParamsGradient& g, const Layout& l, double ts)
{
    Eigen::VectorXd x(l.size());
    x << g.d_alpha, g.d_beta, g.d_gamma, Eigen::VectorXd::Zero(6 * l.views);
    for (int v = 0; v < l.views; ++v)
    {
        auto s = x.segment<6>(l.na + l.nb + l.ng + 6 * v);
        s = g.d_poses[v];
        s.tail<3>() *= ts;
    }
    return x;
}

struct StageSettings
{
    LossWeights weights;
    int iterations;
    double step_size;
    bool pose_only;
};

FitResult run_adam(const FitProblem& problem, const FitConfig& cfg, const StageSettings& stage, const FaceParams& init)
{
    const MorphableModel& model = problem.model();
    const Layout layout{model.basis_id.cols(), model.basis_exp.cols(), model.basis_tex.cols(),
                        problem.observation().num_views()};
    const double ts = cfg.translation_scale;
    Eigen::VectorXd x = pack(init, layout, ts);
    Eigen::VectorXd active = Eigen::VectorXd::Ones(layout.size());
    if (stage.pose_only)
    {
        active.head(layout.na + layout.nb + layout.ng).setZero();
    }
    Eigen::VectorXd m = Eigen::VectorXd::Zero(layout.size()), s = Eigen::VectorXd::Zero(layout.size());

    FitResult r;
    r.params = init;
    r.best_loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x;
    for (int it = 0; it < stage.iterations; ++it)
    {
        const FaceParams current = unpack(x, layout, ts);
        ParamsGradient g;
        LossBreakdown loss;
        try
        {
            loss = problem.evaluate(current, stage.weights, &g);
        } catch (const EmptyOverlapError& e)
        {
            if (it == 0)
            {
                throw BadInitializationError(std::string("initial parameters: ") + e.what());
            }
            r.stopped_early = true;
            r.warnings.push_back("iteration " + std::to_string(it) + ": " + e.what() + "; returning the best iterate");
            break;
        } catch (const BehindCameraError& e)
        {
            if (it == 0)
            {
                throw BadInitializationError(std::string("initial parameters: ") + e.what());
            }
            r.stopped_early = true;
            r.warnings.push_back("iteration " + std::to_string(it) + ": " + e.what() + "; returning the best iterate");
            break;
        }
        r.trace.push_back(TraceRow{it, loss});
        if (it == 0)
        {
            r.initial_loss = loss.total;
        }
        if (loss.total < r.best_loss)
        {
            r.best_loss = loss.total;
            r.best_iteration = it;
            best_x = x;
        }

        Eigen::VectorXd d = pack_gradient(g, layout, ts).cwiseProduct(active);
        if (!d.allFinite())
        {
            throw NumericalError("non-finite gradient while assembling the parameter update");
        }
        const double norm = d.norm();
        if (norm > cfg.clip_norm)
        {
            d *= cfg.clip_norm / norm;
        }
        const double lr = step_schedule(stage.step_size, cfg.decay_start, it, stage.iterations);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * d;
        s = cfg.beta2 * s + (1.0 - cfg.beta2) * d.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.beta1, it + 1), c2 = 1.0 - std::pow(cfg.beta2, it + 1);
        x -= (lr * (m / c1).array() / ((s / c2).array().sqrt() + cfg.epsilon)).matrix();
    }
    r.params = unpack(best_x, layout, ts);

    const int n = static_cast<int>(r.trace.size());
    const int window = std::max(1, stage.iterations / 10);
    if (!r.stopped_early && n > window)
    {
        double before = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n - window; ++i)
        {
            before = std::min(before, r.trace[i].loss.total);
        }
        const double gain = before - r.best_loss;
        r.converged = before == 0.0 ? true : gain / std::abs(before) < cfg.tolerance;
    }
    return r;
}

StageSettings joint_stage(const FitConfig& cfg)
{
    return {cfg.weights, cfg.iterations, cfg.step_size, false};
}

StageSettings pose_stage(const FitConfig& cfg)
{
    StageSettings s{cfg.weights, cfg.pose_iterations, cfg.pose_step_size, true};
    s.weights.photo = 0.0;
    s.weights.mask = 0.0;
    s.weights.reg = 0.0;
    return s;
}

double initial_objective(const FitProblem& problem, const LossWeights& weights, const FaceParams& init)
{
    try
    {
        return problem.evaluate(init, weights).total;
    } catch (const EmptyOverlapError& e)
    {
        throw BadInitializationError(std::string("initial parameters: ") + e.what());
    } catch (const BehindCameraError& e)
    {
        throw BadInitializationError(std::string("initial parameters: ") + e.what());
    }
}

} // namespace

FitResult fit(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam, const FitConfig& cfg,
              const FaceParams& init)
{
    validate(cfg);
    const FitProblem problem(model, obs, cam, cfg.dilation_radius);
    return run_adam(problem, cfg, joint_stage(cfg), init);
}

FitResult fit_pose(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                   const FitConfig& cfg, const FaceParams& init)
{
    validate(cfg);
    const FitProblem problem(model, obs, cam, cfg.dilation_radius);
    return run_adam(problem, cfg, pose_stage(cfg), init);
}

FitResult staged_fit(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                     const FitConfig& cfg, const FaceParams& init)
{
    validate(cfg);
    const FitProblem problem(model, obs, cam, cfg.dilation_radius);
    const double initial = initial_objective(problem, cfg.weights, init);
    FitResult result;
    if (cfg.stage_order == StageOrder::landmarks_first)
    {
        const FitResult pose = run_adam(problem, cfg, pose_stage(cfg), init);
        result = run_adam(problem, cfg, joint_stage(cfg), pose.params);
        result.pose_trace = pose.trace;
        result.warnings.insert(result.warnings.begin(), pose.warnings.begin(), pose.warnings.end());
    } else
    {
        result = run_adam(problem, cfg, joint_stage(cfg), init);
        const FitResult pose = run_adam(problem, cfg, pose_stage(cfg), result.params);
        result.warnings.insert(result.warnings.begin(),
                               "stage order is joint-first: the landmark pose stage runs after the joint fit, "
                               "which usually narrows the basin of attraction");
        result.warnings.insert(result.warnings.end(), pose.warnings.begin(), pose.warnings.end());
        result.pose_trace = pose.trace;
        result.params = pose.params;
        result.best_loss = problem.evaluate(result.params, cfg.weights).total;
    }
    result.initial_loss = initial;
    return result;
}

double landmark_reprojection_error(const MorphableModel& model, const Observation& obs, const CameraIntrinsics& cam,
                                   const FaceParams& params)
{
    validate(obs);
    validate(params, model, obs.num_views());
    const Eigen::VectorXd shape = evaluate_shape(model, params.alpha, params.beta);
    const Eigen::Matrix3Xd lm = gather_points(shape, model.landmarks_68);
    double sum = 0.0;
    for (int v = 0; v < obs.num_views(); ++v)
    {
        const Eigen::Matrix2Xd p = project(to_camera(lm, params.poses[v]), cam);
        sum += (p - obs.views[v].landmarks).colwise().norm().sum();
    }
    return sum / (static_cast<double>(kNumLandmarks2d) * obs.num_views());
}

std::string format_trace_csv(const std::vector<TraceRow>& trace)
{
    std::string out = "iteration,L_p,L_m,L_2d,L_3d,L_reg,L_all\n";
    for (const auto& row : trace)
    {
        const auto& c = row.loss.components;
        out += std::to_string(row.iteration);
        for (const double v : {c.photo, c.mask, c.landmark2d, c.landmark3d, c.reg, row.loss.total})
        {
            out += ',' + format_double(v);
        }
        out += '\n';
    }
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace)
{
    write_text_file(path, format_trace_csv(trace));
}

} // namespace dfmvr
