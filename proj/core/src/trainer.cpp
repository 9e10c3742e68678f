#include "factgs/trainer.hpp"

#include "factgs/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace factgs {

double LearningRates::for_block(ParamBlock block) const {
    switch (block) {
        case ParamBlock::Center: return center;
        case ParamBlock::Quaternion: return rotation;
        case ParamBlock::RawScales: return scale;
        case ParamBlock::RawOpacity: return opacity;
        case ParamBlock::Sh: return sh;
        case ParamBlock::Rgb: return texture;
        case ParamBlock::RawAlpha: return texture;
        case ParamBlock::Disp: return deformation;
    }
    return 0.0;
}

OptimizerState OptimizerState::zeros_like(const Scene& scene) {
    OptimizerState state;
    state.m = GradientSet::zeros_like(scene);
    state.v = GradientSet::zeros_like(scene);
    state.step = 0;
    return state;
}

void adam_step(Scene& scene, const GradientSet& grads, OptimizerState& state,
               const LearningRates& rates, const AdamConfig& adam, const BlockMask& active) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(adam.beta1, t);
    const double bias2 = 1.0 - std::pow(adam.beta2, t);

    for (std::size_t bi = 0; bi < kParamBlocks.size(); ++bi) {
        if (!active[bi]) continue;
        const ParamBlock b = kParamBlocks[bi];
        const std::vector<double>& g = grads.block(b);
        std::vector<double>& m = state.m.block(b);
        std::vector<double>& v = state.v.block(b);
        if (g.size() != param_block_size(scene, b) || m.size() != g.size() ||
            v.size() != g.size()) {
            throw ValidationError(std::string("adam_step: shape mismatch in block '") +
                                  param_block_name(b) + "'");
        }

        const double lr = rates.for_block(b);
        std::size_t idx = 0;
        visit_param_block(scene, b, [&](double& p) {
            double gi = g[idx];
            if (!std::isfinite(gi)) {
                throw ValidationError(std::string("adam_step: non-finite gradient in block '") +
                                      param_block_name(b) + "'");
            }
            if (adam.grad_clip > 0.0) {
                gi = std::clamp(gi, -adam.grad_clip, adam.grad_clip);
            }
            m[idx] = adam.beta1 * m[idx] + (1.0 - adam.beta1) * gi;
            v[idx] = adam.beta2 * v[idx] + (1.0 - adam.beta2) * gi * gi;
            const double m_hat = m[idx] / bias1;
            const double v_hat = v[idx] / bias2;
            p -= lr * m_hat / (std::sqrt(v_hat) + adam.eps);
            ++idx;
        });

        if (b == ParamBlock::Quaternion) {
            for (GaussianPrimitive& prim : scene.primitives) {
                const double n =
                    std::sqrt(prim.quaternion.w * prim.quaternion.w +
                              prim.quaternion.x * prim.quaternion.x +
                              prim.quaternion.y * prim.quaternion.y +
                              prim.quaternion.z * prim.quaternion.z);
                if (n > 0.0) {
                    prim.quaternion.w /= n;
                    prim.quaternion.x /= n;
                    prim.quaternion.y /= n;
                    prim.quaternion.z /= n;
                }
            }
        }
    }
}

namespace {

constexpr BlockMask kGaussianBlocks = {true, true, true, true, true, false, false, false};

BlockMask blocks_for_mode(RenderMode mode) {
    switch (mode) {
        case RenderMode::Fact: return kAllBlocks;
        case RenderMode::Uniform: {
            BlockMask mask = kAllBlocks;
            mask[static_cast<std::size_t>(ParamBlock::Disp)] = false;
            return mask;
        }
        case RenderMode::NoTexture: return kGaussianBlocks;
    }
    return kGaussianBlocks;
}

TrainResult run_stage(Scene scene, const std::vector<View>& views, const TrainConfig& cfg,
                      RenderMode mode, const BlockMask& active, int iters, std::uint64_t seed) {
    if (views.empty()) throw ValidationError("train: at least one view required");
    if (iters < 0) throw ValidationError("train: iteration count must be non-negative");

    TrainResult result;
    result.scene = std::move(scene);
    result.scene.lambda = cfg.lambda;
    result.state = OptimizerState::zeros_like(result.scene);
    result.loss_history.reserve(static_cast<std::size_t>(iters));

    LossConfig loss_cfg;
    loss_cfg.eta = cfg.eta;
    loss_cfg.mask_weight = cfg.mask_weight;
    loss_cfg.fold_reg_weight = cfg.fold_reg_weight;

    // gen() % size rather than uniform_int_distribution: the raw engine output
    // is pinned by the standard, so view schedules reproduce across platforms.
    std::mt19937_64 gen(seed);
    for (int it = 0; it < iters; ++it) {
        const View& view = views[static_cast<std::size_t>(gen() % views.size())];
        auto [loss, grads] = backward(result.scene, view, loss_cfg, mode, cfg.tape);
        adam_step(result.scene, grads, result.state, cfg.rates, cfg.adam, active);
        result.loss_history.push_back(loss);
        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
            (it + 1) % cfg.checkpoint_every == 0) {
            save_checkpoint(result.scene, result.state, mode, cfg.checkpoint_path);
        }
    }
    return result;
}

} // namespace

TrainResult stage1_train(Scene scene, const std::vector<View>& views, const TrainConfig& cfg) {
    return run_stage(std::move(scene), views, cfg, RenderMode::Uniform, kGaussianBlocks,
                     cfg.stage1_iters, cfg.seed);
}

TrainResult stage2_train(Scene scene, const std::vector<View>& views, const TrainConfig& cfg) {
    const std::size_t count_before = scene.size();
    TrainResult result = run_stage(std::move(scene), views, cfg, cfg.mode,
                                   blocks_for_mode(cfg.mode), cfg.stage2_iters, cfg.seed + 1);
    assert(result.scene.size() == count_before);
    (void)count_before;
    return result;
}

} // namespace factgs
