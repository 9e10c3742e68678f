#pragma once

#include "factgs/diff_engine.hpp"
#include "factgs/scene.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace factgs {

/// Per-block learning rates. Texture covers rgb and raw_alpha texels.
struct LearningRates {
    double center = 1.6e-4;
    double scale = 5e-3;
    double rotation = 1e-3;
    double opacity = 5e-2;
    double sh = 2.5e-3;
    double texture = 2.5e-3;
    double deformation = 1e-3;

    double for_block(ParamBlock block) const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;   // added to sqrt(v_hat), 3DGS-lineage convention
    double grad_clip = 0.0; // per-scalar cap; 0 disables
};

/// First/second moment buffers shaped like the gradients, plus the shared
/// step counter.
struct OptimizerState {
    GradientSet m;
    GradientSet v;
    std::int64_t step = 0;

    static OptimizerState zeros_like(const Scene& scene);
};

/// All eight blocks enabled; stages mask this down to freeze blocks. Frozen
/// blocks keep both their parameters and their moments untouched.
using BlockMask = std::array<bool, 8>;
constexpr BlockMask kAllBlocks = {true, true, true, true, true, true, true, true};

/// One bias-corrected adaptive-moment update over the active blocks;
/// quaternions are renormalized afterwards. Throws ValidationError on a
/// non-finite gradient.
void adam_step(Scene& scene, const GradientSet& grads, OptimizerState& state,
               const LearningRates& rates, const AdamConfig& adam,
               const BlockMask& active = kAllBlocks);

struct TrainConfig {
    int stage1_iters = 2000;
    int stage2_iters = 2000;
    LearningRates rates;
    AdamConfig adam;
    RenderMode mode = RenderMode::Fact; // stage-2 appearance path
    double lambda = 1.0;                // warp scale, written into the scene
    double eta = 0.2;
    double mask_weight = 1.0;
    double fold_reg_weight = 0.0;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;        // snapshot cadence in iterations; 0 = never
    std::string checkpoint_path;     // snapshot target (overwritten)
    TapeConfig tape;
};

struct TrainResult {
    Scene scene;
    OptimizerState state;
    std::vector<double> loss_history; // one entry per iteration
};

/// Stage 1: optimizes the Gaussian blocks only, with textures and
/// deformations frozen at their neutral initialization (the texture path
/// contributes the neutral value). One seeded-random view per iteration.
TrainResult stage1_train(Scene scene, const std::vector<View>& views, const TrainConfig& cfg);

/// Stage 2: optimizes textures (and, in Fact mode, deformations) while
/// fine-tuning the Gaussian blocks. Fresh optimizer state (the parameter set
/// changes between stages); primitive count is invariant. Uniform mode
/// freezes the deformations at zero; NoTexture freezes all texture blocks.
TrainResult stage2_train(Scene scene, const std::vector<View>& views, const TrainConfig& cfg);

/// Checkpoint contents: the scene, the optimizer state, and the appearance
/// mode it was trained with.
struct Checkpoint {
    Scene scene;
    OptimizerState state;
    RenderMode mode = RenderMode::Uniform;
};

/// Binary checkpoint: magic "FACTGS01", format version, counts, a scene
/// configuration block (xi, background, lambda, mode), every parameter and
/// moment array as little-endian f64 in canonical block order, the step
/// counter, and a trailing CRC32 of everything before it. Save -> load ->
/// save round-trips byte-identically.
void save_checkpoint(const Scene& scene, const OptimizerState& state, RenderMode mode,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace factgs
