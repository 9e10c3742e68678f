#pragma once

#include "factgs/compositor.hpp"
#include "factgs/losses.hpp"
#include "factgs/param_blocks.hpp"
#include "factgs/scene.hpp"

#include <string>
#include <utility>
#include <vector>

namespace factgs {

/// Flat per-block gradient buffers; within a block, scalars follow the
/// visit_param_block order.
struct GradientSet {
    std::vector<double> center;      // n x 3
    std::vector<double> quaternion;  // n x 4 (w, x, y, z)
    std::vector<double> raw_scales;  // n x 2
    std::vector<double> raw_opacity; // n
    std::vector<double> sh;          // n x coeffs x 3
    std::vector<double> rgb;         // n x tau^2 x 3
    std::vector<double> raw_alpha;   // n x tau^2
    std::vector<double> disp;        // n x tau^2 x 2

    static GradientSet zeros_like(const Scene& scene);
    std::vector<double>& block(ParamBlock b);
    const std::vector<double>& block(ParamBlock b) const;
    /// Elementwise sum, used to fold per-worker buffers in worker order.
    void accumulate(const GradientSet& other);
};

/// Backward-pass execution policy. Deterministic mode accumulates pixel
/// adjoints serially in row-major order (bit-identical across runs and
/// thread counts); fast mode accumulates into per-worker buffers merged in
/// worker order (<= 1e-5 deviation across thread counts).
struct TapeConfig {
    enum class Mode { Deterministic, Fast };
    Mode mode = Mode::Deterministic;
    double transmittance_cutoff = kTransmittanceCutoff;
    int threads = 0; // 0 = hardware concurrency (forward pass always parallel)
};

/// Objective value used by training and finite differences: the mean of
/// total_loss over the views, plus fold_reg_weight * fold_penalty when that
/// weight is positive.
double forward_loss(const Scene& scene, const std::vector<View>& views, const LossConfig& cfg,
                    RenderMode mode, const TapeConfig& tape = {});

/// Reverse-mode gradients of forward_loss for every trainable parameter.
/// Fragments truncated by the transmittance cutoff receive exactly zero
/// gradient, matching the forward truncation. Throws ValidationError naming
/// the parameter block if any gradient turns out non-finite.
std::pair<double, GradientSet> backward(const Scene& scene, const std::vector<View>& views,
                                        const LossConfig& cfg, RenderMode mode,
                                        const TapeConfig& tape = {});
std::pair<double, GradientSet> backward(const Scene& scene, const View& view,
                                        const LossConfig& cfg, RenderMode mode,
                                        const TapeConfig& tape = {});

/// One row of a finite-difference comparison, worst offender per block.
struct BlockReport {
    ParamBlock block = ParamBlock::Center;
    std::size_t size = 0;
    double max_rel_error = 0.0;
    double analytic = 0.0;     // backward gradient at the worst coordinate
    double numeric = 0.0;      // central difference at the worst coordinate
    std::size_t worst_index = 0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<BlockReport> blocks;
    bool pass = true;
};

/// Central-difference validation of backward: perturbs every scalar by +-h
/// and compares. Relative error uses an absolute floor: coordinates where
/// |fd - grad| <= abs_floor count as exact.
GradCheckReport grad_check(const Scene& scene, const std::vector<View>& views,
                           const LossConfig& cfg, RenderMode mode, double h = 1e-4,
                           double tol = 1e-3, double abs_floor = 1e-6,
                           const TapeConfig& tape = {});

std::string format_report(const GradCheckReport& report);

} // namespace factgs
