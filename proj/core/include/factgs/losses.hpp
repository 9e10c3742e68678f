#pragma once

#include "factgs/compositor.hpp"
#include "factgs/image.hpp"
#include "factgs/scene.hpp"

#include <string>
#include <vector>

namespace factgs {

/// Training-objective weights: eta blends L1 against structural
/// dissimilarity, mask_weight scales the alpha term (active only when the
/// view carries a mask), fold_reg_weight scales the optional fold penalty
/// (applied by the backward pass, which owns scene access).
struct LossConfig {
    double eta = 0.2;
    double mask_weight = 1.0;
    double fold_reg_weight = 0.0;
};

/// Mean absolute error over all pixels and channels. Shapes must match.
double l1_loss(const Image& a, const Image& b);

/// Structural similarity: 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
/// C2=0.03^2, computed over windows fully inside the image, per channel then
/// averaged. Throws ValidationError when either side is smaller than 11.
double ssim_index(const Image& a, const Image& b);

/// ssim_index plus its derivative with respect to `a` (same shape as `a`);
/// `b` is treated as constant.
double ssim_index_grad(const Image& a, const Image& b, Image& d_a);

/// 10*log10(1 / MSE) in dB; +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

/// eta*L1 + (1-eta)*(1 - SSIM) + mask_weight*mean|alpha - mask|. The SSIM
/// term is skipped entirely when eta == 1 (so small images train L1-only);
/// the mask term is zero for views without a mask. The fold penalty is not
/// included here (it depends on the scene, not the rendering).
double total_loss(const RenderOutput& rendered, const View& view, const LossConfig& cfg);

/// total_loss value plus derivatives with respect to the rendered color and
/// alpha planes, for consumption by the backward pass.
struct LossGradients {
    double value = 0.0;
    Image d_color;
    Image d_alpha;
};
LossGradients total_loss_grad(const RenderOutput& rendered, const View& view,
                              const LossConfig& cfg);

/// Mean Sobel gradient magnitude sqrt(gx^2+gy^2) over all texels and RGB
/// channels, replicate boundary padding. Constant textures score 0.
double texture_frequency(const TextureMap& texture);

/// Mean squared negative part of det J over all texel centers of all
/// deformation fields: penalizes folds (det <= 0). Forward value only; the
/// backward pass owns its gradient.
double fold_penalty(const Scene& scene);

/// (||grad C|| + epsilon)^alpha_exp per pixel: the unnormalized target
/// sampling density of a reference patch. Central differences inside,
/// one-sided at borders; channel gradients combined by Euclidean norm.
/// Diagnostic only - training never consumes this map.
Image target_density(const Image& patch, double alpha_exp, double epsilon);

/// |det J| of the warp sampled at the centers of a resolution^2 grid over
/// the [0,tau]^2 texture domain.
Image jacobian_density_map(const DeformationField& field, double lambda, int resolution);

/// Per-texture frequency statistics for a scene, histogrammed over uniform
/// bins spanning [0, max].
struct FrequencyReport {
    std::vector<double> per_texture_freq;
    std::vector<double> bin_edges; // bins + 1 entries
    std::vector<int> counts;       // bins entries, summing to texture count
    double mean = 0.0;
    double median = 0.0;
};

FrequencyReport frequency_report(const std::vector<TextureMap>& textures, int bins = 32);

/// CSV emission: per-texture rows `texture_index,freq` and histogram rows
/// `bin_low,bin_high,count`.
void write_frequency_csv(const FrequencyReport& report, const std::string& per_texture_path,
                         const std::string& histogram_path);

} // namespace factgs
